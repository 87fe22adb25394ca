"""Binary CSP instances over a fixed finite algebra.

An :class:`Instance` carries one potato ``P_x`` per variable and a relation
``R_xy`` for every ordered pair of variables (the diagonal included).  A
:class:`RawInstance` is an arbitrary list of unary and binary constraints;
:func:`two_three_consistency` turns it into a standard instance with the same
solutions.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .algebra import AlgebraError, FiniteAlgebra, Term, binary_table, subuniverse_closure

#: default cap on the product of potato sizes for exhaustive search
SEARCH_BOUND = 10 ** 7

Pair = tuple[int, int]
Assignment = dict


class InstanceError(ValueError):
    code = "invalid_instance"


class PartialAssignmentError(InstanceError):
    code = "partial_assignment"


class SearchBoundError(InstanceError):
    code = "search_bound_exceeded"


class NotASolutionError(InstanceError):
    code = "not_a_solution"


class NotStandardError(InstanceError):
    code = "not_standard"


def _mask(elements: Iterable[int]) -> int:
    m = 0
    for a in elements:
        m |= 1 << a
    return m


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _rows(pairs: Iterable[Pair], n: int) -> list[int]:
    rows = [0] * n
    for a, b in pairs:
        rows[a] |= 1 << b
    return rows


@dataclass(frozen=True)
class Instance:
    algebra: FiniteAlgebra
    variables: tuple[str, ...]
    potatoes: tuple[frozenset, ...]
    relations: Mapping[Pair, frozenset] = field(repr=False)

    def __post_init__(self):
        m = len(self.variables)
        if len(set(self.variables)) != m:
            raise InstanceError("variable names must be distinct")
        if len(self.potatoes) != m:
            raise InstanceError("one potato per variable is required")
        n = self.algebra.size
        for x, pot in enumerate(self.potatoes):
            if any(not 0 <= a < n for a in pot):
                raise InstanceError(f"potato of {self.variables[x]!r} leaves 0..{n - 1}")
        for x in range(m):
            for y in range(m):
                rel = self.relations.get((x, y))
                if rel is None:
                    raise InstanceError(f"missing relation for ({self.variables[x]}, {self.variables[y]})")
                px, py = self.potatoes[x], self.potatoes[y]
                for a, b in rel:
                    if a not in px or b not in py:
                        raise InstanceError(
                            f"R[{self.variables[x]},{self.variables[y]}] contains ({a},{b}) outside P x P"
                        )

    # -- construction

    @classmethod
    def build(
        cls,
        algebra: FiniteAlgebra,
        variables: Sequence[str],
        potatoes: Mapping[str, Iterable[int]],
        relations: Mapping[tuple[str, str], Iterable[Pair]],
    ) -> "Instance":
        """Build from names.  A missing ``(y, x)`` is the inverse of ``(x, y)``;
        a missing diagonal is ``0_P``; a pair missing both ways is ``P x P``."""
        variables = tuple(variables)
        pos = {v: i for i, v in enumerate(variables)}
        pots = tuple(frozenset(int(a) for a in potatoes[v]) for v in variables)
        rels: dict[Pair, frozenset] = {}
        for (x, y), rel in relations.items():
            rels[pos[x], pos[y]] = frozenset((int(a), int(b)) for a, b in rel)
        for i in range(len(variables)):
            for j in range(len(variables)):
                if (i, j) in rels:
                    continue
                if (j, i) in rels:
                    rels[i, j] = frozenset((b, a) for a, b in rels[j, i])
                elif i == j:
                    rels[i, j] = frozenset((a, a) for a in pots[i])
                else:
                    rels[i, j] = frozenset((a, b) for a in pots[i] for b in pots[j])
        return cls(algebra, variables, pots, rels)

    @classmethod
    def full(cls, algebra: FiniteAlgebra, variables: Sequence[str]) -> "Instance":
        universe = range(algebra.size)
        return cls.build(algebra, variables, {v: universe for v in variables}, {})

    # -- access

    def index(self, var: str) -> int:
        try:
            return self.variables.index(var)
        except ValueError:
            raise InstanceError(f"unknown variable {var!r}") from None

    def potato(self, var: str) -> frozenset:
        return self.potatoes[self.index(var)]

    def relation(self, x: str, y: str) -> frozenset:
        return self.relations[self.index(x), self.index(y)]

    def is_empty(self) -> bool:
        return any(not p for p in self.potatoes)

    def potato_mask(self, x: int) -> int:
        return _mask(self.potatoes[x])

    def row_masks(self) -> dict[Pair, list[int]]:
        n = self.algebra.size
        return {key: _rows(rel, n) for key, rel in self.relations.items()}

    def total_size(self) -> int:
        return sum(len(p) for p in self.potatoes)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.algebra == other.algebra
            and self.variables == other.variables
            and self.potatoes == other.potatoes
            and dict(self.relations) == dict(other.relations)
        )

    __hash__ = None

    # -- closure audit

    def closure_problems(self) -> list[str]:
        """Potatoes and relations that are not subuniverses."""
        problems = []
        for x, pot in enumerate(self.potatoes):
            if pot and not is_closed_set(self.algebra, pot):
                problems.append(f"potato {self.variables[x]}")
        for (x, y), rel in sorted(self.relations.items()):
            if rel and not is_closed_relation(self.algebra, rel):
                problems.append(f"relation ({self.variables[x]}, {self.variables[y]})")
        return problems


@dataclass(frozen=True)
class RawInstance:
    """An instance of the binary CSP before any consistency processing."""

    algebra: FiniteAlgebra
    variables: tuple[str, ...]
    binary: tuple[tuple[tuple[str, str], frozenset], ...] = ()
    unary: tuple[tuple[str, frozenset], ...] = ()

    def __post_init__(self):
        names = set(self.variables)
        if len(names) != len(self.variables):
            raise InstanceError("variable names must be distinct")
        n = self.algebra.size
        for (x, y), rel in self.binary:
            if x not in names or y not in names:
                raise InstanceError(f"constraint scope ({x}, {y}) uses unknown variables")
            if any(not (0 <= a < n and 0 <= b < n) for a, b in rel):
                raise InstanceError(f"constraint on ({x}, {y}) leaves 0..{n - 1}")
        for x, pot in self.unary:
            if x not in names:
                raise InstanceError(f"unary constraint on unknown variable {x!r}")
            if any(not 0 <= a < n for a in pot):
                raise InstanceError(f"unary constraint on {x!r} leaves 0..{n - 1}")

    def closure_problems(self) -> list[str]:
        problems = []
        for (x, y), rel in self.binary:
            if rel and not is_closed_relation(self.algebra, rel):
                problems.append(f"constraint ({x}, {y})")
        for x, pot in self.unary:
            if pot and not is_closed_set(self.algebra, pot):
                problems.append(f"unary constraint {x}")
        return problems

    def is_solution(self, asg: Mapping[str, int]) -> bool:
        missing = [v for v in self.variables if v not in asg]
        if missing:
            raise PartialAssignmentError(f"no value for {missing}")
        return all((asg[x], asg[y]) in rel for (x, y), rel in self.binary) and all(
            asg[x] in pot for x, pot in self.unary
        )


# -------------------------------------------------------------- subuniverses


def is_closed_set(alg: FiniteAlgebra, elements: Iterable[int]) -> bool:
    elements = set(elements)
    return set(subuniverse_closure(alg, elements)) == elements


def relation_closure(alg: FiniteAlgebra, pairs: Iterable[Pair]) -> frozenset:
    """Least subuniverse of ``alg x alg`` containing ``pairs``."""
    n = alg.size
    codes = {a * n + b for a, b in pairs}
    while True:
        arr = np.array(sorted(codes), dtype=np.int64)
        first, second = arr // n, arr % n
        grown = set(codes)
        for _, arity, table in alg.ops():
            if arity == 0:
                c = int(table[()])
                grown.add(c * n + c)
                continue
            if not arr.size:
                continue
            left = table[np.ix_(*([first] * arity))]
            right = table[np.ix_(*([second] * arity))]
            grown.update(np.unique(left * n + right).tolist())
        if grown == codes:
            return frozenset((c // n, c % n) for c in codes)
        codes = grown


def is_closed_relation(alg: FiniteAlgebra, pairs: Iterable[Pair]) -> bool:
    pairs = frozenset(pairs)
    return relation_closure(alg, pairs) == pairs


# --------------------------------------------------------- standardness check


@dataclass
class StandardReport:
    """Verdicts for the four conditions of a standard (2,3)-instance.

    Each ``*_witness`` is None when the condition holds, else a tuple of
    variable names and elements that exhibits the failure.
    """

    empty: bool
    p1: bool
    p2: bool
    p3: bool
    p4: bool
    p1_witness: tuple | None = None
    p2_witness: tuple | None = None
    p3_witness: tuple | None = None
    p4_witness: tuple | None = None

    @property
    def standard(self) -> bool:
        return self.p1 and self.p2 and self.p3 and self.p4

    def to_json(self) -> dict:
        return {
            "standard": self.standard,
            "empty": self.empty,
            **{
                f"P{i}": {"ok": getattr(self, f"p{i}"), "witness": getattr(self, f"p{i}_witness")}
                for i in range(1, 5)
            },
        }


def validate_standard(inst: Instance) -> StandardReport:
    names = inst.variables
    m = len(names)
    rows = inst.row_masks()

    p1_w = None
    for x in range(m):
        diag = frozenset((a, a) for a in inst.potatoes[x])
        if inst.relations[x, x] != diag:
            extra = sorted(inst.relations[x, x] ^ diag)[0]
            p1_w = (names[x], extra)
            break

    p2_w = None
    for x in range(m):
        for y in range(m):
            for a, b in sorted(inst.relations[x, y]):
                for z in range(m):
                    if not rows[x, z][a] & rows[y, z][b]:
                        p2_w = (names[x], names[y], names[z], (a, b))
                        break
                if p2_w:
                    break
            if p2_w:
                break
        if p2_w:
            break

    p3_w = None
    for x in range(m):
        for y in range(m):
            px, py = inst.potatoes[x], inst.potatoes[y]
            if not px or not py:
                continue
            rel = inst.relations[x, y]
            left = {a for a, _ in rel}
            right = {b for _, b in rel}
            if left != px:
                p3_w = (names[x], names[y], names[x], min(px - left))
            elif right != py:
                p3_w = (names[x], names[y], names[y], min(py - right))
            if p3_w:
                break
        if p3_w:
            break

    p4_w = None
    for x in range(m):
        for y in range(m):
            inv = frozenset((b, a) for a, b in inst.relations[y, x])
            if inst.relations[x, y] != inv:
                p4_w = (names[x], names[y], sorted(inst.relations[x, y] ^ inv)[0])
                break
        if p4_w:
            break

    return StandardReport(
        empty=inst.is_empty(),
        p1=p1_w is None, p2=p2_w is None, p3=p3_w is None, p4=p4_w is None,
        p1_witness=p1_w, p2_witness=p2_w, p3_witness=p3_w, p4_witness=p4_w,
    )


# ------------------------------------------------------- (2,3)-consistency


def _initial_rows(raw: RawInstance) -> list[list[list[int]]]:
    n = raw.algebra.size
    m = len(raw.variables)
    pos = {v: i for i, v in enumerate(raw.variables)}
    full = (1 << n) - 1
    R = [[([1 << a for a in range(n)] if x == y else [full] * n) for y in range(m)] for x in range(m)]
    for (xv, yv), rel in raw.binary:
        x, y = pos[xv], pos[yv]
        fwd = _rows(rel, n)
        bwd = _rows(((b, a) for a, b in rel), n)
        R[x][y] = [r & f for r, f in zip(R[x][y], fwd)]
        R[y][x] = [r & f for r, f in zip(R[y][x], bwd)]
    for xv, pot in raw.unary:
        x = pos[xv]
        keep = _mask(pot)
        R[x][x] = [r if keep >> a & 1 else 0 for a, r in enumerate(R[x][x])]
    return R


def two_three_consistency(raw: RawInstance) -> Instance:
    """Delete pairs without triangle support until nothing changes.

    Start from ``D x D`` off the diagonal and ``0_D`` on it, intersect with
    every constraint (and the inverse of every binary constraint; unary
    constraints cut the diagonal), then remove ``(a, b)`` from ``R_xy`` and
    ``(b, a)`` from ``R_yx`` whenever no ``c`` has ``(a, c)`` in ``R_xz`` and
    ``(b, c)`` in ``R_yz``.  Potatoes are read off the diagonal.

    Instead of re-sweeping every triple after each change, a triple is
    re-examined only when one of the two relations it reads has shrunk.  The
    greatest fixpoint reached is the same.
    """
    n = raw.algebra.size
    m = len(raw.variables)
    R = _initial_rows(raw)

    def revise(x: int, y: int, z: int) -> bool:
        rxy, ryx, rxz, ryz = R[x][y], R[y][x], R[x][z], R[y][z]
        changed = False
        for a in range(n):
            row = rxy[a]
            if not row:
                continue
            support = rxz[a]
            for b in _bits(row):
                if not support & ryz[b]:
                    rxy[a] &= ~(1 << b)
                    ryx[b] &= ~(1 << a)
                    changed = True
        return changed

    queue = deque((x, y, z) for x in range(m) for y in range(x, m) for z in range(m))
    pending = set(queue)
    while queue:
        triple = queue.popleft()
        pending.discard(triple)
        x, y, _ = triple
        if not revise(*triple):
            continue
        # R_xy shrank: every triple reading R_xy or R_yx must be looked at again
        for w in range(m):
            for u, v in ((x, y), (y, x)):
                t = (min(u, w), max(u, w), v)
                if t not in pending:
                    pending.add(t)
                    queue.append(t)

    potatoes = tuple(frozenset(a for a in range(n) if R[x][x][a] >> a & 1) for x in range(m))
    relations = {
        (x, y): frozenset((a, b) for a in range(n) for b in _bits(R[x][y][a]))
        for x in range(m) for y in range(m)
    }
    return Instance(raw.algebra, tuple(raw.variables), potatoes, relations)


# ------------------------------------------------------------ restriction


def restrict(inst: Instance, new_potatoes) -> Instance:
    """Shrink potatoes and intersect every relation with the new products.

    ``new_potatoes`` maps variable names to element sets; variables not
    mentioned keep their potato.  A sequence indexed like ``inst.variables``
    is accepted too.
    """
    if isinstance(new_potatoes, Mapping):
        pots = list(inst.potatoes)
        for v, pot in new_potatoes.items():
            pots[inst.index(v)] = frozenset(pot)
    else:
        pots = [frozenset(p) for p in new_potatoes]
        if len(pots) != len(inst.variables):
            raise InstanceError("one potato per variable is required")
    for x, (old, new) in enumerate(zip(inst.potatoes, pots)):
        if not new <= old:
            raise InstanceError(f"new potato of {inst.variables[x]!r} is not inside the old one")
    relations = {
        (x, y): frozenset((a, b) for a, b in rel if a in pots[x] and b in pots[y])
        for (x, y), rel in inst.relations.items()
    }
    return Instance(inst.algebra, inst.variables, tuple(pots), relations)


# -------------------------------------------------------------- solutions


def _require_total(inst_vars: Sequence[str], asg: Mapping[str, int]):
    missing = [v for v in inst_vars if v not in asg]
    if missing:
        raise PartialAssignmentError(f"no value for {missing}")


def is_solution(inst: Instance, asg: Mapping[str, int]) -> bool:
    _require_total(inst.variables, asg)
    vals = [asg[v] for v in inst.variables]
    if any(vals[x] not in pot for x, pot in enumerate(inst.potatoes)):
        return False
    return all((vals[x], vals[y]) in rel for (x, y), rel in inst.relations.items())


def _search_space(potato_sizes: Iterable[int]) -> int:
    total = 1
    for s in potato_sizes:
        total *= s
    return total


def iter_solutions(inst: Instance, bound: int = SEARCH_BOUND) -> Iterator[dict]:
    """Every solution, in lexicographic order of the variable list."""
    if _search_space(len(p) for p in inst.potatoes) > bound:
        raise SearchBoundError(f"search space exceeds {bound}")
    m = len(inst.variables)
    if m == 0:
        yield {}
        return
    if inst.is_empty():
        return
    rows = inst.row_masks()
    values = [0] * m

    def extend(x: int, domains: list[int]):
        for a in _bits(domains[x]):
            values[x] = a
            if x + 1 == m:
                yield dict(zip(inst.variables, values))
                continue
            narrowed = domains[:]
            ok = True
            for y in range(x + 1, m):
                narrowed[y] &= rows[x, y][a]
                if not narrowed[y]:
                    ok = False
                    break
            if ok:
                yield from extend(x + 1, narrowed)

    yield from extend(0, [inst.potato_mask(x) for x in range(m)])


def brute_force_solve(inst: Instance, bound: int = SEARCH_BOUND) -> dict | None:
    """The lexicographically least solution, or None."""
    return next(iter_solutions(inst, bound), None)


def iter_raw_solutions(raw: RawInstance, bound: int = SEARCH_BOUND) -> Iterator[dict]:
    """Solutions of a raw instance read literally, no consistency applied."""
    n = raw.algebra.size
    m = len(raw.variables)
    if _search_space([n] * m) > bound:
        raise SearchBoundError(f"search space exceeds {bound}")
    pos = {v: i for i, v in enumerate(raw.variables)}
    allowed = [set(range(n)) for _ in range(m)]
    for x, pot in raw.unary:
        allowed[pos[x]] &= set(pot)
    # each binary constraint is checked once its later variable is assigned
    checks: list[list[tuple[int, frozenset, bool]]] = [[] for _ in range(m)]
    for (xv, yv), rel in raw.binary:
        x, y = pos[xv], pos[yv]
        checks[max(x, y)].append((min(x, y), rel, x <= y))
    values = [0] * m

    def extend(i: int):
        if i == m:
            yield dict(zip(raw.variables, values))
            return
        for a in sorted(allowed[i]):
            values[i] = a
            if all(((values[j], a) if fwd else (a, values[j])) in rel for j, rel, fwd in checks[i]):
                yield from extend(i + 1)

    yield from extend(0)


def brute_force_solve_raw(raw: RawInstance, bound: int = SEARCH_BOUND) -> dict | None:
    return next(iter_raw_solutions(raw, bound), None)


def pointwise(inst: Instance, dot: Term, s1: Mapping[str, int], s2: Mapping[str, int]) -> dict:
    t = binary_table(inst.algebra, dot)
    return {v: int(t[s1[v], s2[v]]) for v in inst.variables}


def solution_closure_check(inst: Instance, s1: Mapping[str, int], s2: Mapping[str, int], dot: Term) -> bool:
    """True iff the pointwise product ``s1 . s2`` is again a solution."""
    for s in (s1, s2):
        if not is_solution(inst, s):
            raise NotASolutionError(f"{dict(s)} is not a solution")
    return is_solution(inst, pointwise(inst, dot, s1, s2))
