"""Solving standard (2,3)-instances over a 2-semilattice.

The solver alternates two reductions until every potato is a singleton:

* restriction of every potato and relation to its minimal strongly connected
  component (:func:`scc_restrict`);
* splitting along a maximal congruence of one potato and keeping the block of
  its least element (:func:`decompose`).

The unique assignment of the final instance is returned together with the
chain of steps that produced it.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .algebra import AlgebraError, Term, binary_table, dot_reduct, is_two_semilattice, restrict_to_subuniverse
from .congruence import CONGRUENCE_BOUND, maximal_congruences
from .digraph import NotTwoSemilatticeError, is_strongly_connected_set, minimal_component_of
from .instance import (
    Instance,
    InstanceError,
    SearchBoundError,
    SEARCH_BOUND,
    is_solution,
    iter_solutions,
    restrict,
    validate_standard,
)

#: largest solution set :func:`verify_walk_to_bulatov` will enumerate
WALK_BOUND = 10 ** 4


class BulatovError(InstanceError):
    code = "bulatov_precondition"


class InternalInconsistencyError(BulatovError):
    """A step produced something the theory rules out for standard inputs."""

    code = "internal_inconsistency"


@dataclass(frozen=True)
class SccStep:
    """``I >=1 J``: every potato and relation cut to its minimal component."""

    size_before: int
    size_after: int
    tag: str = ">=1"

    def to_json(self) -> dict:
        return {"step": self.tag, "size_before": self.size_before, "size_after": self.size_after}


@dataclass(frozen=True)
class DecompositionStep:
    """``I >=2 J``: one block of a maximal-congruence decomposition.

    ``blocks`` lists the congruence classes of the pivot potato, the first
    holding its least element.  ``block_maps[x][a]`` is the index of the block
    that ``a`` is sent to, for ``x`` in ``W``.
    """

    pivot: str
    blocks: tuple[tuple[int, ...], ...]
    W: tuple[str, ...]
    block_maps: Mapping[str, Mapping[int, int]] = field(repr=False)
    chosen: int
    size_before: int
    size_after: int
    tag: str = ">=2"

    def to_json(self) -> dict:
        return {
            "step": self.tag,
            "pivot": self.pivot,
            "congruence_blocks": [list(b) for b in self.blocks],
            "W": list(self.W),
            "chosen_block": list(self.blocks[self.chosen]),
            "size_before": self.size_before,
            "size_after": self.size_after,
        }


# ----------------------------------------------------------------- helpers


def _dot_table(inst: Instance, dot: Term) -> np.ndarray:
    if not is_two_semilattice(inst.algebra, dot):
        raise NotTwoSemilatticeError(f"{dot} is not a 2-semilattice operation on the ambient algebra")
    return binary_table(inst.algebra, dot)


def _check_dot_closed(inst: Instance, t: np.ndarray):
    for x, pot in enumerate(inst.potatoes):
        for a in pot:
            for b in pot:
                if int(t[a, b]) not in pot:
                    raise BulatovError(f"potato of {inst.variables[x]!r} is not closed: {a}.{b} = {t[a, b]}")
    for (x, y), rel in inst.relations.items():
        if x > y:
            continue
        for a, b in rel:
            for c, d in rel:
                if (int(t[a, c]), int(t[b, d])) not in rel:
                    raise BulatovError(
                        f"relation ({inst.variables[x]}, {inst.variables[y]}) is not closed at ({a},{b}), ({c},{d})"
                    )


def _require_standard_nonempty(inst: Instance):
    if inst.is_empty():
        raise BulatovError("the instance is empty")
    report = validate_standard(inst)
    if not report.standard:
        raise BulatovError(f"the instance is not standard: {report.to_json()}")


def _pair_mul(t: np.ndarray):
    return lambda p, q: (int(t[p[0], q[0]]), int(t[p[1], q[1]]))


# -------------------------------------------------------------- reductions


def _scc_restrict(inst: Instance, t: np.ndarray) -> Instance:
    mul = lambda a, b: int(t[a, b])  # noqa: E731
    pots = tuple(minimal_component_of(p, mul) for p in inst.potatoes)
    pair_mul = _pair_mul(t)
    rels = {}
    for (x, y), rel in inst.relations.items():
        if x < y:
            cut = minimal_component_of(rel, pair_mul)
            rels[x, y] = cut
            rels[y, x] = frozenset((b, a) for a, b in cut)
        elif x == y:
            rels[x, x] = frozenset((a, a) for a in pots[x])
    try:
        return Instance(inst.algebra, inst.variables, pots, rels)
    except InstanceError as exc:
        raise InternalInconsistencyError(f"minimal components do not fit together: {exc}") from exc


def scc_restrict(inst: Instance, dot: Term, debug: bool = False) -> Instance:
    """Replace every potato and relation by its minimal strongly connected
    component.  The result is again standard and nonempty."""
    if inst.is_empty():
        raise BulatovError("the instance is empty")
    t = _dot_table(inst, dot)
    _check_dot_closed(inst, t)
    if debug:
        _require_standard_nonempty(inst)
    out = _scc_restrict(inst, t)
    if debug:
        _audit(out, "strongly connected restriction")
    return out


def _audit(inst: Instance, what: str):
    if inst.is_empty():
        raise InternalInconsistencyError(f"{what} produced an empty instance")
    report = validate_standard(inst)
    if not report.standard:
        raise InternalInconsistencyError(f"{what} produced a non-standard instance: {report.to_json()}")


def _pivot(inst: Instance) -> int:
    for x, pot in enumerate(inst.potatoes):
        if len(pot) > 1:
            return x
    raise BulatovError("every potato is a singleton; nothing to decompose")


def _choose_congruence(inst: Instance, t: np.ndarray, u: int, dot: Term, bound: int):
    sub, elements = restrict_to_subuniverse(dot_reduct(inst.algebra, dot), inst.potatoes[u])
    maxima = maximal_congruences(sub, bound)
    if not maxima:
        raise InternalInconsistencyError("a potato with two or more elements has no maximal congruence")
    best = min(maxima, key=lambda p: p.blocks)
    return tuple(tuple(elements[i] for i in block) for block in best.blocks)


def _decomposition(inst: Instance, dot: Term, u: int, t: np.ndarray, debug: bool, bound: int):
    blocks = _choose_congruence(inst, t, u, dot, bound)
    k = len(blocks)
    block_of = {a: i for i, block in enumerate(blocks) for a in block}
    maps: dict[str, dict[int, int]] = {}
    for x in range(len(inst.variables)):
        images: dict[int, set[int]] = {a: set() for a in inst.potatoes[x]}
        for a, b in inst.relations[x, u]:
            images[a].add(block_of[b])
        if any(len(img) != 1 for img in images.values()):
            continue
        phi = {a: next(iter(img)) for a, img in sorted(images.items())}
        if set(phi.values()) != set(range(k)):
            raise InternalInconsistencyError(
                f"the induced map from {inst.variables[x]!r} to the blocks of {inst.variables[u]!r} is not onto"
            )
        if debug:
            rep = [block[0] for block in blocks]
            for a in phi:
                for b in phi:
                    q = block_of[int(t[rep[phi[a]], rep[phi[b]]])]
                    if phi[int(t[a, b])] != q:
                        raise InternalInconsistencyError(
                            f"the induced map on {inst.variables[x]!r} is not a homomorphism at ({a},{b})"
                        )
        maps[inst.variables[x]] = phi
    if inst.variables[u] not in maps:
        raise InternalInconsistencyError("the pivot variable is not in W")
    W = tuple(v for v in inst.variables if v in maps)

    def block(i: int) -> Instance:
        pots = {v: frozenset(a for a, j in maps[v].items() if j == i) for v in W}
        out = restrict(inst, pots)
        if debug:
            _audit(out, f"decomposition block {i}")
        return out

    return blocks, W, maps, block


def decompose(inst: Instance, dot: Term, u: str | None = None, debug: bool = False,
              bound: int = CONGRUENCE_BOUND) -> tuple[DecompositionStep, list[Instance]]:
    """Split ``inst`` along a maximal congruence of the potato of ``u``.

    ``u`` defaults to the first variable whose potato has two or more
    elements.  Among the maximal congruences of that potato the one with the
    lexicographically least block list is used.  Returns the step record
    (with ``chosen`` = 0) and one instance per block, in block order.
    """
    t = _dot_table(inst, dot)
    if inst.is_empty():
        raise BulatovError("the instance is empty")
    for x, pot in enumerate(inst.potatoes):
        if not is_strongly_connected_set(pot, lambda a, b: int(t[a, b])):
            raise BulatovError(f"potato of {inst.variables[x]!r} is not strongly connected")
    for (x, y), rel in inst.relations.items():
        if x < y and not is_strongly_connected_set(rel, _pair_mul(t)):
            raise BulatovError(f"relation ({inst.variables[x]}, {inst.variables[y]}) is not strongly connected")
    ui = _pivot(inst) if u is None else inst.index(u)
    if len(inst.potatoes[ui]) < 2:
        raise BulatovError(f"potato of {inst.variables[ui]!r} has fewer than two elements")
    blocks, W, maps, block = _decomposition(inst, dot, ui, t, debug, bound)
    parts = [block(i) for i in range(len(blocks))]
    step = DecompositionStep(
        inst.variables[ui], blocks, W, maps, 0, inst.total_size(), parts[0].total_size()
    )
    return step, parts


# ---------------------------------------------------------------- solution


def bulatov_solution(inst: Instance, dot: Term, debug: bool = False,
                     bound: int = CONGRUENCE_BOUND) -> tuple[dict, list]:
    """A Bulatov solution of a nonempty standard instance and its trace.

    A strongly connected restriction is recorded only when it changes the
    instance, so an instance whose potatoes are already singletons yields an
    empty trace.
    """
    if inst.is_empty():
        raise BulatovError("the instance is empty")
    t = _dot_table(inst, dot)
    _check_dot_closed(inst, t)
    if debug:
        _require_standard_nonempty(inst)
    trace: list = []
    cur = inst
    limit = 2 * inst.total_size()
    while True:
        nxt = _scc_restrict(cur, t)
        if nxt != cur:
            if debug:
                _audit(nxt, "strongly connected restriction")
            trace.append(SccStep(cur.total_size(), nxt.total_size()))
            cur = nxt
        if all(len(p) == 1 for p in cur.potatoes):
            break
        u = _pivot(cur)
        blocks, W, maps, block = _decomposition(cur, dot, u, t, debug, bound)
        nxt = block(0)
        if nxt.is_empty():
            raise InternalInconsistencyError("decomposition produced an empty block")
        trace.append(DecompositionStep(cur.variables[u], blocks, W, maps, 0, cur.total_size(), nxt.total_size()))
        cur = nxt
        if len(trace) > limit:
            raise InternalInconsistencyError("reduction chain failed to terminate")
    assignment = {v: next(iter(p)) for v, p in zip(cur.variables, cur.potatoes)}
    if not is_solution(inst, assignment):
        raise InternalInconsistencyError("the terminal assignment does not solve the input")
    return assignment, trace


# ------------------------------------------------------------ walk check


def solution_matrix(inst: Instance, bound: int = WALK_BOUND) -> np.ndarray:
    """All solutions as rows (columns follow ``inst.variables``)."""
    rows = []
    for s in iter_solutions(inst, SEARCH_BOUND if bound <= SEARCH_BOUND else bound):
        rows.append([s[v] for v in inst.variables])
        if len(rows) > bound:
            raise SearchBoundError(f"more than {bound} solutions")
    return np.array(rows, dtype=np.int64).reshape(len(rows), len(inst.variables))


def verify_walk_to_bulatov(inst: Instance, dot: Term, s: Mapping[str, int], r: Mapping[str, int],
                           bound: int = WALK_BOUND, solutions: np.ndarray | None = None) -> bool:
    """True iff the solution digraph (``s1 -> s2`` iff ``s1 . s2 = s2``
    pointwise) has a directed walk from ``s`` to ``r``.

    ``solutions`` may pass in :func:`solution_matrix` of ``inst`` when many
    walks on the same instance are checked.
    """
    for name, asg in (("s", s), ("r", r)):
        if not is_solution(inst, asg):
            raise InstanceError(f"{name} is not a solution")
    t = binary_table(inst.algebra, dot)
    sols = solution_matrix(inst, bound) if solutions is None else solutions
    # rows become integers in base |D| so a whole batch of products can be
    # located with one searchsorted
    weights = inst.algebra.size ** np.arange(sols.shape[1] - 1, -1, -1, dtype=np.int64)
    codes = sols @ weights
    order = np.argsort(codes)
    sorted_codes = codes[order]

    def locate(rows: np.ndarray) -> np.ndarray:
        c = rows @ weights
        pos = np.searchsorted(sorted_codes, c)
        if (pos >= len(sorted_codes)).any() or (sorted_codes[np.minimum(pos, len(sorted_codes) - 1)] != c).any():
            raise InternalInconsistencyError("solutions are not closed under the operation")
        return order[pos]

    as_row = lambda asg: np.array([[asg[v] for v in inst.variables]], dtype=np.int64)  # noqa: E731
    start = int(locate(as_row(s))[0])
    goal = int(locate(as_row(r))[0])
    seen = np.zeros(len(sols), dtype=bool)
    seen[start] = True
    frontier = deque([start])
    while frontier:
        i = frontier.popleft()
        if i == goal:
            return True
        # every out-neighbour of s_i is s_i . t for some solution t (and s_i . s2 = s2 for s2 itself)
        fresh = np.unique(locate(t[sols[i][None, :], sols]))
        fresh = fresh[~seen[fresh]]
        seen[fresh] = True
        frontier.extend(fresh.tolist())
    return False
