"""Finite algebras given by full operation tables, terms over them, and the
standard constructions (products, subuniverses, quotients, restrictions).

Elements are the integers ``0..n-1``.  A ``k``-ary table is stored as a numpy
array of shape ``(n,) * k``; its flat row-major form puts the first argument
in the most significant position, which is the layout used by the JSON codec.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .partition import Partition


class AlgebraError(ValueError):
    code = "algebra_error"


class UnknownSymbolError(AlgebraError):
    code = "unknown_symbol"


class ArityError(AlgebraError):
    code = "arity_mismatch"


class ElementRangeError(AlgebraError):
    code = "element_out_of_range"


class VariableRangeError(AlgebraError):
    code = "variable_out_of_range"


class NotClosedError(AlgebraError):
    code = "not_closed"


class NotCongruenceError(AlgebraError):
    code = "not_congruence"


class SignatureMismatchError(AlgebraError):
    code = "signature_mismatch"


class DerivationError(AlgebraError):
    code = "no_applicable_case"


@dataclass(frozen=True)
class Signature:
    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.symbols]
        if len(set(names)) != len(names):
            raise AlgebraError(f"duplicate operation symbols in {names}")
        for name, arity in self.symbols:
            if arity < 0:
                raise AlgebraError(f"negative arity for {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.symbols)

    def arity(self, name: str) -> int:
        for sym, arity in self.symbols:
            if sym == name:
                return arity
        raise UnknownSymbolError(f"unknown operation symbol {name!r}")


class FiniteAlgebra:
    """An algebra on ``0..size-1`` with named operations given as tables.

    ``ops`` is a sequence of ``(name, arity, table)`` where ``table`` is either
    a flat row-major sequence of length ``size**arity`` or an array of shape
    ``(size,) * arity``.  Instances are immutable.
    """

    __slots__ = ("size", "signature", "_tables")

    def __init__(self, size: int, ops: Iterable[tuple[str, int, object]]):
        if size < 1:
            raise AlgebraError("universe must be nonempty")
        ops = list(ops)
        signature = Signature(tuple((name, int(arity)) for name, arity, _ in ops))
        tables = {}
        for name, arity, table in ops:
            arr = np.asarray(table, dtype=np.int64)
            if arr.size != size ** arity:
                raise AlgebraError(
                    f"table for {name!r} has {arr.size} entries, expected {size ** arity}"
                )
            arr = arr.reshape((size,) * arity).copy()
            if arr.size and (arr.min() < 0 or arr.max() >= size):
                raise ElementRangeError(f"table for {name!r} leaves 0..{size - 1}")
            arr.setflags(write=False)
            tables[name] = arr
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "signature", signature)
        object.__setattr__(self, "_tables", tables)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteAlgebra is immutable")

    @classmethod
    def from_functions(
        cls, size: int, ops: Mapping[str, tuple[int, Callable[..., int]]]
    ) -> "FiniteAlgebra":
        """Tabulate Python callables, e.g. ``{"meet": (2, min)}``."""
        built = []
        for name, (arity, fn) in ops.items():
            table = [fn(*args) for args in itertools.product(range(size), repeat=arity)]
            built.append((name, arity, table))
        return cls(size, built)

    def table(self, symbol: str) -> np.ndarray:
        try:
            return self._tables[symbol]
        except KeyError:
            raise UnknownSymbolError(f"unknown operation symbol {symbol!r}") from None

    def ops(self):
        """Yield ``(name, arity, table)`` in signature order."""
        for name, arity in self.signature.symbols:
            yield name, arity, self._tables[name]

    def __eq__(self, other):
        if not isinstance(other, FiniteAlgebra):
            return NotImplemented
        return (
            self.size == other.size
            and self.signature == other.signature
            and all(np.array_equal(self._tables[n], other._tables[n]) for n in self.signature.names)
        )

    def __hash__(self):
        return hash((self.size, self.signature, tuple(self._tables[n].tobytes() for n in self.signature.names)))

    def __repr__(self):
        ops = ", ".join(f"{n}/{a}" for n, a in self.signature.symbols)
        return f"FiniteAlgebra(size={self.size}, ops=[{ops}])"


# --------------------------------------------------------------------- terms


@dataclass(frozen=True)
class Var:
    index: int

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple["Term", ...] = ()

    def __str__(self):
        return f"{self.symbol}({', '.join(map(str, self.args))})"


Term = Union[Var, App]


def app(symbol: str, *args: Term) -> App:
    return App(symbol, tuple(args))


def binary(symbol: str) -> App:
    """The term ``symbol(x0, x1)``."""
    return App(symbol, (Var(0), Var(1)))


def term_vars(term: Term) -> set[int]:
    if isinstance(term, Var):
        return {term.index}
    out: set[int] = set()
    for arg in term.args:
        out |= term_vars(arg)
    return out


def substitute(term: Term, mapping: Mapping[int, Term]) -> Term:
    """Replace each ``Var(i)`` by ``mapping[i]`` (variables not mapped stay)."""
    if isinstance(term, Var):
        return mapping.get(term.index, term)
    return App(term.symbol, tuple(substitute(a, mapping) for a in term.args))


def compose2(dot: Term, left: Term, right: Term) -> Term:
    """``left . right`` for a binary term ``dot``."""
    return substitute(dot, {0: left, 1: right})


# ---------------------------------------------------------------- evaluation


def _check_element(alg: FiniteAlgebra, a) -> int:
    a = int(a)
    if not 0 <= a < alg.size:
        raise ElementRangeError(f"element {a} outside 0..{alg.size - 1}")
    return a


def eval_op(alg: FiniteAlgebra, symbol: str, args: Sequence[int]) -> int:
    arity = alg.signature.arity(symbol)
    if len(args) != arity:
        raise ArityError(f"{symbol!r} has arity {arity}, got {len(args)} arguments")
    idx = tuple(_check_element(alg, a) for a in args)
    return int(alg.table(symbol)[idx])


def eval_term(alg: FiniteAlgebra, term: Term, var_count: int, assignment: Sequence[int]) -> int:
    if len(assignment) != var_count:
        raise VariableRangeError(f"assignment has length {len(assignment)}, expected {var_count}")
    values = [_check_element(alg, a) for a in assignment]

    def ev(t: Term) -> int:
        if isinstance(t, Var):
            if not 0 <= t.index < var_count:
                raise VariableRangeError(f"variable x{t.index} with var_count={var_count}")
            return values[t.index]
        return eval_op(alg, t.symbol, [ev(a) for a in t.args])

    return ev(term)


def term_table(alg: FiniteAlgebra, term: Term, var_count: int) -> np.ndarray:
    """The term operation as an array of shape ``(n,) * var_count``."""
    shape = (alg.size,) * var_count
    grids = np.indices(shape, dtype=np.int64) if var_count else np.zeros((0,), dtype=np.int64)

    def ev(t: Term) -> np.ndarray:
        if isinstance(t, Var):
            if not 0 <= t.index < var_count:
                raise VariableRangeError(f"variable x{t.index} with var_count={var_count}")
            return grids[t.index]
        arity = alg.signature.arity(t.symbol)
        if len(t.args) != arity:
            raise ArityError(f"{t.symbol!r} has arity {arity}, got {len(t.args)} arguments")
        table = alg.table(t.symbol)
        if arity == 0:
            return np.full(shape, table[()], dtype=np.int64)
        return table[tuple(ev(a) for a in t.args)]

    return ev(term)


def binary_table(alg: FiniteAlgebra, dot: Term) -> np.ndarray:
    """The ``n x n`` table of a binary term."""
    if not term_vars(dot) <= {0, 1}:
        raise ArityError(f"{dot} is not a binary term")
    return term_table(alg, dot, 2)


def find_identity_violation(alg: FiniteAlgebra, lhs: Term, rhs: Term, var_count: int):
    """First assignment (lexicographic) where the two sides differ, or None."""
    diff = term_table(alg, lhs, var_count) != term_table(alg, rhs, var_count)
    if not diff.any():
        return None
    return tuple(int(i) for i in np.argwhere(diff)[0])


def check_identity(alg: FiniteAlgebra, lhs: Term, rhs: Term, var_count: int) -> bool:
    return find_identity_violation(alg, lhs, rhs, var_count) is None


def is_idempotent(alg: FiniteAlgebra) -> bool:
    diag = np.arange(alg.size)
    for _, arity, table in alg.ops():
        if arity == 0:
            if alg.size != 1:
                return False
            continue
        if not np.array_equal(table[(diag,) * arity], diag):
            return False
    return True


X, Y, Z = Var(0), Var(1), Var(2)


def two_semilattice_identities(dot: Term) -> list[tuple[Term, Term]]:
    """``x.x = x``, ``x.y = y.x`` and ``x.(x.y) = x.y`` as term pairs."""
    xy = compose2(dot, X, Y)
    return [
        (compose2(dot, X, X), X),
        (xy, compose2(dot, Y, X)),
        (compose2(dot, X, xy), xy),
    ]


def is_two_semilattice(alg: FiniteAlgebra, dot: Term) -> bool:
    if not term_vars(dot) <= {0, 1}:
        raise ArityError(f"{dot} is not a binary term")
    return all(check_identity(alg, lhs, rhs, 2) for lhs, rhs in two_semilattice_identities(dot))


def dot_reduct(alg: FiniteAlgebra, dot: Term, name: str = "dot") -> FiniteAlgebra:
    """The algebra on the same universe whose only operation is ``dot``."""
    return FiniteAlgebra(alg.size, [(name, 2, binary_table(alg, dot))])


# ------------------------------------------------------------- constructions


@dataclass(frozen=True)
class ProductCodec:
    sizes: tuple[int, ...]

    def encode(self, coords: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(coords), self.sizes))

    def decode(self, element: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(element, self.sizes))


def product_algebra(algs: Sequence[FiniteAlgebra]) -> tuple[FiniteAlgebra, ProductCodec]:
    if not algs:
        raise AlgebraError("product of an empty family")
    sig = algs[0].signature
    for other in algs[1:]:
        if other.signature != sig:
            raise SignatureMismatchError("factors have different signatures")
    sizes = tuple(a.size for a in algs)
    total = int(np.prod(sizes))
    ops = []
    for name, arity in sig.symbols:
        if arity == 0:
            coords = tuple(int(a.table(name)[()]) for a in algs)
            ops.append((name, 0, [int(np.ravel_multi_index(coords, sizes))]))
            continue
        args = np.indices((total,) * arity, dtype=np.int64)
        decoded = [np.unravel_index(args[i], sizes) for i in range(arity)]
        result = [
            algs[j].table(name)[tuple(decoded[i][j] for i in range(arity))]
            for j in range(len(algs))
        ]
        ops.append((name, arity, np.ravel_multi_index(tuple(result), sizes)))
    return FiniteAlgebra(total, ops), ProductCodec(sizes)


def subuniverse_closure(alg: FiniteAlgebra, seed: Iterable[int]) -> tuple[int, ...]:
    current = {_check_element(alg, a) for a in seed}
    if not current:
        # nullary operations still generate
        current = {int(t[()]) for _, ar, t in alg.ops() if ar == 0}
    while True:
        elems = sorted(current)
        grown = set(current)
        for _, arity, table in alg.ops():
            if arity == 0:
                grown.add(int(table[()]))
                continue
            if not elems:
                continue
            grown.update(np.unique(table[np.ix_(*([elems] * arity))]).tolist())
        if grown == current:
            return tuple(elems)
        current = grown


def is_subuniverse(alg: FiniteAlgebra, subset: Iterable[int]) -> bool:
    subset = set(subset)
    return set(subuniverse_closure(alg, subset)) == subset


def restrict_to_subuniverse(
    alg: FiniteAlgebra, sub: Iterable[int]
) -> tuple[FiniteAlgebra, tuple[int, ...]]:
    """Induced algebra on ``sub``; element ``i`` of the result is ``elements[i]``."""
    elements = tuple(sorted({_check_element(alg, a) for a in sub}))
    if not elements:
        raise NotClosedError("an algebra needs a nonempty universe")
    if subuniverse_closure(alg, elements) != elements:
        raise NotClosedError(f"{list(elements)} is not closed under the operations")
    lookup = np.full(alg.size, -1, dtype=np.int64)
    lookup[list(elements)] = np.arange(len(elements))
    ops = []
    for name, arity, table in alg.ops():
        sub_table = table[np.ix_(*([elements] * arity))] if arity else table
        ops.append((name, arity, lookup[sub_table]))
    return FiniteAlgebra(len(elements), ops), elements


def quotient_algebra(alg: FiniteAlgebra, cong: Partition) -> tuple[FiniteAlgebra, Partition]:
    """Quotient by ``cong``; element ``j`` of the result is ``cong.blocks[j]``.

    Every table entry is audited, so a partition that is not a congruence is
    rejected with the first conflicting pair of argument tuples.
    """
    if cong.size != alg.size:
        raise AlgebraError("partition and algebra have different universes")
    block_of = np.array([cong.block_index(a) for a in range(alg.size)], dtype=np.int64)
    k = len(cong.blocks)
    ops = []
    for name, arity, table in alg.ops():
        image = block_of[table]
        if arity == 0:
            ops.append((name, 0, image))
            continue
        keys = np.ravel_multi_index(tuple(block_of[g] for g in np.indices(table.shape)), (k,) * arity)
        flat_keys, flat_img = keys.ravel(), image.ravel()
        lo = np.full(k ** arity, k, dtype=np.int64)
        hi = np.full(k ** arity, -1, dtype=np.int64)
        np.minimum.at(lo, flat_keys, flat_img)
        np.maximum.at(hi, flat_keys, flat_img)
        bad = np.nonzero(lo != hi)[0]
        if bad.size:
            key = bad[0]
            clash = np.nonzero(flat_keys == key)[0]
            args = [np.unravel_index(i, table.shape) for i in clash]
            raise NotCongruenceError(
                f"{name!r} is not well defined on blocks: arguments "
                f"{[tuple(map(int, a)) for a in args[:2]]} land in different blocks"
            )
        ops.append((name, arity, lo))
    return FiniteAlgebra(k, ops), cong


def depends_on(alg: FiniteAlgebra, term: Term, var_count: int, k: int) -> bool:
    if not 0 <= k < var_count:
        raise VariableRangeError(f"position {k} with var_count={var_count}")
    table = term_table(alg, term, var_count)
    return bool((table != table.take([0], axis=k)).any())


def dependency_set(alg: FiniteAlgebra, term: Term, var_count: int) -> frozenset[int]:
    """Positions (0-based) the term operation actually depends on."""
    return frozenset(k for k in range(var_count) if depends_on(alg, term, var_count, k))


# ---------------------------------------------------------------- edge terms


def edge_identity_rows(k: int) -> list[tuple[int, ...]]:
    """The ``k`` left-hand sides of the k-edge identities, 0 standing for x
    and 1 for y; each identity reads ``e(row) = x``.

    Rows: ``(y,y,x,...)``, ``(y,x,y,x,...)``, then a single ``y`` in each
    position from the fourth to the last.
    """
    if k < 2:
        raise ArityError("edge terms need k >= 2")
    rows = [(1, 1) + (0,) * (k - 1), (1, 0, 1) + (0,) * (k - 2)]
    for pos in range(3, k + 1):
        row = [0] * (k + 1)
        row[pos] = 1
        rows.append(tuple(row))
    return rows


def _row_term(e: Term, row: Sequence[int]) -> Term:
    return substitute(e, {i: (Y if v else X) for i, v in enumerate(row)})


def is_edge_operation(alg: FiniteAlgebra, e: Term, k: int) -> bool:
    if k < 2:
        raise ArityError("edge terms need k >= 2")
    if not term_vars(e) <= set(range(k + 1)):
        raise ArityError(f"{e} uses variables beyond x{k}")
    return all(check_identity(alg, _row_term(e, row), X, 2) for row in edge_identity_rows(k))


def derive_dot_term(
    e: Term,
    k: int,
    star: Term,
    dep_set: Iterable[int],
    fallback_identity_row: Sequence[int] | None = None,
) -> Term:
    """Build a binary term that is ``x*y`` on the 2-semilattice side and the
    first projection on the edge-term side.

    ``e`` is the (k+1)-ary edge term, ``star`` the binary 2-semilattice term
    and ``dep_set`` the 0-based positions on which ``e`` depends over the
    2-semilattice side (see :func:`dependency_set`).  Cases:

    * dependencies within {0, 1}: ``e(x*y, x*y, x, ..., x)``
    * dependencies within {0, 2}: ``e(x*y, x, x*y, x, ..., x)``
    * a single dependency ``i >= 3``: ``x*y`` at ``i``, ``x`` elsewhere
    * otherwise an edge-identity row is plugged in whose entries on
      ``dep_set`` contain both ``x`` and ``y``.  By default this is the first
      row carrying ``y`` at the second smallest dependency; pass
      ``fallback_identity_row`` (0 = x, 1 = y) to pick a different row.
    """
    if k < 2:
        raise ArityError("edge terms need k >= 2")
    if not term_vars(e) <= set(range(k + 1)):
        raise ArityError(f"{e} uses variables beyond x{k}")
    deps = sorted(set(dep_set))
    if any(not 0 <= i <= k for i in deps):
        raise DerivationError(f"dependency positions {deps} outside 0..{k}")
    xy = compose2(star, X, Y)

    def fill(special: Mapping[int, Term]) -> Term:
        return substitute(e, {i: special.get(i, X) for i in range(k + 1)})

    if set(deps) <= {0, 1}:
        return fill({0: xy, 1: xy})
    if set(deps) <= {0, 2}:
        return fill({0: xy, 2: xy})
    if len(deps) == 1:
        return fill({deps[0]: xy})

    rows = edge_identity_rows(k)
    if fallback_identity_row is not None:
        row = tuple(int(v) for v in fallback_identity_row)
        if row not in rows:
            raise DerivationError(f"{row} is not an edge-identity row for k={k}")
        if len({row[i] for i in deps}) != 2:
            raise DerivationError(f"row {row} is constant on the dependency set {deps}")
        return _row_term(e, row)
    second = deps[1]
    for row in rows:
        if row[second] == 1 and len({row[i] for i in deps}) == 2:
            return _row_term(e, row)
    raise DerivationError(f"no edge-identity row separates the dependency set {deps}")
