"""Congruences of finite algebras and the witness congruence of a Maltsev
product with respect to a binary term."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlgebraError,
    ElementRangeError,
    FiniteAlgebra,
    Term,
    binary_table,
)
from .partition import Partition, UnionFind, all_partitions

#: largest universe for which :func:`all_congruences` will run
CONGRUENCE_BOUND = 12
#: largest universe for the brute-force partition oracle
ORACLE_BOUND = 6


class CongruenceBoundError(AlgebraError):
    code = "size_bound_exceeded"


def _check_partition(alg: FiniteAlgebra, part: Partition):
    if part.size != alg.size:
        raise AlgebraError(f"partition of a {part.size}-set given for an algebra of size {alg.size}")


def _slices(table: np.ndarray, axis: int, a: int, b: int):
    return np.take(table, a, axis=axis), np.take(table, b, axis=axis)


def find_congruence_violation(alg: FiniteAlgebra, part: Partition):
    """Return ``(symbol, position, a, b)`` for the first failure or None.

    Only single-coordinate substitutions of a block element by its
    representative are tried; compatibility with arbitrary related tuples
    follows by chaining such substitutions and transitivity.
    """
    _check_partition(alg, part)
    rep = np.asarray(part.rep, dtype=np.int64)
    for name, arity, table in alg.ops():
        for pos in range(arity):
            for b, a in enumerate(part.rep):
                if a == b:
                    continue
                sa, sb = _slices(table, pos, a, b)
                if not np.array_equal(rep[sa], rep[sb]):
                    return name, pos, a, b
    return None


def is_congruence(alg: FiniteAlgebra, part: Partition) -> bool:
    return find_congruence_violation(alg, part) is None


def _close(alg: FiniteAlgebra, uf: UnionFind) -> Partition:
    """Smallest congruence containing the equivalence held in ``uf``."""
    tables = [(arity, table) for _, arity, table in alg.ops() if arity > 0]
    changed = True
    while changed:
        changed = False
        for a in range(alg.size):
            r = uf.find(a)
            if r == a:
                continue
            for arity, table in tables:
                for pos in range(arity):
                    sa, sb = _slices(table, pos, r, a)
                    for u, v in zip(sa.ravel().tolist(), sb.ravel().tolist()):
                        if uf.union(u, v):
                            changed = True
    return Partition(uf.labels())


def principal_congruence(alg: FiniteAlgebra, a: int, b: int) -> Partition:
    for e in (a, b):
        if not 0 <= e < alg.size:
            raise ElementRangeError(f"element {e} outside 0..{alg.size - 1}")
    uf = UnionFind(alg.size)
    uf.union(a, b)
    return _close(alg, uf)


def join(alg: FiniteAlgebra, alpha: Partition, beta: Partition) -> Partition:
    """Join in the congruence lattice (transitive closure of the union)."""
    return alpha.join(beta)


def all_congruences(alg: FiniteAlgebra, bound: int = CONGRUENCE_BOUND) -> list[Partition]:
    """The whole congruence lattice, ordered by number of blocks (descending)
    and then by representative map."""
    if alg.size > bound:
        raise CongruenceBoundError(f"algebra of size {alg.size} exceeds the bound {bound}")
    n = alg.size
    principals = {principal_congruence(alg, a, b) for a in range(n) for b in range(a + 1, n)}
    lattice = {Partition.discrete(n)} | principals
    frontier = set(principals)
    while frontier:
        fresh = set()
        for alpha in frontier:
            for beta in principals:
                gamma = alpha.join(beta)
                if gamma not in lattice:
                    fresh.add(gamma)
        lattice |= fresh
        frontier = fresh
    return sorted(lattice, key=lambda p: (-len(p.blocks), p.rep))


def brute_force_congruences(alg: FiniteAlgebra, bound: int = ORACLE_BOUND) -> list[Partition]:
    """Oracle: every partition of the universe filtered by :func:`is_congruence`."""
    if alg.size > bound:
        raise CongruenceBoundError(f"algebra of size {alg.size} exceeds the oracle bound {bound}")
    found = [p for p in all_partitions(alg.size) if is_congruence(alg, p)]
    return sorted(found, key=lambda p: (-len(p.blocks), p.rep))


def maximal_congruences(alg: FiniteAlgebra, bound: int = CONGRUENCE_BOUND) -> list[Partition]:
    """Congruences strictly below the total relation with nothing in between."""
    proper = [c for c in all_congruences(alg, bound) if not c.is_indiscrete()]
    return [
        c for c in proper
        if not any(d != c and c.refines(d) for d in proper)
    ]


# ------------------------------------------------------------ witness theta


class ThetaWitnessError(AlgebraError):
    """The relation ``{(a, b): a.b = a and b.a = b}`` fails one of the checks.

    ``code`` names the first violated check, ``witness`` holds the elements
    that exhibit it.
    """

    def __init__(self, code: str, message: str, witness=None):
        super().__init__(message)
        self.code = code
        self.witness = witness


@dataclass(frozen=True)
class ThetaAudit:
    """Outcome of the four checks on the witness relation."""

    relation: np.ndarray
    partition: Partition | None
    failure: ThetaWitnessError | None

    @property
    def ok(self) -> bool:
        return self.failure is None


def theta_relation(alg: FiniteAlgebra, dot: Term) -> np.ndarray:
    """Boolean matrix of the pairs with ``a.b = a`` and ``b.a = b``."""
    t = binary_table(alg, dot)
    idx = np.arange(alg.size)
    left = t == idx[:, None]
    return left & left.T


def audit_theta(alg: FiniteAlgebra, dot: Term) -> ThetaAudit:
    t = binary_table(alg, dot)
    rel = theta_relation(alg, dot)
    n = alg.size

    def fail(code, msg, witness=None):
        return ThetaAudit(rel, None, ThetaWitnessError(code, msg, witness))

    for a in range(n):
        if not rel[a, a]:
            return fail("not_reflexive", f"{a}.{a} != {a}", (a,))
    # transitivity: the row of every element must equal the row of anything related to it
    for a in range(n):
        for b in np.nonzero(rel[a])[0].tolist():
            if not np.array_equal(rel[a], rel[b]):
                c = int(np.nonzero(rel[a] != rel[b])[0][0])
                return fail("not_transitive", f"theta is not transitive at {a}, {b}, {c}", (a, b, c))
    part = Partition.from_labels([tuple(np.nonzero(rel[a])[0].tolist()) for a in range(n)])
    violation = find_congruence_violation(alg, part)
    if violation is not None:
        name, pos, a, b = violation
        return fail("not_congruence", f"{name!r} breaks theta in position {pos} at ({a}, {b})", violation)
    for block in part.blocks:
        for a in block:
            for b in block:
                if t[a, b] != a:
                    return fail("block_not_projection", f"{a}.{b} != {a} inside a block", (a, b))
    q = np.array([[part.block_index(int(t[bi[0], bj[0]])) for bj in part.blocks] for bi in part.blocks])
    k = len(part.blocks)
    for i in range(k):
        if q[i, i] != i:
            return fail("quotient_not_two_semilattice", f"block {i} is not idempotent", (i,))
        for j in range(k):
            if q[i, j] != q[j, i]:
                return fail("quotient_not_two_semilattice", f"blocks {i}, {j} do not commute", (i, j))
            if q[i, q[i, j]] != q[i, j]:
                return fail("quotient_not_two_semilattice", f"x.(x.y) != x.y at blocks {i}, {j}", (i, j))
    return ThetaAudit(rel, part, None)


def theta_witness(alg: FiniteAlgebra, dot: Term) -> Partition:
    """The congruence ``{(a, b): a.b = a and b.a = b}``.

    Raises :class:`ThetaWitnessError` unless the relation is an equivalence,
    a congruence, ``dot`` is the first projection on each block and a
    2-semilattice operation on the quotient.
    """
    audit = audit_theta(alg, dot)
    if audit.failure is not None:
        raise audit.failure
    return audit.partition
