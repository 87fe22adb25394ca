"""Deciding standard (2,3)-instances over algebras built from blocks on which a
binary term is the first projection, glued by a 2-semilattice quotient.

Pipeline: cut every potato into its witness-congruence blocks, solve the
resulting quotient instance with the Bulatov solver, keep only the chosen
blocks and hand the restricted instance to a block solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .algebra import (
    AlgebraError,
    App,
    FiniteAlgebra,
    Term,
    X,
    Y,
    Z,
    binary_table,
    compose2,
    dot_reduct,
    find_identity_violation,
    is_idempotent,
    is_two_semilattice,
    quotient_algebra,
    restrict_to_subuniverse,
)
from .bulatov import InternalInconsistencyError, bulatov_solution
from .congruence import audit_theta, theta_witness
from .instance import (
    SEARCH_BOUND,
    Instance,
    InstanceError,
    NotStandardError,
    brute_force_solve,
    is_solution,
    restrict,
    validate_standard,
)
from .partition import Partition

W_NOTE = (
    "Only x.y = x on each block is checked; whether the blocks lie in a "
    "variety with a polynomial algorithm cannot be read off the tables and is "
    "left to the block solver's declared input class."
)


class HypothesisError(AlgebraError):
    code = "hypothesis_failed"

    def __init__(self, message: str, report: "HypothesisReport | None" = None):
        super().__init__(message)
        self.report = report


class TransferRefusedError(InstanceError):
    code = "transfer_refused"


# ------------------------------------------------------------- hypotheses


def twisted_associativity(dot: Term) -> tuple[Term, Term]:
    """``x.(y.z)`` and ``x.(z.y)``."""
    return compose2(dot, X, compose2(dot, Y, Z)), compose2(dot, X, compose2(dot, Z, Y))


@dataclass
class HypothesisReport:
    """Verdicts (a)-(d) for an algebra and a binary term.

    (a) ``{(a,b): a.b = a, b.a = b}`` is a congruence;
    (b) the term is a 2-semilattice operation on the quotient;
    (c) the term is the first projection inside each block;
    (d) ``x.(y.z) = x.(z.y)`` holds everywhere.
    """

    theta: object  # Partition or None
    a: bool
    b: bool
    c: bool
    d: bool
    a_failure: str | None = None
    b_witness: tuple | None = None
    c_witness: tuple | None = None
    d_witness: tuple | None = None
    note: str = W_NOTE

    @property
    def abc(self) -> bool:
        return self.a and self.b and self.c

    @property
    def all_ok(self) -> bool:
        return self.abc and self.d

    def failing(self) -> list[str]:
        return [k for k in "abcd" if not getattr(self, k)]

    def to_json(self) -> dict:
        return {
            "theta": None if self.theta is None else self.theta.to_json()["blocks"],
            "a_theta_congruence": {"ok": self.a, "failure": self.a_failure},
            "b_quotient_two_semilattice": {"ok": self.b, "witness": _jsonable(self.b_witness)},
            "c_projection_on_blocks": {"ok": self.c, "witness": _jsonable(self.c_witness)},
            "d_twisted_associativity": {"ok": self.d, "witness": _jsonable(self.d_witness)},
            "note": self.note,
        }


def _jsonable(w):
    return None if w is None else [int(v) for v in w]


def hypothesis_check(alg: FiniteAlgebra, dot: Term) -> HypothesisReport:
    if not is_idempotent(alg):
        raise HypothesisError("the algebra is not idempotent")
    t = binary_table(alg, dot)
    audit = audit_theta(alg, dot)
    equivalence_codes = {"not_reflexive", "not_transitive", "not_congruence"}
    a = audit.failure is None or audit.failure.code not in equivalence_codes
    theta = None
    b = c = False
    b_w = c_w = None
    if a:
        rel = audit.relation
        theta = Partition.from_labels([tuple(np.nonzero(rel[i])[0].tolist()) for i in range(alg.size)])
        c_w = next(((x, y) for block in theta.blocks for x in block for y in block if t[x, y] != x), None)
        c = c_w is None
        quo, _ = quotient_algebra(dot_reduct(alg, dot), theta)
        b = is_two_semilattice(quo, App("dot", (X, Y)))
        if not b:
            q = quo.table("dot")
            k = quo.size
            b_w = next(
                (
                    (theta.blocks[i][0], theta.blocks[j][0])
                    for i in range(k) for j in range(k)
                    if q[i, i] != i or q[i, j] != q[j, i] or q[i, q[i, j]] != q[i, j]
                ),
                None,
            )
    lhs, rhs = twisted_associativity(dot)
    d_w = find_identity_violation(alg, lhs, rhs, 3)
    return HypothesisReport(
        theta=theta, a=a, b=b, c=c, d=d_w is None,
        a_failure=None if a else audit.failure.code,
        b_witness=b_w, c_witness=c_w, d_witness=None if d_w is None else tuple(d_w),
    )


# ------------------------------------------------------------- quotient


@dataclass(frozen=True)
class QuotientMap:
    """How an instance maps onto its quotient.

    Every distinct potato set gets its own component of the quotient
    algebra; ``blocks[x]`` lists the global ids of the blocks of ``P_x`` in
    order and ``members[g]`` the elements of block ``g``.  ``instance`` is the
    quotient instance and ``dot`` its binary term.
    """

    variables: tuple[str, ...]
    algebra: FiniteAlgebra
    dot: Term
    blocks: Mapping[str, tuple[int, ...]]
    members: tuple[tuple[int, ...], ...]
    element_block: Mapping[str, Mapping[int, int]] = field(repr=False)
    instance: Instance = field(repr=False)

    def block_of(self, var: str, element: int) -> int:
        return self.element_block[var][element]

    def elements(self, gid: int) -> tuple[int, ...]:
        return self.members[gid]

    def image(self, s: Mapping[str, int]) -> dict:
        return {v: self.block_of(v, s[v]) for v in self.variables}

    def describe(self, phi: Mapping[str, int]) -> dict:
        return {v: list(self.members[phi[v]]) for v in self.variables}


QUOTIENT_DOT = App("dot", (X, Y))


def build_quotient_instance(inst: Instance, dot: Term) -> tuple[Instance, QuotientMap]:
    """The quotient of ``inst`` by the witness congruence of every potato.

    The ambient algebra has one component per distinct potato set whose
    elements are that potato's blocks, multiplied through representatives.
    Components are stacked as an ordinal sum (the later one absorbs), which
    keeps the whole thing a 2-semilattice.
    """
    if inst.is_empty():
        raise InstanceError("the instance is empty")
    t = binary_table(inst.algebra, dot)
    comps: list[tuple[frozenset, tuple[tuple[int, ...], ...]]] = []
    comp_of: dict[frozenset, int] = {}
    for pot in inst.potatoes:
        if pot in comp_of:
            continue
        sub, elements = restrict_to_subuniverse(inst.algebra, pot)
        theta = theta_witness(sub, dot)
        blocks = tuple(tuple(elements[i] for i in b) for b in theta.blocks)
        comp_of[pot] = len(comps)
        comps.append((pot, blocks))
    offsets = np.cumsum([0] + [len(b) for _, b in comps]).tolist()
    members = tuple(block for _, blocks in comps for block in blocks)
    size = offsets[-1]
    gid_of = {}
    for c, (_, blocks) in enumerate(comps):
        for i, block in enumerate(blocks):
            for a in block:
                gid_of[c, a] = offsets[c] + i
    comp_id = [c for c, (_, blocks) in enumerate(comps) for _ in blocks]
    table = np.zeros((size, size), dtype=np.int64)
    for g in range(size):
        for h in range(size):
            cg, ch = comp_id[g], comp_id[h]
            if cg == ch:
                table[g, h] = gid_of[cg, int(t[members[g][0], members[h][0]])]
            else:
                table[g, h] = g if cg > ch else h
    alg = FiniteAlgebra(size, [("dot", 2, table)])

    element_block = {
        v: {a: gid_of[comp_of[pot], a] for a in pot} for v, pot in zip(inst.variables, inst.potatoes)
    }
    pots = tuple(frozenset(element_block[v].values()) for v in inst.variables)
    rels = {}
    for (x, y), rel in inst.relations.items():
        ex, ey = element_block[inst.variables[x]], element_block[inst.variables[y]]
        rels[x, y] = frozenset((ex[a], ey[b]) for a, b in rel)
    quotient = Instance(alg, inst.variables, pots, rels)
    blocks = {v: tuple(sorted(set(element_block[v].values()))) for v in inst.variables}
    qm = QuotientMap(inst.variables, alg, QUOTIENT_DOT, blocks, members, element_block, quotient)
    return quotient, qm


def passes_through(s: Mapping[str, int], phi: Mapping[str, int], qm: QuotientMap) -> bool:
    return all(qm.block_of(v, s[v]) == phi[v] for v in qm.variables)


def transfer_solution(
    s: Mapping[str, int],
    phi: Mapping[str, int],
    psi: Mapping[str, int],
    inst: Instance,
    qm: QuotientMap,
    dot: Term,
    debug: bool = False,
) -> dict:
    """Move a solution through ``phi`` to one through ``psi``.

    Needs ``phi(x) -> psi(x)`` in the quotient for every ``x``.  Each value is
    multiplied by the least element of its target block; that this does not
    depend on the element picked is exactly where ``x.(y.z) = x.(z.y)`` is
    used, so the transfer is refused when that identity fails.
    """
    lhs, rhs = twisted_associativity(dot)
    bad = find_identity_violation(inst.algebra, lhs, rhs, 3)
    if bad is not None:
        raise TransferRefusedError(f"x.(y.z) = x.(z.y) fails at {tuple(bad)}")
    if not is_solution(inst, s):
        raise TransferRefusedError("s is not a solution")
    if not passes_through(s, phi, qm):
        raise TransferRefusedError("s does not pass through phi")
    if not is_solution(qm.instance, psi):
        raise TransferRefusedError("psi is not a solution of the quotient")
    q = qm.algebra.table("dot")
    for v in inst.variables:
        if q[phi[v], psi[v]] != psi[v]:
            raise TransferRefusedError(f"no arrow from phi({v}) to psi({v})")
    t = binary_table(inst.algebra, dot)
    out = {}
    for v in inst.variables:
        target = qm.elements(psi[v])
        value = int(t[s[v], target[0]])
        if debug:
            for a in qm.elements(phi[v]):
                images = {int(t[a, b]) for b in target}
                if len(images) != 1:
                    raise InternalInconsistencyError(f"x.b depends on b within block {list(target)} at x={a}")
        out[v] = value
    if debug and not (is_solution(inst, out) and passes_through(out, psi, qm)):
        raise InternalInconsistencyError("transferred assignment is not a solution through psi")
    return out


# ---------------------------------------------------------- block solvers


@dataclass(frozen=True)
class BlockSolver:
    """A named exact procedure for the restricted instances."""

    name: str
    solve: Callable[[Instance], dict | None] = field(repr=False, compare=False)
    bound: int | None = None

    def declares_exact(self, inst: Instance) -> bool:
        if self.bound is None:
            return True
        total = 1
        for p in inst.potatoes:
            total *= len(p)
        return total <= self.bound


def default_block_solver(bound: int = SEARCH_BOUND) -> BlockSolver:
    """Exhaustive backtracking, exact within ``bound`` assignments."""
    return BlockSolver("brute", lambda inst: brute_force_solve(inst, bound), bound)


BLOCK_SOLVERS = {"brute": default_block_solver}


@dataclass
class Verdict:
    solvable: bool
    witness: dict | None
    hypotheses: HypothesisReport | None
    unsound_no_possible: bool
    bulatov: dict | None = None
    chosen_blocks: dict | None = None
    trace: list = field(default_factory=list)

    def to_json(self, trace: bool = False) -> dict:
        out = {
            "solvable": self.solvable,
            "witness": self.witness,
            "hypotheses": None if self.hypotheses is None else self.hypotheses.to_json(),
            "unsound_no_possible": self.unsound_no_possible,
        }
        if trace:
            out["quotient_solution"] = self.chosen_blocks
            out["trace"] = [step.to_json() for step in self.trace]
        return out


def main_solve(inst: Instance, dot: Term, blocks: BlockSolver | None = None, debug: bool = False,
               check_standard: bool = True) -> Verdict:
    """Decide a standard instance.

    A YES always carries a witness checked against ``inst``.  When identity
    (d) fails the verdict is tagged ``unsound_no_possible``: a NO may then be
    wrong.
    """
    blocks = blocks or default_block_solver()
    if inst.is_empty():
        return Verdict(False, None, None, False)
    if check_standard:
        report = validate_standard(inst)
        if not report.standard:
            raise NotStandardError(f"the instance is not standard: {report.to_json()}")
    hyp = hypothesis_check(inst.algebra, dot)
    if not hyp.abc:
        raise HypothesisError(f"hypotheses {hyp.failing()} fail", hyp)
    quotient, qm = build_quotient_instance(inst, dot)
    phi, trace = bulatov_solution(quotient, qm.dot, debug=debug)
    restricted = _restrict_to_blocks(inst, qm, phi)
    witness = blocks.solve(restricted)
    if witness is not None and not is_solution(inst, witness):
        raise InternalInconsistencyError(f"block solver {blocks.name!r} returned a non-solution")
    return Verdict(witness is not None, witness, hyp, not hyp.d, phi, qm.describe(phi), trace)


def _restrict_to_blocks(inst: Instance, qm: QuotientMap, phi: Mapping[str, int]) -> Instance:
    return restrict(inst, {v: qm.elements(phi[v]) for v in inst.variables})


# ---------------------------------------------------------- counterexample

TOP = 0
#: Z2 x Z2 element (b1, b2) is encoded as 1 + 2*b1 + b2
Z2SQ = (1, 2, 3, 4)


def z2sq(b1: int, b2: int) -> int:
    return 1 + 2 * b1 + b2


def z2sq_bits(a: int) -> tuple[int, int]:
    return (a - 1) >> 1, (a - 1) & 1


def _q(a1: int, a2: int, a3: int) -> int:
    args = (a1, a2, a3)
    if all(a == TOP for a in args):
        return TOP
    if all(a != TOP for a in args):
        bits = [z2sq_bits(a) for a in args]
        return z2sq(sum(b[0] for b in bits) % 2, sum(b[1] for b in bits) % 2)
    return next(a for a in args if a != TOP)


def counterexample_algebra() -> FiniteAlgebra:
    return FiniteAlgebra.from_functions(5, {"q": (3, _q)})


COUNTEREXAMPLE_DOT = App("q", (X, Y, Y))
COUNTEREXAMPLE_VARIABLES = ("w", "x", "y", "z")
#: the six edges of the parity system and the right-hand side of each
PARITY_EDGES = (("w", "x"), ("w", "y"), ("w", "z"), ("x", "y"), ("x", "z"), ("y", "z"))
PARITY_CONSTANTS = (1, 0, 0, 0, 0, 0)


def _contribution(var: str, edge_rank: int, a: int) -> int:
    """Linear form a variable feeds into its first, second and third edge:
    ``b1``, ``b1 + b2`` and ``b2``."""
    b1, b2 = z2sq_bits(a)
    return (b1, b1 ^ b2, b2)[edge_rank]


def parity_relations() -> dict[tuple[str, str], frozenset]:
    """An unsolvable, already (2,3)-consistent system over Z2 x Z2.

    Every variable spreads its two bits over its three edges as ``b1``,
    ``b1 + b2``, ``b2``, so summing all edge equations gives ``0`` on the
    left and the sum of the constants (1) on the right.  Any two of the three
    forms are independent, which leaves every pair extendable to a third
    variable.
    """
    rank = {}
    for v in COUNTEREXAMPLE_VARIABLES:
        incident = [e for e in PARITY_EDGES if v in e]
        for i, e in enumerate(incident):
            rank[v, e] = i
    rels = {}
    for e, const in zip(PARITY_EDGES, PARITY_CONSTANTS):
        u, v = e
        rels[u, v] = frozenset(
            (a, b) for a in Z2SQ for b in Z2SQ
            if _contribution(u, rank[u, e], a) ^ _contribution(v, rank[v, e], b) == const
        )
    return rels


def build_counterexample() -> tuple[FiniteAlgebra, Term, Instance]:
    """The five-element algebra with a solvable instance that the quotient
    pipeline answers NO on."""
    alg = counterexample_algebra()
    rels = {e: rel | {(TOP, TOP)} for e, rel in parity_relations().items()}
    pots = {v: range(5) for v in COUNTEREXAMPLE_VARIABLES}
    inst = Instance.build(alg, COUNTEREXAMPLE_VARIABLES, pots, rels)
    report = validate_standard(inst)
    if not report.standard:
        raise InternalInconsistencyError(f"counterexample instance is not standard: {report.to_json()}")
    return alg, COUNTEREXAMPLE_DOT, inst


def counterexample_linear_part() -> Instance:
    """The Z2 x Z2 subinstance on its own."""
    _, _, inst = build_counterexample()
    return restrict(inst, {v: Z2SQ for v in inst.variables})
