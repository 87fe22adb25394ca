"""Built-in algebras, terms and seeded instance generators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import App, FiniteAlgebra, Term, X, Y, Z, Var, binary, subuniverse_closure
from .instance import Instance, RawInstance, relation_closure, two_three_consistency
from .maltsev import COUNTEREXAMPLE_DOT, build_counterexample, counterexample_algebra

MEET = binary("meet")
DOT = binary("dot")


def meet2() -> FiniteAlgebra:
    return FiniteAlgebra.from_functions(2, {"meet": (2, min)})


def chain3() -> FiniteAlgebra:
    return FiniteAlgebra.from_functions(3, {"meet": (2, min)})


def rps() -> FiniteAlgebra:
    """Rock-paper-scissors: ``0.1 = 1``, ``1.2 = 2``, ``2.0 = 0``."""
    beats = {(0, 1): 1, (1, 2): 2, (2, 0): 0}

    def dot(a, b):
        if a == b:
            return a
        return beats.get((a, b), beats.get((b, a)))

    return FiniteAlgebra.from_functions(3, {"dot": (2, dot)})


def meet2_squared() -> FiniteAlgebra:
    """Product of two 2-element meet semilattices; ``(a, b)`` is ``2a + b``."""
    return FiniteAlgebra.from_functions(
        4, {"meet": (2, lambda p, q: 2 * min(p >> 1, q >> 1) + min(p & 1, q & 1))}
    )


def tournament(n: int, rng: np.random.Generator) -> FiniteAlgebra:
    """Random conservative commutative idempotent operation: ``a.b`` is one of
    ``a`` and ``b``.  Every such operation is a 2-semilattice."""
    table = np.zeros((n, n), dtype=np.int64)
    for a in range(n):
        table[a, a] = a
        for b in range(a + 1, n):
            table[a, b] = table[b, a] = a if rng.random() < 0.5 else b
    return FiniteAlgebra(n, [("dot", 2, table)])


# ----------------------------------------------------- block-twisted family

SEMILATTICE2 = np.array([[0, 0], [0, 1]])
RPS_TABLE = np.array([[0, 1, 0], [1, 1, 2], [0, 2, 2]])


@dataclass(frozen=True)
class BlockFamilyMember:
    """``S x Z2^2`` where ``S`` is a 2-semilattice quotient.

    Element ``(s, v)`` is encoded as ``4 s + v``.  Each ``S`` element carries
    a gauge ``g(s)`` in ``Z2^2``; relabelling ``(s, v) -> (s, v + g(s))``
    turns the algebra into the plain product of ``S`` and ``Z2^2``.  In the
    stored coordinates ``dot`` shifts ``v`` by ``g(s.t) + g(s)``, which is
    the first projection inside each block and depends on the second
    argument only through its block.  ``m`` adds the ``Z2^2`` parts.
    """

    algebra: FiniteAlgebra
    quotient: str
    gauge: tuple[int, ...]
    twisted: bool

    dot: Term = DOT
    maltsev: Term = App("m", (X, Y, Z))

    @property
    def s_size(self) -> int:
        return self.algebra.size // 4

    def s_algebra(self) -> FiniteAlgebra:
        return _s_algebra(self.quotient)

    def encode(self, s: int, u: int) -> int:
        """The element whose relabelled coordinates are ``(s, u)``."""
        return 4 * s + (u ^ self.gauge[s])


def _m_s(quotient: str, s: int, t: int, r: int) -> int:
    table = S_TABLES[quotient]
    return int(table[s, table[t, r]]) if quotient == "semilattice" else s


S_TABLES = {"semilattice": SEMILATTICE2, "rps": RPS_TABLE}


def _s_algebra(quotient: str) -> FiniteAlgebra:
    table = S_TABLES[quotient]
    k = len(table)
    return FiniteAlgebra.from_functions(
        k, {"dot": (2, lambda a, b: int(table[a, b])), "m": (3, lambda a, b, c: _m_s(quotient, a, b, c))}
    )


def block_family(rng: np.random.Generator, quotient: str = "semilattice", twisted: bool = False) -> BlockFamilyMember:
    """One member of the family.  With ``twisted`` the ``Z2^2`` part of a
    product across blocks copies whichever argument the ``S`` part lands on,
    which breaks ``x.(y.z) = x.(z.y)``."""
    s_table = S_TABLES[quotient]
    k = len(s_table)
    gauge = tuple(int(g) for g in rng.integers(4, size=k))
    n = 4 * k

    def dot(a, b):
        s, v = divmod(a, 4)
        t, w = divmod(b, 4)
        st = int(s_table[s, t])
        if twisted:
            return 4 * st + (v if st == s else w)
        return 4 * st + (v ^ gauge[st] ^ gauge[s])

    def m(a, b, c):
        s, v = divmod(a, 4)
        t, w = divmod(b, 4)
        r, u = divmod(c, 4)
        top = _m_s(quotient, s, t, r)
        return 4 * top + (v ^ w ^ u ^ gauge[s] ^ gauge[t] ^ gauge[r] ^ gauge[top])

    alg = FiniteAlgebra.from_functions(n, {"dot": (2, dot), "m": (3, m)})
    return BlockFamilyMember(alg, quotient, gauge, twisted)


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def _random_affine_map(rng: np.random.Generator):
    """A random affine bijection of ``Z2^2`` (elements as 2-bit integers)."""
    r1, r2 = rng.choice([1, 2, 3], size=2, replace=False).tolist()
    shift = int(rng.integers(4))
    return lambda u: (2 * _parity(r1 & u) + _parity(r2 & u)) ^ shift


def _k4_forms(u: int) -> tuple[int, int, int]:
    b1, b2 = u >> 1, u & 1
    return b1, b1 ^ b2, b2


K4_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def block_family_instance(
    member: BlockFamilyMember, rng: np.random.Generator, n_vars: int, free_rate: float = 0.3
) -> RawInstance:
    """Random raw instance whose relations are subuniverses by construction.

    Each pair of variables gets a subuniverse ``R_S`` of ``S^2`` containing
    the diagonal (the full square, the diagonal, or the closure of the
    diagonal and one random pair) times an affine relation on the
    relabelled ``Z2^2`` coordinates.  When ``n_vars >= 4`` four variables
    carry a parity system on the complete graph: each spreads its two bits
    over its three edges as ``b1``, ``b1 + b2``, ``b2`` (after a random
    affine change of coordinates), so the system is (2,3)-consistent and
    solvable exactly when the edge constants sum to 0.  The remaining pairs
    get one random equation or nothing.
    """
    s_alg = member.s_algebra()
    k = member.s_size
    variables = tuple(f"v{i}" for i in range(n_vars))
    quad = rng.choice(n_vars, size=4, replace=False).tolist() if n_vars >= 4 else []
    maps = [_random_affine_map(rng) for _ in range(n_vars)]
    constants = rng.integers(2, size=6).tolist()
    parity_edges = {(quad[i], quad[j]): (i, j, e) for e, (i, j) in enumerate(K4_EDGES)} if quad else {}
    # position of edge e among the edges at vertex v, in K4_EDGES order
    rank = {(v, e): sum(v in edge for edge in K4_EDGES[:e]) for e, edge in enumerate(K4_EDGES) for v in edge}
    cons = []
    for x in range(n_vars):
        for y in range(n_vars):
            if (x, y) not in parity_edges and (x >= y or (y, x) in parity_edges):
                continue
            pick = rng.random()
            if pick < 0.5:
                r_s = [(s, t) for s in range(k) for t in range(k)]
            else:
                seeds = {(s, s) for s in range(k)}
                if pick < 0.75:
                    seeds.add((int(rng.integers(k)), int(rng.integers(k))))
                r_s = sorted(relation_closure(s_alg, seeds))
            if (x, y) in parity_edges:
                i, j, e = parity_edges[x, y]
                fx, fy = maps[x], maps[y]
                affine = [
                    (u, w) for u in range(4) for w in range(4)
                    if _k4_forms(fx(u))[rank[i, e]] ^ _k4_forms(fy(w))[rank[j, e]] == constants[e]
                ]
            elif rng.random() < free_rate:
                affine = [(u, w) for u in range(4) for w in range(4)]
            else:
                a, b, c = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(2))
                affine = [(u, w) for u in range(4) for w in range(4) if _parity(a & u) ^ _parity(b & w) == c]
            rel = frozenset(
                (member.encode(s, u), member.encode(t, w)) for s, t in r_s for u, w in affine
            )
            cons.append(((variables[x], variables[y]), rel))
    return RawInstance(member.algebra, variables, tuple(cons))


# ------------------------------------------------------------ edge terms


@dataclass(frozen=True)
class EdgeTermPair:
    """An edge-term side ``W`` and a 2-semilattice side ``T`` of one type."""

    name: str
    w_side: FiniteAlgebra
    t_side: FiniteAlgebra
    e: Term
    k: int
    star: Term


def _z2_meet_pair() -> EdgeTermPair:
    w = FiniteAlgebra.from_functions(2, {"q": (3, lambda a, b, c: a ^ b ^ c)})
    t = FiniteAlgebra.from_functions(2, {"q": (3, lambda a, b, c: min(a, b, c))})
    e = App("q", (X, Y, Z))
    star = App("q", (X, Y, Y))
    return EdgeTermPair("z2-affine/meet", w, t, e, 2, star)


def _four_ary_pair(deps: tuple[int, ...]) -> EdgeTermPair:
    """Edge term ``x0 + x1 + x2`` on Z2 against a meet of ``deps`` on {0,1}."""
    w = FiniteAlgebra.from_functions(
        2, {"e": (4, lambda a, b, c, d: a ^ b ^ c), "s": (2, lambda a, b: a)}
    )
    t = FiniteAlgebra.from_functions(
        2, {"e": (4, lambda *args: min(args[i] for i in deps)), "s": (2, min)}
    )
    e = App("e", tuple(Var(i) for i in range(4)))
    return EdgeTermPair(f"z2-edge/meet-on-{''.join(map(str, deps))}", w, t, e, 3, App("s", (X, Y)))


EDGE_DEPENDENCIES = ((0, 1), (0, 2), (1,), (3,), (1, 3), (2, 3), (0, 1, 3), (1, 2, 3), (0, 1, 2, 3))


def edge_term_pairs() -> list[EdgeTermPair]:
    return [_z2_meet_pair()] + [_four_ary_pair(d) for d in EDGE_DEPENDENCIES]


# ---------------------------------------------------------------- corpus


@dataclass(frozen=True)
class AlgebraFixture:
    name: str
    build: Callable[[], FiniteAlgebra]
    dot: Term
    two_semilattice: bool
    description: str


ALGEBRAS = {
    "meet2": AlgebraFixture("meet2", meet2, MEET, True, "two-element meet semilattice"),
    "chain3": AlgebraFixture("chain3", chain3, MEET, True, "three-element chain under min"),
    "rps": AlgebraFixture("rps", rps, DOT, True, "rock-paper-scissors 2-semilattice"),
    "meet2sq": AlgebraFixture("meet2sq", meet2_squared, MEET, True, "square of the two-element meet semilattice"),
    "counterexample": AlgebraFixture(
        "counterexample", counterexample_algebra, COUNTEREXAMPLE_DOT, False,
        "top plus Z2xZ2 with the three-branch ternary q; dot = q(x,y,y)",
    ),
    "block-semilattice": AlgebraFixture(
        "block-semilattice", lambda: block_family(np.random.default_rng(0), "semilattice").algebra, DOT, False,
        "Z2xZ2 blocks over a 2-element semilattice (seed 0)",
    ),
    "block-rps": AlgebraFixture(
        "block-rps", lambda: block_family(np.random.default_rng(0), "rps").algebra, DOT, False,
        "Z2xZ2 blocks over the rock-paper-scissors quotient (seed 0)",
    ),
    "block-twisted": AlgebraFixture(
        "block-twisted", lambda: block_family(np.random.default_rng(0), "semilattice", twisted=True).algebra,
        DOT, False, "block family with a twist that breaks x.(y.z) = x.(z.y)",
    ),
}

TWO_SEMILATTICES = [name for name, fx in ALGEBRAS.items() if fx.two_semilattice]


def algebra(name: str) -> FiniteAlgebra:
    try:
        return ALGEBRAS[name].build()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}") from None


def instances() -> dict[str, tuple[Instance, Term]]:
    """Named built-in instances with the binary term to use on them."""
    m2 = meet2()
    _, cdot, counter = build_counterexample()
    return {
        "meet2-full": (Instance.full(m2, ("x", "y", "z")), MEET),
        "rps-full": (Instance.full(rps(), ("x", "y", "z")), DOT),
        "chain3-full": (Instance.full(chain3(), ("x", "y")), MEET),
        "meet2-singleton": (
            Instance.build(m2, ("x", "y"), {"x": [1], "y": [0]}, {}), MEET,
        ),
        "counterexample": (counter, cdot),
    }


# ------------------------------------------------------------ generators


def random_subuniverse(alg: FiniteAlgebra, rng: np.random.Generator, seeds: int = 2) -> frozenset:
    picks = rng.choice(alg.size, size=min(seeds, alg.size), replace=False)
    return frozenset(subuniverse_closure(alg, picks.tolist()))


def random_relation(alg: FiniteAlgebra, rng: np.random.Generator, seeds: int = 2) -> frozenset:
    n = alg.size
    pairs = {(int(rng.integers(n)), int(rng.integers(n))) for _ in range(seeds)}
    return relation_closure(alg, pairs)


def random_raw_instance(
    alg: FiniteAlgebra,
    rng: np.random.Generator,
    n_vars: int,
    n_constraints: int,
    seeds: int = 2,
    unary_rate: float = 0.2,
) -> RawInstance:
    variables = tuple(f"v{i}" for i in range(n_vars))
    binary_cs = []
    for _ in range(n_constraints):
        x, y = rng.choice(n_vars, size=2, replace=n_vars < 2)
        binary_cs.append(((variables[x], variables[y]), random_relation(alg, rng, seeds)))
    unary_cs = [
        (v, random_subuniverse(alg, rng, seeds)) for v in variables if rng.random() < unary_rate
    ]
    return RawInstance(alg, variables, tuple(binary_cs), tuple(unary_cs))


def random_standard_instance(
    alg: FiniteAlgebra,
    rng: np.random.Generator,
    n_vars: int,
    n_constraints: int,
    seeds: int = 2,
    unary_rate: float = 0.2,
    attempts: int = 50,
) -> Instance:
    """A nonempty standard instance from the consistency closure of a random
    raw instance; retries until one comes out nonempty."""
    for _ in range(attempts):
        raw = random_raw_instance(alg, rng, n_vars, n_constraints, seeds, unary_rate)
        inst = two_three_consistency(raw)
        if not inst.is_empty():
            return inst
    return Instance.full(alg, tuple(f"v{i}" for i in range(n_vars)))


def random_two_semilattice(rng: np.random.Generator, max_size: int = 5) -> tuple[str, FiniteAlgebra, Term]:
    """A fixture or a fresh tournament, each with its binary term."""
    choice = int(rng.integers(len(TWO_SEMILATTICES) + 2))
    if choice < len(TWO_SEMILATTICES):
        name = TWO_SEMILATTICES[choice]
        return name, algebra(name), ALGEBRAS[name].dot
    n = int(rng.integers(2, max_size + 1))
    return f"tournament{n}", tournament(n, rng), DOT
