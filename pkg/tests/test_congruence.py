import numpy as np
import pytest
from hypothesis import given, strategies as st

from maltsevcsp import fixtures as F
from maltsevcsp.algebra import App, FiniteAlgebra, X, Y, binary_table
from maltsevcsp.congruence import (
    CongruenceBoundError,
    ThetaWitnessError,
    all_congruences,
    audit_theta,
    brute_force_congruences,
    find_congruence_violation,
    is_congruence,
    join,
    maximal_congruences,
    principal_congruence,
    theta_witness,
)
from maltsevcsp.maltsev import COUNTEREXAMPLE_DOT, counterexample_algebra
from maltsevcsp.partition import Partition

from oracles import congruence_labels

CX = counterexample_algebra()
SMALL = ["meet2", "chain3", "rps", "meet2sq", "counterexample"]


def blocks(alg_size, *bs):
    return Partition.from_blocks(alg_size, [list(b) for b in bs])


def test_trivial_congruences_everywhere():
    for name in F.ALGEBRAS:
        alg = F.algebra(name)
        assert is_congruence(alg, Partition.discrete(alg.size))
        assert is_congruence(alg, Partition.indiscrete(alg.size))


def test_is_congruence_examples():
    assert is_congruence(CX, blocks(5, [0], [1, 2, 3, 4]))
    bad = blocks(5, [0, 1], [2, 3, 4])
    assert not is_congruence(CX, bad)
    assert find_congruence_violation(CX, bad) == ("q", 0, 0, 1)
    with pytest.raises(Exception):
        is_congruence(CX, Partition.discrete(4))


def test_principal_congruence_examples():
    m = F.meet2()
    assert principal_congruence(m, 1, 1) == Partition.discrete(2)
    assert principal_congruence(m, 0, 1) == Partition.indiscrete(2)
    assert principal_congruence(F.chain3(), 1, 2) == blocks(3, [0], [1, 2])
    with pytest.raises(Exception):
        principal_congruence(m, 0, 2)


def test_all_congruences_examples():
    one = FiniteAlgebra(1, [("f", 2, [0])])
    assert all_congruences(one) == [Partition.discrete(1)]
    assert set(all_congruences(F.meet2())) == {Partition.discrete(2), Partition.indiscrete(2)}
    got = {p.blocks for p in all_congruences(CX)}
    assert got == {
        ((0,), (1,), (2,), (3,), (4,)),
        ((0,), (1, 2), (3, 4)),
        ((0,), (1, 3), (2, 4)),
        ((0,), (1, 4), (2, 3)),
        ((0,), (1, 2, 3, 4)),
        ((0, 1, 2, 3, 4),),
    }
    assert len(all_congruences(F.chain3())) == 4
    assert len(all_congruences(F.rps())) == 2
    assert len(all_congruences(F.meet2_squared())) == 7


def test_maximal_congruences_examples():
    assert maximal_congruences(F.meet2()) == [Partition.discrete(2)]
    assert {p.blocks for p in maximal_congruences(F.chain3())} == {((0, 1), (2,)), ((0,), (1, 2))}
    assert maximal_congruences(F.rps()) == [Partition.discrete(3)]
    assert {p.blocks for p in maximal_congruences(F.meet2_squared())} == {
        ((0, 1, 2), (3,)), ((0, 1), (2, 3)), ((0, 2), (1, 3)),
    }
    assert {p.blocks for p in maximal_congruences(CX)} == {((0,), (1, 2, 3, 4))}


def test_congruence_bound_refused():
    big = FiniteAlgebra.from_functions(13, {"f": (2, lambda a, b: a)})
    with pytest.raises(CongruenceBoundError):
        all_congruences(big)
    with pytest.raises(CongruenceBoundError):
        brute_force_congruences(F.algebra("block-semilattice"))


@pytest.mark.parametrize("name", SMALL)
def test_all_congruences_match_partition_oracle(name):
    alg = F.algebra(name)
    assert {p.rep for p in all_congruences(alg)} == {
        Partition.from_labels(lab).rep for lab in congruence_labels(alg)
    }


@pytest.mark.parametrize("name", SMALL + ["block-semilattice", "block-rps"])
def test_principal_is_least_containing_pair(name):
    alg = F.algebra(name)
    lattice = all_congruences(alg)
    for a in range(alg.size):
        for b in range(a + 1, alg.size):
            cg = principal_congruence(alg, a, b)
            containing = [c for c in lattice if c.rep[a] == c.rep[b]]
            assert cg in containing
            assert all(cg.refines(c) for c in containing)


@pytest.mark.parametrize("name", SMALL)
def test_join_with_bounds(name):
    alg = F.algebra(name)
    bottom, top = Partition.discrete(alg.size), Partition.indiscrete(alg.size)
    for alpha in all_congruences(alg):
        assert join(alg, alpha, bottom) == alpha
        assert join(alg, alpha, top) == top


@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_congruences_of_random_tournaments(n, seed):
    alg = F.tournament(n, np.random.default_rng(seed))
    assert {p.rep for p in all_congruences(alg)} == {
        Partition.from_labels(lab).rep for lab in congruence_labels(alg)
    }
    maxes = maximal_congruences(alg)
    assert maxes and all(not m.is_indiscrete() for m in maxes)


# ----------------------------------------------------------------- theta


def test_theta_on_two_semilattices_is_discrete():
    for name in F.TWO_SEMILATTICES:
        fx = F.ALGEBRAS[name]
        alg = fx.build()
        assert theta_witness(alg, fx.dot) == Partition.discrete(alg.size)


def test_theta_counterexample():
    assert theta_witness(CX, COUNTEREXAMPLE_DOT).blocks == ((0,), (1, 2, 3, 4))


def test_theta_first_projection_is_total():
    assert theta_witness(CX, X) == Partition.indiscrete(5)


def test_theta_block_family():
    member = F.block_family(np.random.default_rng(0), "rps")
    theta = theta_witness(member.algebra, member.dot)
    assert theta.blocks == ((0, 1, 2, 3), (4, 5, 6, 7), (8, 9, 10, 11))


def test_theta_failure_codes():
    # the second projection: a.b = a only on the diagonal, theta is 0_A, but
    # the quotient is not commutative
    with pytest.raises(ThetaWitnessError) as err:
        theta_witness(F.meet2(), Y)
    assert err.value.code == "quotient_not_two_semilattice"
    # a.b = a for (0,1) and (1,2) but not for (0,2)
    table = [[0, 0, 2], [1, 1, 1], [0, 2, 2]]
    alg = FiniteAlgebra.from_functions(3, {"d": (2, lambda a, b: table[a][b])})
    audit = audit_theta(alg, App("d", (X, Y)))
    assert not audit.ok and audit.failure.code == "not_transitive"
    # theta is the equivalence {0,1}{2} but a unary op separates 0 from 1
    alg = FiniteAlgebra.from_functions(
        3, {"d": (2, lambda a, b: a if {a, b} <= {0, 1} else b), "f": (1, lambda a: [0, 2, 2][a])}
    )
    assert audit_theta(alg, App("d", (X, Y))).failure.code == "not_congruence"


@pytest.mark.parametrize("name", list(F.ALGEBRAS))
def test_theta_outputs_pass_independent_audit(name):
    fx = F.ALGEBRAS[name]
    alg = fx.build()
    audit = audit_theta(alg, fx.dot)
    if not audit.ok:
        return
    theta = audit.partition
    t = binary_table(alg, fx.dot)
    rel = {(a, b) for a in range(alg.size) for b in range(alg.size) if t[a, b] == a and t[b, a] == b}
    assert rel == {(a, b) for blk in theta.blocks for a in blk for b in blk}
    assert is_congruence(alg, theta)
    for blk in theta.blocks:
        assert all(t[a, b] == a for a in blk for b in blk)
    lab = [theta.block_index(a) for a in range(alg.size)]
    q = {}
    for a in range(alg.size):
        for b in range(alg.size):
            q.setdefault((lab[a], lab[b]), set()).add(lab[t[a, b]])
    assert all(len(v) == 1 for v in q.values())
    qq = {k: v.pop() for k, v in q.items()}
    k = len(theta.blocks)
    for i in range(k):
        assert qq[i, i] == i
        for j in range(k):
            assert qq[i, j] == qq[j, i]
            assert qq[i, qq[i, j]] == qq[i, j]
