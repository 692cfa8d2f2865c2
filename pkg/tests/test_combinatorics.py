import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bipcp import combinatorics as comb
from bipcp.combinatorics import ALL_BLUE, RED_LAST, CombinatorialPath, Tree, WeightContext
from bipcp.errors import (
    BadDistinguishedLeaf,
    BadRange,
    BadThreshold,
    InvalidColouringForPath,
    InvalidPath,
    LengthTooLarge,
    PreconditionViolated,
)
from bipcp.hypergraph import StaticGraph
from bipcp.phase import AsymptoticScale as S
from bipcp.phase import ModelParams, strategy_exponents


def entries(paths):
    return [p.entries for p in paths]


def test_enumeration_small():
    assert entries(comb.enumerate_paths(1)) == [(0, 1)]
    assert entries(comb.enumerate_paths(2)) == [(0, 1, 0), (0, 1, 2)]
    assert entries(comb.enumerate_paths(3)) == [
        (0, 1, 0, 1), (0, 1, 0, 2), (0, 1, 2, 0), (0, 1, 2, 1), (0, 1, 2, 3),
    ]


def test_enumeration_counts_are_bell_numbers():
    # no consecutive repeats on ell+1 entries <-> set partitions of ell elements
    assert [len(comb.enumerate_paths(ell)) for ell in range(1, 8)] == [1, 2, 5, 15, 52, 203, 877]


def test_enumeration_cap_and_range():
    with pytest.raises(LengthTooLarge):
        comb.enumerate_paths(15)
    with pytest.raises(BadRange):
        comb.enumerate_paths(3, k=5)


def test_count_bound_examples():
    assert comb.count_bound(3, 3) == 12 and len(comb.enumerate_paths(3, 3)) == 3
    assert comb.count_bound(1, 2) == 1 == len(comb.enumerate_paths(1, 2))
    assert comb.count_bound(2, 2) == 6 and len(comb.enumerate_paths(2, 2)) == 1
    with pytest.raises(BadRange):
        comb.count_bound(2, 4)


def test_count_bound_dominates():
    for ell in range(1, 11):
        for k in range(2, ell + 2):
            assert len(comb.enumerate_paths(ell, k)) <= comb.count_bound(ell, k)


def test_path_validation():
    for bad in [(1, 0), (0, 0), (0, 2), (0, 1, 3), (0, 1, 1)]:
        with pytest.raises(InvalidPath):
            CombinatorialPath(bad)
    p = CombinatorialPath.parse("0,1,2,1,3")
    assert p.dump() == "0,1,2,1,3" and p.k == 4 and p.length == 4


def test_to_combinatorial_example():
    assert comb.to_combinatorial(["r", "y", "r", "z"]).entries == (0, 1, 0, 2)
    with pytest.raises(InvalidPath):
        comb.to_combinatorial(["r", "r"])


@settings(max_examples=200)
@given(st.integers(1, 9), st.randoms(use_true_random=False))
def test_round_trip_through_embedding(ell, rnd):
    paths = comb.enumerate_paths(ell)
    p = paths[rnd.randrange(len(paths))]
    labels = rnd.sample(range(1000), p.k)
    graph_path = [labels[i] for i in p.entries]
    assert comb.to_combinatorial(graph_path) == p


def test_discovery_tree_examples():
    t = comb.discovery_tree(CombinatorialPath((0, 1, 0, 2)))
    assert t.edges == {(0, 1), (0, 2)} and t.degree(0) == 2
    t = comb.discovery_tree(CombinatorialPath((0, 1, 2, 1, 3)))
    assert t.edges == {(0, 1), (1, 2), (1, 3)} and t.degree(1) == 3
    assert sorted(t.leaves()) == [2, 3]
    t = comb.discovery_tree(CombinatorialPath((0, 1, 2, 3, 4)))
    assert t.edges == {(0, 1), (1, 2), (2, 3), (3, 4)}


def test_discovery_tree_shape_all_paths():
    for ell in range(1, 9):
        for p in comb.enumerate_paths(ell):
            t = comb.discovery_tree(p, m_star=None) if not p.last_is_first_visit() else comb.discovery_tree(p)
            assert t.k == p.k and len(t.edges) == p.k - 1 and t.is_tree()


def test_tree_dump_and_m_star():
    t = Tree.from_edges([(0, 1), (1, 2)], 0, 2)
    assert t.dump() == "-1 0 1"
    assert Tree.from_parent_array([-1, 0, 1], 2).edges == t.edges
    with pytest.raises(BadDistinguishedLeaf):
        Tree.from_edges([(0, 1), (1, 2)], 0, 1)


def test_script_u_examples():
    assert comb.script_u(1, 0.5, 0.01) == pytest.approx(1.8, abs=1e-12)
    assert comb.script_u(2, 0.5, 0.01) == pytest.approx(math.log(100), abs=1e-12)
    assert comb.script_u(3, 0.7, 1.0) == 0.0
    with pytest.raises(BadThreshold):
        comb.script_u(1, 0.5, 0.0)


@pytest.mark.parametrize("eps", [1e-6, -1e-6])
def test_script_u_branch_continuity(eps):
    g = (1 + eps) / 2
    near = comb.script_u(2, g, 1e-3)
    assert near == pytest.approx(math.log(1e3), rel=1e-4)


def test_mark_integral_matches_quadrature():
    from scipy.integrate import quad

    for n, g, thr in [(1, 0.3, 0.05), (3, 0.6, 0.02), (2, 0.9, 0.1)]:
        ref, _ = quad(lambda u: u ** (-g * n), thr, 1.0)
        assert comb.mark_integral(n, g, thr) == pytest.approx(ref, rel=1e-9)


def ctx(g1=0.8, g2=0.8, a=1.0, lam=1e-3, thr=(0.3, 0.2)):
    return WeightContext.from_params(ModelParams(g1, g2, a, lam), thresholds=thr)


def test_weight_segment_example():
    c = ctx()
    seg = Tree.from_edges([(0, 1), (1, 2)], 0, 2)
    expected = 4 * c.lam ** (1 + c.a) * comb.script_u(1, c.gamma1, c.u1) * comb.script_v(2, c.gamma2, c.u2)
    assert comb.tree_weight_F(seg, c) == pytest.approx(math.log(expected), rel=1e-12)
    edge = Tree.from_edges([(0, 1)], 0, 1)
    assert comb.tree_weight_F(edge, c) == pytest.approx(math.log(2 * c.lam * comb.script_u(1, c.gamma1, c.u1)))


def test_weight_segment_asymptotic():
    c = ctx()
    nu, b, g2 = c.nu_star, c.b, c.gamma2
    env = comb.integral_envelope(2, 1, c, "upper")
    assert env == S(nu * (1 - 2 * g2), b * (1 - 2 * g2) + 1)
    seg = Tree.from_edges([(0, 1), (1, 2)], 0, 2)
    up = comb.tree_weight_F(seg, c, mode="asymptotic")
    assert up.p == pytest.approx(1 + c.a + nu * (1 - 2 * g2))
    assert up.q == pytest.approx(b * (1 - 2 * g2) + 2)  # one slack unit per factor
    assert comb.tree_weight(seg, c, slack_rule="exact").upper == S(up.p, b * (1 - 2 * g2))


def test_weight_rejects_bad_m_star():
    t = Tree.from_edges([(0, 1), (1, 2)], 0, 2)
    t.m_star = 1
    with pytest.raises(BadDistinguishedLeaf):
        comb.tree_weight_F(t, ctx())


def test_weight_finite_at_tiny_thresholds():
    # thresholds far below the smallest double are carried in log space
    c = WeightContext.from_params(ModelParams(0.8, 0.8, 1.0, 1e-300))
    assert c.u1 == 0.0 and c.log_u1 < -700
    t = comb.random_tree(15, np.random.default_rng(0))
    assert math.isfinite(comb.tree_weight_F(t, c))


def test_weight_empty_integral_when_clamped():
    c = WeightContext.from_params(ModelParams(0.8, 0.8, 1.0, 1e-8))
    assert c.u1 == 1.0
    assert comb.tree_weight_F(Tree.from_edges([(0, 1)], 0, 1), c) == -math.inf


def test_op1_example():
    t = Tree.from_edges([(0, 1), (0, 2), (2, 3)], 0, 3)
    out = comb.apply_reduction(t, "Op1", (0, 1))
    assert out.edges == {(0, 2), (2, 3)} and out.is_segment()


def test_op3_example():
    t = Tree.from_edges([(0, 1), (1, 2), (2, 3), (3, 4)], 0, 4)
    out = comb.apply_reduction(t, "Op3", (1, 2, 3))
    assert out.k == 3 and out.is_segment() and out.root == 0 and out.m_star == 4
    (w,) = set(out.adj) - {0, 4}
    assert w not in t.adj and out.parity[w] == t.parity[1]


def test_op2_example():
    t = Tree.from_edges([(0, 1), (1, 2), (0, 3), (3, 4)], 0, 4)
    out = comb.apply_reduction(t, "Op2", (0, 1, 2))
    assert out.edges == {(0, 3), (3, 4)}


def test_op_preconditions():
    t = Tree.from_edges([(0, 1), (1, 2), (1, 3)], 0, 3)
    with pytest.raises(PreconditionViolated, match="only child"):
        comb.apply_reduction(Tree.from_edges([(0, 1), (1, 2), (0, 3)], 0, 3), "Op1", (1, 2))
    with pytest.raises(PreconditionViolated, match="distinguished"):
        comb.apply_reduction(t, "Op1", (1, 3))
    with pytest.raises(PreconditionViolated):
        comb.apply_reduction(Tree.from_edges([(0, 1), (1, 2)], 0, 2), "Op3", (0, 1, 2))


def test_reduce_segment_is_noop():
    seg = Tree.from_edges([(0, 1), (1, 2)], 0, 2)
    out, log = comb.reduce_to_segment(seg, ctx())
    assert log == [] and out.edges == seg.edges


def test_reduce_seven_vertex_tree():
    # o with a pendant leaf and a pendant two-path, spine o-a-b-m*
    t = Tree.from_edges([(0, 1), (1, 2), (2, 3), (0, 4), (0, 5), (5, 6)], 0, 3)
    out, log = comb.reduce_to_segment(t, ctx())
    assert 2 <= len(log) <= 3
    assert out.k == 2
    assert all(s.scale_ok for s in log)


def test_reduce_random_trees():
    rng = np.random.default_rng(5)
    c = ctx()
    for _ in range(150):
        k = int(rng.integers(2, 21))
        t = comb.random_tree(k, rng)
        dist = len(t.path_to(t.m_star)) - 1
        out, log = comb.reduce_to_segment(t, c)
        assert out.k == (2 if dist % 2 else 3)
        assert len(log) >= (k - 3) // 2
        for s in log:
            assert s.scale_ok
            assert s.incremental_log_f == pytest.approx(s.recomputed_log_f, rel=1e-9)


def test_m_factor_examples():
    lam = 1e-3
    assert comb.m_factor(lam, 1.0, 3, 2).value == 1.0
    m = comb.m_factor(lam, 1.0, 2, 3)
    assert m.value == pytest.approx(24 * math.log(1 / lam) ** 16, rel=1e-12)
    assert m.scale == S(0, 16)
    with pytest.raises(BadRange):
        comb.m_factor(lam, 1.0, 1, 3)


def test_sum_bound_example():
    r = comb.sum_bound_check(3, 1e-3, 1.0)
    assert r.bound == 12**9 == 5_159_780_352
    assert r.passed and r.total < r.bound


def test_path_class_bound_examples():
    g1, g2, a = 0.8, 0.8, 1.0
    ex = strategy_exponents(g1, g2, a)
    e = (g1, g2, a, ex.mu_star, ex.nu_star)
    s, _ = comb.path_class_bound(2, 1, "P", e)
    assert s == S(1 + 0.2 * ex.nu_star, 16)
    s, _ = comb.path_class_bound(3, 2, "P", e)
    assert s == S(1 + a - 0.6 * ex.nu_star + 0.2 * ex.mu_star, 0)
    s, const = comb.path_class_bound(3, 3, "Q", e)
    assert s == S(1, 0) and const == 12


def test_mecke_formulas():
    g1, g2, u1, u2 = 0.6, 0.5, 0.3, 0.3
    U = lambda n: comb.script_u(n, g1, u1)  # noqa: E731
    V = lambda n: comb.script_v(n, g2, u2)  # noqa: E731
    p01, p012 = CombinatorialPath((0, 1)), CombinatorialPath((0, 1, 2))
    assert comb.mecke_expected_count(p01, ALL_BLUE, g1, g2, u1, u2) == pytest.approx(2 * U(1) * V(1))
    assert comb.mecke_expected_count(p012, ALL_BLUE, g1, g2, u1, u2) == pytest.approx(4 * U(1) * V(2) * U(1))
    red = 2 * U(1) * u2 ** (1 - g2) / (1 - g2)
    assert comb.mecke_expected_count(p01, RED_LAST, g1, g2, u1, u2) == pytest.approx(red)
    with pytest.raises(InvalidColouringForPath):
        comb.mecke_expected_count(CombinatorialPath((0, 1, 0)), RED_LAST, g1, g2, u1, u2)


def test_count_realized_hand_built():
    g = StaticGraph([1, 2, 2], [(0, 1), (0, 2)])
    blue = np.array([True, True, True])
    assert comb.count_realized_paths(g, CombinatorialPath((0, 1)), ALL_BLUE, blue) == 2
    assert comb.count_realized_paths(g, CombinatorialPath((0, 1, 0)), ALL_BLUE, blue) == 2
    blue[2] = False
    assert comb.count_realized_paths(g, CombinatorialPath((0, 1)), RED_LAST, blue) == 1
    alone = StaticGraph([1], [])
    assert comb.count_realized_paths(alone, CombinatorialPath((0, 1)), ALL_BLUE, np.array([True])) == 0


def test_mecke_window_meets_budget():
    cases = [(CombinatorialPath(p), c) for p in [(0, 1), (0, 1, 2)] for c in (ALL_BLUE, RED_LAST)]
    L = comb.mecke_window(cases, 0.6, 0.5, 0.3, 0.3, budget=0.01)
    for p, c in cases:
        assert comb.mecke_truncation_bound(p, c, 0.6, 0.5, 0.3, 0.3, L) < 0.01
