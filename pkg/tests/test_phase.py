import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bipcp import phase
from bipcp.errors import BadB, EmptyGrid, GammaOutOfRange, LambdaOutOfRange, NonpositiveA, SubcriticalPair
from bipcp.phase import AsymptoticScale as S


def supercritical():
    return st.tuples(
        st.floats(0.02, 0.98), st.floats(0.02, 0.98), st.floats(0.01, 10.0)
    ).filter(lambda t: t[0] + t[1] > 1.0 + 1e-6)


def test_derive_symmetric_point():
    d = phase.validate_and_derive(phase.ModelParams(0.8, 0.8, 1.0, 0.2))
    assert d.Delta == pytest.approx(0.6, abs=1e-12)
    assert d.Delta1 == pytest.approx(0.6, abs=1e-12)
    assert d.Delta2 == pytest.approx(0.6, abs=1e-12)
    assert d.delta == pytest.approx(0.8, abs=1e-12)
    assert d.lambda1 == d.lambda2 == 0.2
    assert d.b == pytest.approx(17 / 0.8 + 1)
    assert d.b * d.delta > 17


def test_derive_one_sided_point():
    d = phase.validate_and_derive(phase.ModelParams(0.4, 0.9, 2.0, 0.1))
    assert d.Delta1 == 0.0
    assert d.Delta2 == pytest.approx(0.8, abs=1e-12)
    assert d.Delta == pytest.approx(0.3, abs=1e-12)
    assert d.delta == pytest.approx(0.4, abs=1e-12)
    assert d.lambda2 == pytest.approx(0.01, abs=1e-15)


def test_derive_errors():
    with pytest.raises(SubcriticalPair):
        phase.ModelParams(0.4, 0.4, 1.0, 0.1)
    phase.ModelParams(0.4, 0.4, 1.0, 0.1, allow_subcritical=True)
    with pytest.raises(GammaOutOfRange):
        phase.ModelParams(1.0, 0.5)
    with pytest.raises(NonpositiveA):
        phase.ModelParams(0.8, 0.8, 0.0)
    with pytest.raises(LambdaOutOfRange):
        phase.ModelParams(0.8, 0.8, 1.0, 1.0)
    with pytest.raises(BadB):
        phase.validate_and_derive(phase.ModelParams(0.8, 0.8, 1.0, 0.2), b_override=17 / 0.8)


def test_clamp_flags_at_desk_scale():
    d = phase.validate_and_derive(phase.ModelParams(0.8, 0.8, 1.0, 0.2))
    assert d.u_blue == 1.0 and d.u_blue_clamped
    tiny = phase.validate_and_derive(phase.ModelParams(0.8, 0.8, 1.0, 1e-300), b_override=22.0)
    assert math.isfinite(tiny.u0) and not math.isnan(tiny.u_blue)


def test_exponents_symmetric_point():
    ex = phase.strategy_exponents(0.8, 0.8, 1.0)
    assert (ex.mu_S, ex.mu_B, ex.mu_D) == pytest.approx((2.5, 1.875, 5 / 3), abs=1e-12)
    assert (ex.nu_S, ex.nu_B, ex.nu_D) == pytest.approx((2.5, 1.875, 5 / 3), abs=1e-12)
    assert ex.mu_star == pytest.approx(5 / 3) and ex.nu_star == pytest.approx(5 / 3)
    assert ex.mu_label == ex.nu_label == "D"


def test_exponents_asymmetric_point():
    ex = phase.strategy_exponents(0.9, 0.3, 0.5)
    assert (ex.mu_S, ex.mu_B, ex.mu_D) == pytest.approx((5 / 3, 5.0, 3.25), abs=1e-12)
    assert (ex.nu_S, ex.nu_B, ex.nu_D) == pytest.approx((5.0, 2.0 / 0.9, 2.75), abs=1e-12)
    assert ex.mu_label == "S" and ex.nu_label == "B"


@given(st.floats(0.51, 0.99))
def test_exponents_equal_on_diagonal(g):
    ex = phase.strategy_exponents(g, g, 1.0)
    for lab in phase.LABELS:
        assert ex.mu(lab) == pytest.approx(ex.nu(lab), rel=1e-12)


@pytest.mark.parametrize(
    "point,labels,region",
    [
        ((0.8, 0.8, 1.0), ("D", "D"), "IV"),
        ((0.9, 0.3, 0.5), ("S", "B"), "I"),
        ((0.4, 0.9, 2.0), ("B", "S"), "II"),
    ],
)
def test_target_minimizers(point, labels, region):
    tm = phase.target_minimizers(*point)
    assert (tm.mu_label, tm.nu_label) == labels
    assert tm.target_region == region


def test_region_iv_thresholds():
    assert phase.a1_star(0.8, 0.8) == pytest.approx(0.04 / 0.44)
    assert phase.a2_star(0.8, 0.8) == pytest.approx(11.0)
    assert phase.threshold_bridge_mu(0.9, 0.3) == math.inf
    assert phase.threshold_bridge_nu(0.4, 0.9) == 0.0


@pytest.mark.parametrize(
    "point,value,cands",
    [
        ((0.8, 0.8, 1.0), 4 / 3, (5 / 3, 4 / 3, 4 / 3)),
        ((0.9, 0.3, 0.5), 5 / 3, (5 / 3, 1 + 0.7 * 2 / 0.9, 5 / 3)),
        ((0.4, 0.9, 2.0), 4 / 3, (10 / 3, 4 / 3, 7 / 3)),
    ],
)
def test_a_star(point, value, cands):
    assert phase.a_star(*point) == pytest.approx(value, abs=1e-12)
    assert phase.a_star_candidates(*point) == pytest.approx(cands, abs=1e-12)


@pytest.mark.parametrize(
    "point,region,value,strategy",
    [
        ((0.9, 0.3, 0.5), "Ia", 5 / 3, "root-is-S"),
        ((0.4, 0.9, 2.0), "II", 4 / 3, "one-step-to-S"),
        ((0.8, 0.8, 1.0), "IV", 4 / 3, "one-step-to-D"),
        ((0.6, 0.45, 1.0), "Ib", 10 / 3, "root-is-S"),
    ],
)
def test_classify_examples(point, region, value, strategy):
    c = phase.classify(*point)
    assert c.region == region
    assert c.a_star_value == pytest.approx(value, abs=1e-12)
    assert c.dominant_strategy == strategy
    assert c.a_star_value == pytest.approx(phase.a_star(*point), abs=1e-12)


def test_classify_ib_threshold_reported():
    c = phase.classify(0.6, 0.45, 1.0)
    assert c.thresholds["(gamma1-gamma2)/(gamma2-gamma1+gamma1*gamma2)"] == pytest.approx(1.25)


def test_subcritical_rejected_everywhere():
    for fn in (phase.strategy_exponents, phase.a_star, phase.classify, phase.target_minimizers):
        with pytest.raises(SubcriticalPair):
            fn(0.4, 0.4, 1.0)


@settings(max_examples=300)
@given(supercritical())
def test_classify_matches_direct_minimum(p):
    assert phase.classify(*p).a_star_value == pytest.approx(phase.a_star(*p), abs=1e-12, rel=1e-12)


@settings(max_examples=300)
@given(supercritical())
def test_target_labels_match_argmin(p):
    ex = phase.strategy_exponents(*p)
    tm = phase.target_minimizers(*p)
    assert tm.mu_star == pytest.approx(ex.mu_star, rel=1e-12)
    assert tm.nu_star == pytest.approx(ex.nu_star, rel=1e-12)
    if len(ex.mu_ties) == 1 and len(ex.nu_ties) == 1 and not tm.tie:
        assert (tm.mu_label, tm.nu_label) == (ex.mu_label, ex.nu_label)


def test_transmission_map_examples():
    tm = phase.transmission_maps(0.8, 0.8, 1.0)
    assert tm.phi(5 / 3) == pytest.approx(5 / 3, abs=1e-12)
    assert tm.phi_inv(2.5) == pytest.approx(1.875, abs=1e-12)


@given(supercritical(), st.floats(-50, 50))
def test_transmission_inverses(p, x):
    tm = phase.transmission_maps(*p)
    assert tm.phi_inv(tm.phi(x)) == pytest.approx(x, abs=1e-9)
    assert tm.psi_inv(tm.psi(x)) == pytest.approx(x, abs=1e-9)


@settings(max_examples=300)
@given(supercritical())
def test_lemma_inequalities(p):
    ex = phase.strategy_exponents(*p)
    assert phase.big_phi(p[0], p[1], ex.mu_star, ex.nu_star) >= -1e-12
    assert phase.big_psi(*p, ex.mu_star, ex.nu_star) >= -1e-12
    c = phase.a_star_candidates(*p)
    assert c[2] >= min(c[0], c[1]) - 1e-12


def test_symmetry_swap():
    for p in [(0.8, 0.8, 1.0), (0.9, 0.3, 0.5), (0.4, 0.9, 2.0), (0.7, 0.6, 3.3)]:
        ex = phase.strategy_exponents(*p)
        sw = phase.strategy_exponents(p[1], p[0], 1 / p[2])
        for lab in phase.LABELS:
            assert ex.nu(lab) == pytest.approx(p[2] * sw.mu(lab), abs=1e-12)


def test_continuity_across_a_thresholds():
    g1, g2 = 0.8, 0.8
    branches = phase.region_branches(g1, g2, "IV")
    for (cut, _, left), (_, _, right) in zip(branches, branches[1:]):
        ex = phase.strategy_exponents(g1, g2, cut)
        assert left(ex) == pytest.approx(right(ex), abs=1e-9)


def _explicit(g1, g2, a, region):
    ex = phase.strategy_exponents(g1, g2, a)
    branch = next(b for b in phase.region_branches(g1, g2, region) if a <= b[0])
    return branch[2](ex)


@pytest.mark.parametrize("a", [0.3, 1.0, 4.0])
def test_continuity_across_gamma_boundaries(a):
    cases = []
    for g1 in (0.7, 0.8, 0.9):
        cases.append(((g1, g1 / (1 + g1)), ("Ia", "Ib")))
    for g1 in (0.55, 0.7, 0.9):
        cases.append(((g1, 0.5), ("Ib", "III" if 1 / g1 + 2 > 3 else "IV")))
    for g2 in (0.6, 0.8):
        cases.append(((0.5, g2), ("II", "III")))
    for g1 in (0.6, 0.7):
        cases.append(((g1, phase.kappa(g1)), ("III", "IV")))
    for (g1, g2), (r1, r2) in cases:
        assert _explicit(g1, g2, a, r1) == pytest.approx(_explicit(g1, g2, a, r2), abs=1e-9)
        assert phase.classify(g1, g2, a).tie


def test_scale_compare_examples():
    assert phase.scale_compare(S.lam(2), S.lam(4 / 3)) == -1
    assert phase.scale_compare(S(1, -16), S(1, 0)) == -1
    s = S(1.3, 2.0)
    assert phase.scale_compare(s, s) == 0
    assert S.lam(2) < S.lam(4 / 3)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=3, max_size=3))
def test_scale_algebra(triple):
    x, y, z = (S(p, q) for p, q in triple)
    assert x * y == y * x
    assert (x * y) * z == x * (y * z)
    assert (x <= y) or (y <= x)
    if x <= y and y <= z:
        assert x <= z


def test_scale_inequality_examples():
    rep = {r.name: r for r in phase.verify_scale_inequalities(0.8, 0.8, 1.0, 22.0)}
    assert all(r.passed for r in rep.values())
    assert rep["stars-type1"].slack == pytest.approx(2 - 4 / 3)
    assert rep["Phi>=0"].slack == pytest.approx(0.0, abs=1e-12)
    rep = {r.name: r for r in phase.verify_scale_inequalities(0.9, 0.3, 0.5)}
    assert rep["Psi>=0"].slack == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(BadB):
        phase.verify_scale_inequalities(0.8, 0.8, 1.0, 21.25)


def test_grid_three_by_three():
    rows = phase.phase_grid((0.6, 0.9), (0.6, 0.9), (1.0, 1.0), (3, 3, 1))
    assert len(rows) == 9
    for r in rows:
        assert r.a_star == pytest.approx(phase.classify(r.gamma1, r.gamma2, r.a).a_star_value)


def test_grid_tie_at_a1_star():
    a1 = phase.a1_star(0.8, 0.8)
    row = phase.grid_point_row(0.8, 0.8, a1)
    assert row.tie
    assert not phase.grid_point_row(0.8, 0.8, 1.0).tie


def test_grid_subcritical_rows_and_csv():
    rows = phase.phase_grid((0.3, 0.9), (0.3, 0.9), (1.0, 1.0), (2, 2, 1))
    assert rows[0].region == "subcritical"
    text = phase.grid_to_csv(rows)
    assert text.splitlines()[0] == phase.CSV_HEADER
    back = phase.parse_grid_csv(text)
    assert len(back) == 4
    for r, d in zip(rows, back):
        assert float(d["gamma1"]) == r.gamma1
        if r.region != "subcritical":
            assert float(d["a_star"]) == r.a_star


def test_empty_grid():
    with pytest.raises(EmptyGrid):
        phase.phase_grid((0.6, 0.9), (0.6, 0.9), (1.0, 1.0), (0, 3, 1))


def test_grid_ordering_row_major():
    rows = phase.phase_grid((0.6, 0.9), (0.6, 0.9), (0.5, 2.0), (2, 2, 2))
    keys = [(r.gamma1, r.gamma2, r.a) for r in rows]
    assert keys == sorted(keys)
    assert np.all(np.isfinite([r.a_star for r in rows]))
