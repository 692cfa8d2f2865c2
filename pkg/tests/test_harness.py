import json
import math
import xml.etree.ElementTree as ET
from dataclasses import replace

import numpy as np
import pytest
from scipy import ndimage

from bipcp import combinatorics as comb
from bipcp import harness as hn
from bipcp import phase
from bipcp.contact import SimConfig
from bipcp.errors import EmptyGrid, InvalidInput, TooFewPoints, UnsupportedFormat, ZeroTheta


def test_fit_exact_power_law():
    rows = [(lam, lam**2) for lam in (0.1, 0.15, 0.2, 0.3)]
    fit = hn.fit_slope(rows, target=2.0)
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.within_band and fit.n_points == 4


def test_fit_polylog_power_law():
    lams = np.array([0.1, 0.15, 0.2, 0.3])
    th = lams ** (4 / 3) * np.log(1 / lams) ** 2
    fit = hn.fit_slope(list(zip(lams, th)))
    ref = np.polyfit(np.log(lams), np.log(th), 1)[0]
    assert fit.slope == pytest.approx(ref, abs=1e-12)
    assert fit.slope == pytest.approx(0.15530669334408, abs=1e-10)


def test_fit_weights_by_relative_ci():
    rows = [
        {"lambda": 0.1, "theta_hat": 0.01, "ci_lo": 0.009, "ci_hi": 0.011},
        {"lambda": 0.2, "theta_hat": 0.04, "ci_lo": 0.02, "ci_hi": 0.06},
        {"lambda": 0.3, "theta_hat": 0.09, "ci_lo": 0.089, "ci_hi": 0.091},
    ]
    fit = hn.fit_slope(rows)
    assert fit.slope == pytest.approx(2.0, abs=1e-12)


def test_fit_errors():
    with pytest.raises(TooFewPoints):
        hn.fit_slope([(0.1, 0.01)])
    with pytest.raises(ZeroTheta):
        hn.fit_slope([(0.1, 0.0), (0.2, 0.04)])
    fit = hn.fit_slope([(0.1, 0.0), (0.2, 0.04), (0.3, 0.09)])
    assert fit.excluded_zero == 1


def test_experiment_config_validation():
    with pytest.raises(InvalidInput):
        hn.ExperimentConfig(0.8, 0.8, lambdas=(0.2, 0.1, 0.3))
    with pytest.raises(InvalidInput):
        hn.ExperimentConfig(0.8, 0.8, lambdas=(0.2, 1.5))
    with pytest.raises(InvalidInput):
        hn.ExperimentConfig(0.8, 0.8, trials=0)


def test_config_file_parsing():
    d = hn.parse_config_file("gamma1 = 0.8  # comment\n\nt-max=10\n")
    assert d == {"gamma1": "0.8", "t_max": "10"}
    with pytest.raises(InvalidInput):
        hn.parse_config_file("oops")
    assert hn.parse_float_list("0.1, 0.2 0.3") == (0.1, 0.2, 0.3)


def small_sweep(workers, out=None):
    cfg = hn.ExperimentConfig(
        0.8, 0.8, 1.0, (0.35, 0.3, 0.25, 0.2), L=100.0, trials=60,
        sim=SimConfig(t_max=20.0, escape_size=40), master_seed=3, workers=workers, out=out,
    )
    return hn.sweep_theta(cfg)


def test_sweep_rows_and_determinism(tmp_path):
    out = tmp_path / "sweep.jsonl"
    a = small_sweep(1, str(out))
    b = small_sweep(2)
    assert len(a) == 4
    assert [r.theta_hat for r in a] == [r.theta_hat for r in b]
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert len(lines) == 4
    assert tuple(lines[0]) == hn.SWEEP_KEYS
    assert hn.monotone_within_ci(a)


def test_phase_csv_two_by_two():
    spec = hn.GridSpec((0.6, 0.9), (0.6, 0.9), (1.0, 1.0), (2, 2, 1))
    text = hn.emit_phase_diagram(spec, "csv")
    lines = text.strip().splitlines()
    assert lines[0] == phase.CSV_HEADER and len(lines) == 5


def test_phase_svg_parses_with_one_rect_per_cell():
    spec = hn.GridSpec((0.05, 0.95), (0.05, 0.95), (1.0, 1.0), (10, 10, 1))
    svg = hn.emit_phase_diagram(spec, "svg")
    root = ET.fromstring(svg.split("\n", 1)[1])
    ns = "{http://www.w3.org/2000/svg}"
    rects = root.findall(f".//{ns}rect")
    n_super = sum(r.region != "subcritical" for r in replace(spec, centers=True).rows())
    assert len(rects) == n_super > 0
    assert root.findall(f".//{ns}polyline")


def test_phase_diagram_errors():
    spec = hn.GridSpec((0.6, 0.9), (0.6, 0.9), (0.5, 2.0), (3, 3, 3))
    with pytest.raises(UnsupportedFormat):
        hn.emit_phase_diagram(spec, "svg")
    with pytest.raises(UnsupportedFormat):
        hn.emit_phase_diagram(spec, "png")
    with pytest.raises(EmptyGrid):
        hn.emit_phase_diagram(hn.GridSpec(resolution=(0, 3, 1)), "csv")


def test_diagonal_slice_svg():
    spec = hn.GridSpec((0.51, 0.99), a_range=(0.05, 5.0), resolution=(12, 1, 12), diagonal=True)
    ET.fromstring(hn.emit_phase_diagram(spec, "svg").split("\n", 1)[1])


def test_four_contiguous_regions_at_a_one():
    n = 200
    spec = hn.GridSpec((0.0025, 0.9975), (0.0025, 0.9975), (1.0, 1.0), (n, n, 1))
    rows = spec.rows()
    strategies = sorted({r.strategy for r in rows if r.region != "subcritical"})
    assert len(strategies) == 4
    grid = np.array([r.strategy for r in rows]).reshape(n, n)
    for s in strategies:
        _, count = ndimage.label(grid == s)
        assert count == 1, s


def test_verify_all_quick_and_deterministic():
    a = hn.verify_all(0, hn.VerifySizes.quick())
    b = hn.verify_all(0, hn.VerifySizes.quick())
    assert a["passed"], [c["name"] for c in a["checks"] if not c["passed"]]
    assert hn.write_json(a, None) == hn.write_json(b, None)


def test_mutation_breaks_enumeration_check(monkeypatch):
    assert hn.check_enumeration().passed
    monkeypatch.setattr(comb, "count_bound", lambda ell, k: math.comb(ell + 1, k))
    assert not hn.check_enumeration().passed


def test_percolation_row_shape():
    r = hn.percolation_row(phase.ModelParams(0.4, 0.4, 1.0, 0.1, allow_subcritical=True), 100.0, 3)
    assert r["seeds"] == 3 and 0 < r["mean_fraction"] <= 1
