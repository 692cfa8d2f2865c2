"""Experiment orchestration: sweeps, slope fits, phase diagrams, self-checks."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np
from scipy import stats
from scipy.stats import qmc

from . import combinatorics as comb
from . import contact, hypergraph, phase
from .errors import EmptyGrid, InvalidInput, TooFewPoints, UnsupportedFormat, ZeroTheta
from .hypergraph import RootSpec, StaticGraph, Window
from .phase import ModelParams

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    gamma1: float
    gamma2: float
    a: float = 1.0
    lambdas: tuple[float, ...] = (0.3, 0.25, 0.2, 0.15)
    L: float = 5000.0
    trials: int = 1000
    sim: contact.SimConfig = field(default_factory=contact.SimConfig)
    master_seed: int = 0
    out: str | None = None
    workers: int | None = None

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lams)
        if not lams:
            raise InvalidInput("lambda list is empty")
        if not all(0.0 < x < 1.0 for x in lams):
            raise InvalidInput(f"every lambda must lie in (0,1): {lams}")
        d = np.diff(lams)
        if len(lams) > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise InvalidInput(f"lambda list must be strictly monotone: {lams}")
        if self.trials < 1:
            raise InvalidInput("trials must be at least 1")
        phase.check_pair(self.gamma1, self.gamma2)
        phase.check_a(self.a)

    def params(self, lam: float) -> ModelParams:
        return ModelParams(self.gamma1, self.gamma2, self.a, lam)


def parse_config_file(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys use dashes or underscores."""
    out: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"line {n}: expected key = value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_KEYS = ("lambda", "theta_hat", "ci_lo", "ci_hi", "trials", "proxy")
DIAGNOSTIC_KEYS = (
    "theta_alive", "theta_target", "theta_either",
    "event_cap_hits", "escaped", "boundary_hits", "events",
)


@dataclass(frozen=True)
class SweepRow:
    lam: float
    theta_hat: float
    ci_lo: float
    ci_hi: float
    trials: int
    proxy: str
    diagnostics: dict

    def as_json(self) -> dict:
        return {
            "lambda": self.lam,
            "theta_hat": self.theta_hat,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "trials": self.trials,
            "proxy": self.proxy,
        }

    def diagnostics_json(self) -> dict:
        return {"lambda": self.lam, **{k: self.diagnostics.get(k) for k in DIAGNOSTIC_KEYS}}


def sim_config_for(config: ExperimentConfig, lam: float) -> contact.SimConfig:
    """The sweep's SimConfig at ``lam``; target proxies get the lambda-dependent thresholds."""
    sim = config.sim
    if sim.survival_proxy != "alive-at-horizon" and sim.target_thresholds is None:
        s = phase.validate_and_derive(config.params(lam))
        sim = replace(sim, target_thresholds=(s.u_blue, s.v_blue))
    return sim


def sweep_theta(config: ExperimentConfig, on_row: Callable[[SweepRow], None] | None = None) -> list[SweepRow]:
    """One row per lambda, in the configured order.

    Rows are appended to ``config.out`` as JSON lines as soon as they are
    complete, so an interrupted sweep keeps what it has finished.
    """
    rows: list[SweepRow] = []
    fh = open(config.out, "w") if config.out else None
    try:
        for lam in config.lambdas:
            est = contact.estimate_theta(
                config.params(lam), Window(config.L), RootSpec.uniform(1), config.trials,
                sim_config_for(config, lam), config.master_seed, config.workers,
            )
            row = SweepRow(lam, est.theta_hat, est.ci_lo, est.ci_hi, est.trials, est.proxy, est.diagnostics)
            rows.append(row)
            if fh:
                fh.write(json.dumps(row.as_json()) + "\n")
                fh.flush()
            if on_row:
                on_row(row)
    finally:
        if fh:
            fh.close()
    return rows


def monotone_within_ci(rows: Sequence[SweepRow]) -> bool:
    """theta-hat never drops as lambda grows, beyond what the CIs allow."""
    srt = sorted(rows, key=lambda r: r.lam)
    return all(hi.ci_hi >= lo.ci_lo for lo, hi in zip(srt, srt[1:]))


def percolation_row(params: ModelParams, L: float, seeds: int, master_seed: int = 0) -> dict:
    """Largest-component fraction of the rootless graph on [-L, L] over ``seeds`` samples."""
    fr = []
    for i in range(seeds):
        g = hypergraph.sample(params, Window(L), int(master_seed) * 1_000_003 + i, RootSpec.none())
        fr.append(hypergraph.largest_component_fraction(g))
    x = np.array(fr)
    se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return {"gamma1": params.gamma1, "gamma2": params.gamma2, "L": float(L), "seeds": seeds,
            "mean_fraction": float(x.mean()), "se": se, "fractions": x.tolist()}


# ---------------------------------------------------------------------------
# Slope fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    lam_range: tuple[float, float]
    n_points: int
    target: float | None
    within_band: bool | None
    excluded_zero: int = 0


def _row_fields(r) -> tuple[float, float, float | None, float | None]:
    if isinstance(r, SweepRow):
        return r.lam, r.theta_hat, r.ci_lo, r.ci_hi
    if isinstance(r, dict):
        return float(r["lambda"]), float(r["theta_hat"]), r.get("ci_lo"), r.get("ci_hi")
    lam, th, *rest = r
    return float(lam), float(th), (rest[0] if rest else None), (rest[1] if len(rest) > 1 else None)


def fit_slope(
    rows: Iterable,
    lam_range: tuple[float, float] | None = None,
    target: float | None = None,
    tol: float = 0.5,
    band: tuple[float, float] | None = None,
) -> SlopeFit:
    """Weighted least squares of log theta-hat on log lambda.

    Rows may be SweepRows, dicts with lambda/theta_hat/ci_lo/ci_hi, or
    (lambda, theta[, ci_lo, ci_hi]) tuples.  Weights are inverse squared
    relative CI widths (unit weights when no CI is given).  The band flag is
    ``band[0] <= slope <= band[1]`` when a band is given and
    ``|slope - target| <= tol`` otherwise.
    """
    pts = []
    zeros = 0
    for r in rows:
        lam, th, lo, hi = _row_fields(r)
        if lam_range is not None and not (lam_range[0] <= lam <= lam_range[1]):
            continue
        if th <= 0:
            zeros += 1
            continue
        w = 1.0
        if lo is not None and hi is not None and hi > lo:
            w = (th / (float(hi) - float(lo))) ** 2
        pts.append((math.log(lam), math.log(th), w))
    if len(pts) < 2:
        if zeros and len(pts) + zeros >= 2:
            raise ZeroTheta(f"{zeros} rows with theta-hat = 0 leave {len(pts)} usable points")
        raise TooFewPoints(f"need at least 2 points with theta-hat > 0, have {len(pts)}")
    x, y, w = (np.array(c) for c in zip(*pts))
    xm = float(np.sum(w * x) / np.sum(w))
    ym = float(np.sum(w * y) / np.sum(w))
    sxx = float(np.sum(w * (x - xm) ** 2))
    if sxx <= 0:
        raise TooFewPoints("all points share one lambda")
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    n = len(x)
    stderr = math.sqrt(float(np.sum(w * resid**2)) / (n - 2) / sxx) if n > 2 else 0.0
    lams = np.exp(x)
    if band is not None:
        within = band[0] <= slope <= band[1]
    elif target is not None:
        within = abs(slope - target) <= tol
    else:
        within = None
    return SlopeFit(slope, intercept, stderr, (float(lams.min()), float(lams.max())), n, target, within, zeros)


# ---------------------------------------------------------------------------
# Phase diagrams
# ---------------------------------------------------------------------------

STRATEGY_COLOURS = {
    "root-is-S": "#4c72b0",
    "one-step-to-S": "#dd8452",
    "one-step-to-B": "#55a868",
    "one-step-to-D": "#c44e52",
}


@dataclass(frozen=True)
class GridSpec:
    """Product grid over (gamma1, gamma2, a).

    With ``diagonal`` set, gamma1 = gamma2 runs over ``gamma1_range`` and
    the slice is (gamma, a).
    """

    gamma1_range: tuple[float, float] = (0.01, 0.99)
    gamma2_range: tuple[float, float] = (0.01, 0.99)
    a_range: tuple[float, float] = (1.0, 1.0)
    resolution: tuple[int, int, int] = (100, 100, 1)
    diagonal: bool = False
    centers: bool = False

    def axes(self):
        n1, n2, na = self.resolution
        return (
            phase._axis(self.gamma1_range, n1, self.centers),
            phase._axis(self.gamma2_range, n2, self.centers),
            phase._axis(self.a_range, na, self.centers),
        )

    def rows(self) -> list[phase.GridRow]:
        if not self.diagonal:
            return phase.phase_grid(self.gamma1_range, self.gamma2_range, self.a_range, self.resolution, self.centers)
        gs, _, as_ = self.axes()
        return [phase.grid_point_row(float(g), float(g), float(a)) for g in gs for a in as_]


def _loci_g1g2(a: float):
    """Region boundaries and a-threshold loci in the (gamma1, gamma2) plane.

    Each entry is (name, gamma2 as a function of gamma1, regions where the
    locus is a real boundary).
    """
    reg = {"Ia", "Ib", "II", "III", "IV"}
    return [
        ("critical line", lambda g: 1.0 - g, reg),
        ("gamma2 = gamma1/(1+gamma1)", lambda g: g / (1.0 + g) if g > 0.5 else math.nan, {"Ia", "Ib"}),
        ("gamma2 = 1/2", lambda g: 0.5 if g > 0.5 else math.nan, {"Ib", "III", "IV"}),
        ("kappa", lambda g: phase.kappa(g) if g > 0.5 else math.nan, {"III", "IV"}),
        ("Ib threshold", lambda g: g * (1 + a) / (1 + a + a * g), {"Ib"}),
        ("a1*", lambda g: (1 - g + a) / ((1 - g) + a * (1 + g)), {"IV"}),
        ("a2*", lambda g: (1 - g) * (1 + a) / (g + a * (1 - g)), {"IV"}),
    ]


def _polylines_g1g2(a: float, g1s: np.ndarray, g2_lo: float, g2_hi: float) -> list[tuple[str, list[tuple[float, float]]]]:
    out = []
    # Delta1/bar gamma1 = a and bar gamma2/Delta2 = a are straight lines
    gv = (1.0 + a) / (2.0 + a)
    gh = (1.0 + a) / (1.0 + 2.0 * a)
    col = np.linspace(g2_lo, g2_hi, len(g1s))
    out += _runs("Delta1/bar gamma1", [(gv, y) for y in col], lambda x, y: phase.theorem_region(x, y) == "III" and x + y > 1)
    out += _runs("bar gamma2/Delta2", [(x, gh) for x in g1s], lambda x, y: x + y > 1 and phase.target_region_of(x, y) in ("II", "III"))
    out += _runs("gamma1 = 1/2", [(0.5, y) for y in col], lambda x, y: x + y > 1)
    for name, f, regions in _loci_g1g2(a):
        pts = [(float(x), f(float(x))) for x in g1s]
        out += _runs(name, pts, lambda x, y, regions=regions: _in_regions(x, y, regions))
    return out


def _in_regions(x: float, y: float, regions) -> bool:
    if not (0 < x < 1 and 0 < y < 1):
        return False
    if abs(x + y - 1.0) < 1e-12:
        return True
    return x + y > 1 and phase.theorem_region(x, y) in regions


def _runs(name, pts, keep) -> list[tuple[str, list[tuple[float, float]]]]:
    out, cur = [], []
    for x, y in pts:
        if math.isfinite(y) and keep(x, y):
            cur.append((x, y))
        elif cur:
            out.append((name, cur))
            cur = []
    if cur:
        out.append((name, cur))
    return [(n, c) for n, c in out if len(c) >= 2]


def _polylines_diagonal(gs: np.ndarray, a_lo: float, a_hi: float) -> list[tuple[str, list[tuple[float, float]]]]:
    out = []
    acol = np.linspace(a_lo, a_hi, len(gs))
    for g0, name in ((0.5, "critical line"), (2.0 / 3.0, "kappa")):
        out.append((name, [(g0, float(y)) for y in acol]))
    for name, f, reg in (
        ("Delta1/bar gamma1", phase.threshold_bridge_nu, "III"),
        ("a1*", phase.a1_star, "IV"),
        ("a2*", phase.a2_star, "IV"),
    ):
        pts = [(float(g), f(float(g), float(g))) for g in gs]
        out += _runs(name, pts, lambda x, y, reg=reg: x > 0.5 and phase.theorem_region(x, x) == reg and a_lo <= y <= a_hi)
    return out


def render_svg(spec: GridSpec, rows: list[phase.GridRow] | None = None, size: int = 600) -> str:
    spec = replace(spec, centers=True)
    rows = spec.rows() if rows is None else rows
    g1s, g2s, as_ = spec.axes()
    if spec.diagonal:
        xs, ys = g1s, as_
        xr, yr = spec.gamma1_range, spec.a_range
        xlabel, ylabel = "gamma", "a"
        coords = [(r.gamma1, r.a) for r in rows]
    else:
        if len(as_) != 1:
            raise UnsupportedFormat("svg renders two-dimensional slices; fix a or use the diagonal slice")
        xs, ys = g1s, g2s
        xr, yr = spec.gamma1_range, spec.gamma2_range
        xlabel, ylabel = "gamma1", "gamma2"
        coords = [(r.gamma1, r.gamma2) for r in rows]
    if yr[1] <= yr[0] or xr[1] <= xr[0]:
        raise EmptyGrid("svg needs a non-degenerate range on both axes")
    m = 50
    W = H = size

    def px(x: float) -> float:
        return m + (x - xr[0]) / (xr[1] - xr[0]) * W

    def py(y: float) -> float:
        return m + H - (y - yr[0]) / (yr[1] - yr[0]) * H

    cw = W / len(xs)
    ch = H / len(ys)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W + 2 * m + 200}" height="{H + 2 * m}" '
        f'viewBox="0 0 {W + 2 * m + 200} {H + 2 * m}">',
        '<g id="cells" shape-rendering="crispEdges">',
    ]
    for r, (x, y) in zip(rows, coords):
        if r.region == "subcritical":
            continue
        fill = STRATEGY_COLOURS[r.strategy]
        parts.append(
            f'<rect class="cell" x="{px(x) - cw / 2:.3f}" y="{py(y) - ch / 2:.3f}" width="{cw:.3f}" '
            f'height="{ch:.3f}" fill="{fill}" data-strategy="{r.strategy}" data-region="{r.region}"/>'
        )
    parts.append("</g>")
    lines = _polylines_diagonal(xs, *yr) if spec.diagonal else _polylines_g1g2(float(as_[0]), xs, *yr)
    parts.append('<g id="boundaries" fill="none" stroke="#000" stroke-width="1.2">')
    for name, pts in lines:
        p = " ".join(f"{px(x):.3f},{py(y):.3f}" for x, y in pts)
        parts.append(f'<polyline data-locus="{escape(name)}" points="{p}"/>')
    parts.append("</g>")
    parts.append(
        f'<path d="M{m},{m} h{W} v{H} h{-W} z" fill="none" stroke="#000"/>'
        f'<text x="{m + W / 2}" y="{H + m + 35}" text-anchor="middle">{xlabel}</text>'
        f'<text x="15" y="{m + H / 2}" text-anchor="middle" transform="rotate(-90 15 {m + H / 2})">{ylabel}</text>'
    )
    parts.append('<g id="legend" font-size="13">')
    for i, (name, colour) in enumerate(STRATEGY_COLOURS.items()):
        y0 = m + 20 + 24 * i
        parts.append(f'<circle cx="{W + m + 20}" cy="{y0}" r="7" fill="{colour}"/>')
        parts.append(f'<text x="{W + m + 35}" y="{y0 + 5}">{escape(name)}</text>')
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"


def emit_phase_diagram(spec: GridSpec, fmt: str = "csv", out: str | None = None) -> str:
    if fmt == "csv":
        text = phase.grid_to_csv(spec.rows())
    elif fmt == "svg":
        text = render_svg(spec)
    else:
        raise UnsupportedFormat(f"unsupported format {fmt!r}; use csv or svg")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# Self-checks
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        self.passed = bool(self.passed)


def _sobol(n: int, seed: int) -> np.ndarray:
    """n quasi-random points of (gamma1, gamma2, a) with gamma1 + gamma2 > 1 and a in (0, 10]."""
    s = qmc.Sobol(3, scramble=True, seed=seed)
    out = []
    while len(out) < n:
        u = s.random(1024)
        g1, g2, a = u[:, 0], u[:, 1], 10.0 * (1.0 - u[:, 2])
        ok = (g1 + g2 > 1.0) & (g1 < 1) & (g2 < 1) & (g1 > 0) & (g2 > 0)
        out.extend(zip(g1[ok], g2[ok], a[ok]))
    return np.array(out[:n], dtype=float)


def check_exponent_oracle(n: int, seed: int) -> Check:
    worst = 0.0
    label_mismatch = 0
    ties = 0
    for g1, g2, a in _sobol(n, seed):
        c = phase.classify(g1, g2, a)
        worst = max(worst, abs(c.a_star_value - phase.a_star(g1, g2, a)))
        ex = phase.strategy_exponents(g1, g2, a)
        if len(ex.mu_ties) > 1 or len(ex.nu_ties) > 1:
            ties += 1
            continue
        if (c.mu_label, c.nu_label) != (ex.mu_label, ex.nu_label):
            label_mismatch += 1
    return Check("exponent-oracle", worst <= phase.EXACT_TOL and label_mismatch == 0,
                 {"samples": n, "max_abs_diff": worst, "label_mismatches": label_mismatch, "ties_skipped": ties}, seed)


def identity_residuals(g1: float, g2: float, a: float) -> dict[str, float]:
    """Signed residuals of the exponent identities; equalities should be 0,
    inequalities (suffix ``>=0``) nonnegative."""
    ex = phase.strategy_exponents(g1, g2, a)
    tm = phase.transmission_maps(g1, g2, a)
    sw = phase.strategy_exponents(g2, g1, 1.0 / a)
    c = phase.a_star_candidates(g1, g2, a)
    # map residuals are multiplied by the map's denominator: dividing by
    # 1-gamma near 0 would otherwise amplify rounding in the inputs
    bg1, bg2 = 1.0 - g1, 1.0 - g2
    return {
        "phi(mu_D)=nu_D": bg2 * (tm.phi(ex.mu_D) - ex.nu_D),
        "psi(nu_D)=mu_D": bg1 * (tm.psi(ex.nu_D) - ex.mu_D),
        "mu_B=phi^-1(nu_S)": g1 * (tm.phi_inv(ex.nu_S) - ex.mu_B),
        "nu_B=psi^-1(mu_S)": g2 * (tm.psi_inv(ex.mu_S) - ex.nu_B),
        "nu_S=a mu_S(swap)": ex.nu_S - a * sw.mu_S,
        "nu_B=a mu_B(swap)": ex.nu_B - a * sw.mu_B,
        "nu_D=a mu_D(swap)": ex.nu_D - a * sw.mu_D,
        "Phi>=0": phase.big_phi(g1, g2, ex.mu_star, ex.nu_star),
        "Psi>=0": phase.big_psi(g1, g2, a, ex.mu_star, ex.nu_star),
        "third>=min>=0": c[2] - min(c[0], c[1]),
    }


def check_identities(n: int, seed: int, tol: float = phase.EXACT_TOL) -> Check:
    worst_eq = 0.0
    worst_ineq = math.inf
    for g1, g2, a in _sobol(n, seed):
        for k, v in identity_residuals(g1, g2, a).items():
            if ">=" in k:
                worst_ineq = min(worst_ineq, v)
            else:
                scale = max(1.0, abs(phase.strategy_exponents(g1, g2, a).nu_S))
                worst_eq = max(worst_eq, abs(v) / scale)
    return Check("identities", worst_eq <= tol and worst_ineq >= -tol,
                 {"samples": n, "max_equality_residual": worst_eq, "min_inequality_slack": worst_ineq}, seed)


def check_scale_inequalities(n: int, seed: int) -> Check:
    failures: dict[str, int] = {}
    min_slack = math.inf
    for g1, g2, a in _sobol(n, seed):
        for r in phase.verify_scale_inequalities(g1, g2, a):
            if not r.passed:
                failures[r.name] = failures.get(r.name, 0) + 1
            if math.isfinite(r.slack):
                min_slack = min(min_slack, r.slack)
    return Check("scale-inequalities", not failures, {"samples": n, "failures": failures, "min_slack": min_slack}, seed)


def check_enumeration(max_ell: int = 10) -> Check:
    bad = []
    for ell in range(max_ell + 1):
        counts: dict[int, int] = {}
        for p in comb.iter_paths(ell):
            counts[p.k] = counts.get(p.k, 0) + 1
        for k, c in counts.items():
            if c > comb.count_bound(ell, k):
                bad.append([ell, k, c, comb.count_bound(ell, k)])
    small = [len(comb.enumerate_paths(ell)) for ell in (1, 2, 3)]
    ok = not bad and small == [1, 2, 5]
    return Check("enumeration-bound", ok, {"max_length": max_ell, "violations": bad, "counts_1_2_3": small})


def check_reductions(n: int, seed: int) -> Check:
    rng = np.random.default_rng(seed)
    scale_fail = parity_fail = count_fail = 0
    worst_rel = 0.0
    sob = _sobol(n, seed)
    for i in range(n):
        g1, g2, a = sob[i]
        ctx = comb.WeightContext.from_params(ModelParams(float(g1), float(g2), float(a), 0.05),
                                            thresholds=tuple(rng.uniform(0.01, 0.5, 2)))
        t = comb.random_tree(int(rng.integers(2, 21)), rng)
        seg, steps = comb.reduce_to_segment(t, ctx)
        dist = len(t.path_to(t.m_star)) - 1
        parity_fail += seg.k != (2 if dist % 2 else 3)
        count_fail += len(steps) < (t.k - 3) // 2
        for s in steps:
            scale_fail += not s.scale_ok
            worst_rel = max(worst_rel, abs(s.incremental_log_f - s.recomputed_log_f) / max(1.0, abs(s.recomputed_log_f)))
    ok = scale_fail == parity_fail == count_fail == 0 and worst_rel <= 1e-9
    return Check("reductions", ok, {"trees": n, "scale_failures": scale_fail, "parity_failures": parity_fail,
                                    "count_failures": count_fail, "max_rel_logF_diff": worst_rel}, seed)


def check_engine_equivalence(trials: int, seed: int) -> Check:
    pvals = {}
    for n, l1, l2 in ((10, 0.3, 0.3), (100, 0.1, 0.2)):
        rates = contact.Rates(l1, l2)
        g = StaticGraph.star(n)
        cfg = contact.SimConfig(t_max=1e9)
        a = [contact.run_star(n, rates, "centre", cfg, contact.trial_rng(seed, i)).extinction_time for i in range(trials)]
        b = [contact.run(g, rates, [0], cfg, contact.trial_rng(seed + 1, i)).extinction_time for i in range(trials)]
        pvals[f"{n},{l1},{l2}"] = float(stats.ks_2samp(a, b).pvalue)
    return Check("engine-equivalence", min(pvals.values()) > 0.01 / len(pvals), {"trials": trials, "ks_pvalues": pvals}, seed)


MECKE_PARAMS = ModelParams(0.6, 0.5, 1.0, 0.1)
MECKE_THRESHOLDS = (0.3, 0.3)
MECKE_PATHS = ((0, 1), (0, 1, 2), (0, 1, 0))


def mecke_cases(paths=MECKE_PATHS) -> list[tuple[comb.CombinatorialPath, str]]:
    out = []
    for p in paths:
        cp = comb.CombinatorialPath(p)
        for c in comb.COLOURINGS:
            if c == comb.RED_LAST and not cp.last_is_first_visit():
                continue
            out.append((cp, c))
    return out


def mecke_study(n_graphs: int, seed: int, params: ModelParams = MECKE_PARAMS, thresholds=MECKE_THRESHOLDS,
                paths=MECKE_PATHS, budget: float = 0.01) -> dict:
    """Monte Carlo means of realised path counts against the Mecke formula."""
    u1, u2 = thresholds
    cases = mecke_cases(paths)
    L = comb.mecke_window(cases, params.gamma1, params.gamma2, u1, u2, budget)
    thr = hypergraph.Thresholds(u1, u2)
    counts = {i: [] for i in range(len(cases))}
    for g_i in range(n_graphs):
        g = hypergraph.sample(params, Window(L), seed * 1_000_003 + g_i, RootSpec.uniform(1))
        blue = hypergraph.blue_mask(g, thr)
        for i, (cp, c) in enumerate(cases):
            counts[i].append(comb.count_realized_paths(g, cp, c, blue))
    out = {}
    for i, (cp, c) in enumerate(cases):
        xs = np.array(counts[i], dtype=float)
        mean, se = float(xs.mean()), float(xs.std(ddof=1) / math.sqrt(len(xs)))
        exp = comb.mecke_expected_count(cp, c, params.gamma1, params.gamma2, u1, u2)
        trunc = comb.mecke_truncation_bound(cp, c, params.gamma1, params.gamma2, u1, u2, L)
        z = abs(mean - exp) / se if se > 0 else (0.0 if mean == exp else math.inf)
        out[f"{cp.dump()}|{c}"] = {"mean": mean, "se": se, "expected": exp, "z": z, "truncation_bound": trunc}
    return {"graphs": n_graphs, "L": L, "paths": out}


def check_mecke(n_graphs: int, seed: int) -> Check:
    res = mecke_study(n_graphs, seed)
    ok = all(v["z"] <= 3.0 and v["truncation_bound"] < 0.01 for v in res["paths"].values())
    return Check("mecke-oracle", ok, res, seed)


def check_martingale(trials: int, seed: int, max_length: int = 4) -> Check:
    rates = contact.Rates(0.1, 0.1)
    g = StaticGraph.cube()
    worst = -math.inf
    n = 0
    for start in (0, 1):  # types 1 and 2
        for i, tr in enumerate(contact.enumerate_traces(g, start, max_length)):
            est = contact.trace_probability(g, rates, tr, trials, seed=seed * 7919 + 1000 * start + i)
            worst = max(worst, est.p_hat - est.bound - 3 * est.se)
            n += 1
    return Check("martingale-bound", worst <= 0.0, {"traces": n, "trials": trials, "max_excess": worst}, seed)


@dataclass(frozen=True)
class VerifySizes:
    oracle: int = 20_000
    identities: int = 2_000
    scales: int = 2_000
    trees: int = 300
    engine_trials: int = 1_000
    mecke_graphs: int = 200
    trace_trials: int = 10_000

    @classmethod
    def quick(cls) -> "VerifySizes":
        return cls(2_000, 300, 300, 100, 300, 40, 2_000)


def verify_all(master_seed: int = 0, sizes: VerifySizes = VerifySizes()) -> dict:
    """Run every cross-check and return a JSON-ready report."""
    s = master_seed
    checks = [
        check_exponent_oracle(sizes.oracle, s),
        check_identities(sizes.identities, s + 1),
        check_scale_inequalities(sizes.scales, s + 2),
        check_enumeration(),
        check_reductions(sizes.trees, s + 3),
        check_engine_equivalence(sizes.engine_trials, s + 4),
        check_mecke(sizes.mecke_graphs, s + 5),
        check_martingale(sizes.trace_trials, s + 6),
    ]
    return {
        "master_seed": master_seed,
        "sizes": asdict(sizes),
        "passed": all(c.passed for c in checks),
        "checks": [asdict(c) for c in checks],
    }


def write_json(obj, out: str | None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    return text


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def env_workers() -> int | None:
    v = os.environ.get("BIPCP_WORKERS")
    return int(v) if v else None
