"""Model parameters, strategy exponents and the explicit phase classification.

Everything here is closed-form algebra in (gamma1, gamma2, a) plus a tiny
formal algebra for quantities of the shape ``lambda**p * log(1/lambda)**q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Callable, Iterator, NamedTuple

import numpy as np

from .errors import (
    BadB,
    EmptyGrid,
    GammaOutOfRange,
    LambdaOutOfRange,
    NonpositiveA,
    SubcriticalPair,
)

EXACT_TOL = 1e-12
TIE_TOL = 1e-9
LABELS = ("S", "B", "D")  # also the tie-break priority

STRATEGIES = ("root-is-S", "one-step-to-S", "one-step-to-B", "one-step-to-D")
REGIONS = ("Ia", "Ib", "II", "III", "IV")
TARGET_REGIONS = ("I", "II", "III", "IV")


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


def check_pair(gamma1: float, gamma2: float, allow_subcritical: bool = False) -> None:
    for g in (gamma1, gamma2):
        if not (0.0 < g < 1.0) or math.isnan(g):
            raise GammaOutOfRange(f"gamma must lie in (0,1), got {g!r}")
    if not allow_subcritical and gamma1 + gamma2 <= 1.0:
        raise SubcriticalPair(
            f"gamma1 + gamma2 = {gamma1 + gamma2!r} <= 1 (set allow_subcritical to permit)"
        )


def check_a(a: float) -> None:
    if not (a > 0.0) or math.isinf(a):
        raise NonpositiveA(f"a must be a positive finite real, got {a!r}")


@dataclass(frozen=True)
class ModelParams:
    gamma1: float
    gamma2: float
    a: float = 1.0
    lam: float = 0.1
    allow_subcritical: bool = False

    def __post_init__(self):
        check_pair(self.gamma1, self.gamma2, self.allow_subcritical)
        check_a(self.a)
        if not (0.0 < self.lam < 1.0):
            raise LambdaOutOfRange(f"lambda must lie in (0,1), got {self.lam!r}")

    @property
    def lambda1(self) -> float:
        return self.lam

    @property
    def lambda2(self) -> float:
        return self.lam**self.a

    def swapped(self) -> "ModelParams":
        """Relabelled parameters (gamma1 <-> gamma2, a -> 1/a, lambda -> lambda**a)."""
        return ModelParams(
            self.gamma2, self.gamma1, 1.0 / self.a, self.lam**self.a, self.allow_subcritical
        )


@dataclass(frozen=True)
class DerivedScales:
    bar_gamma1: float
    bar_gamma2: float
    Delta1: float
    Delta2: float
    Delta: float
    delta: float
    b: float
    lambda1: float
    lambda2: float
    mu_star: float
    nu_star: float
    u_blue: float
    v_blue: float
    u0: float
    v0: float
    u_blue_clamped: bool
    v_blue_clamped: bool
    u0_clamped: bool
    v0_clamped: bool

    @property
    def any_clamped(self) -> bool:
        return self.u_blue_clamped or self.v_blue_clamped or self.u0_clamped or self.v0_clamped


def bars(gamma1: float, gamma2: float) -> tuple[float, float, float, float, float, float]:
    """(bar gamma1, bar gamma2, Delta1, Delta2, Delta, delta)."""
    d1 = max(2.0 * gamma1 - 1.0, 0.0)
    d2 = max(2.0 * gamma2 - 1.0, 0.0)
    return (
        1.0 - gamma1,
        1.0 - gamma2,
        d1,
        d2,
        gamma1 + gamma2 - 1.0,
        min(gamma1, gamma2, d1 + d2),
    )


def _clamp(x: float) -> tuple[float, bool]:
    return (1.0, True) if x > 1.0 else (x, False)


def _clamp_log(log_x: float) -> tuple[float, bool]:
    return (1.0, True) if log_x > 0.0 else (math.exp(log_x), False)


def validate_and_derive(params: ModelParams, b_override: float | None = None) -> DerivedScales:
    """Validate ``params`` and compute every derived constant."""
    g1, g2, a, lam = params.gamma1, params.gamma2, params.a, params.lam
    check_pair(g1, g2, params.allow_subcritical)
    check_a(a)
    if not (0.0 < lam < 1.0):
        raise LambdaOutOfRange(f"lambda must lie in (0,1), got {lam!r}")
    bg1, bg2, d1, d2, D, delta = bars(g1, g2)
    b_min = 17.0 / delta if delta > 0 else math.inf
    if b_override is None:
        b = b_min + 1.0
    else:
        b = float(b_override)
        if not (b > b_min):
            raise BadB(f"b must exceed 17/delta = {b_min!r}, got {b!r}")
    if D > 0:
        ex = strategy_exponents(g1, g2, a)
        mu_star, nu_star = ex.mu_star, ex.nu_star
    else:
        mu_star = nu_star = math.nan
    ell = math.log(1.0 / lam)
    ll, lell = math.log(lam), math.log(ell)
    u_blue, cu = _clamp_log(mu_star * ll + b * lell) if D > 0 else (math.nan, False)
    v_blue, cv = _clamp_log(nu_star * ll + b * lell) if D > 0 else (math.nan, False)
    u0, c0 = _clamp_log(((1.0 + a) * ll - 2.0 * lell) / g1)
    v0, c1 = _clamp_log(((1.0 + a) * ll - 2.0 * lell) / g2)
    return DerivedScales(
        bar_gamma1=bg1,
        bar_gamma2=bg2,
        Delta1=d1,
        Delta2=d2,
        Delta=D,
        delta=delta,
        b=b,
        lambda1=lam,
        lambda2=lam**a,
        mu_star=mu_star,
        nu_star=nu_star,
        u_blue=u_blue,
        v_blue=v_blue,
        u0=u0,
        v0=v0,
        u_blue_clamped=cu,
        v_blue_clamped=cv,
        u0_clamped=c0,
        v0_clamped=c1,
    )


# ---------------------------------------------------------------------------
# Strategy exponents
# ---------------------------------------------------------------------------


def _argmin_labels(values: dict[str, float]) -> tuple[float, str, frozenset[str]]:
    m = min(values.values())
    ties = frozenset(k for k, v in values.items() if v - m <= TIE_TOL)
    label = next(k for k in LABELS if k in ties)
    return m, label, ties


@dataclass(frozen=True)
class StrategyExponents:
    mu_S: float
    mu_B: float
    mu_D: float
    nu_S: float
    nu_B: float
    nu_D: float
    mu_star: float
    nu_star: float
    mu_label: str
    nu_label: str
    mu_ties: frozenset = field(default_factory=frozenset)
    nu_ties: frozenset = field(default_factory=frozenset)

    def mu(self, label: str) -> float:
        return getattr(self, "mu_" + label)

    def nu(self, label: str) -> float:
        return getattr(self, "nu_" + label)


def strategy_exponents(gamma1: float, gamma2: float, a: float) -> StrategyExponents:
    check_pair(gamma1, gamma2)
    check_a(a)
    g1, g2 = gamma1, gamma2
    bg1, bg2 = 1.0 - g1, 1.0 - g2
    D = g1 + g2 - 1.0
    mu = {
        "S": (1.0 + a) / g1,
        "B": (1.0 + bg2 * a) / (g1 * g2),
        "D": (g2 + bg2 * a) / D,
    }
    nu = {
        "S": (1.0 + a) / g2,
        "B": (bg1 + a) / (g1 * g2),
        "D": (bg1 + g1 * a) / D,
    }
    ms, ml, mt = _argmin_labels(mu)
    ns, nl, nt = _argmin_labels(nu)
    return StrategyExponents(
        mu["S"], mu["B"], mu["D"], nu["S"], nu["B"], nu["D"], ms, ns, ml, nl, mt, nt
    )


def a_star_candidates(gamma1: float, gamma2: float, a: float) -> tuple[float, float, float]:
    """The zero-, one- and two-step candidates whose minimum is A*."""
    ex = strategy_exponents(gamma1, gamma2, a)
    bg1, bg2, _, d2, _, _ = bars(gamma1, gamma2)
    return (
        ex.mu_star,
        1.0 + bg2 * ex.nu_star,
        1.0 + a - d2 * ex.nu_star + bg1 * ex.mu_star,
    )


def a_star(gamma1: float, gamma2: float, a: float) -> float:
    return min(a_star_candidates(gamma1, gamma2, a))


# ---------------------------------------------------------------------------
# Thresholds
# ---------------------------------------------------------------------------


def kappa(gamma: float) -> float:
    """gamma / (3 gamma - 1): the curve 1/gamma1 + 1/gamma2 = 3."""
    return gamma / (3.0 * gamma - 1.0)


def threshold_bridge_nu(gamma1: float, gamma2: float) -> float:
    """Delta1 / bar gamma1 (zero when Delta1 = 0)."""
    d1 = max(2.0 * gamma1 - 1.0, 0.0)
    return d1 / (1.0 - gamma1)


def threshold_bridge_mu(gamma1: float, gamma2: float) -> float:
    """bar gamma2 / Delta2 (infinite when Delta2 = 0)."""
    d2 = max(2.0 * gamma2 - 1.0, 0.0)
    return math.inf if d2 == 0.0 else (1.0 - gamma2) / d2


def a1_star(gamma1: float, gamma2: float) -> float:
    return (1.0 - gamma1) * (1.0 - gamma2) / (gamma2 + gamma1 * gamma2 - 1.0)


def a2_star(gamma1: float, gamma2: float) -> float:
    return (gamma1 + gamma1 * gamma2 - 1.0) / ((1.0 - gamma1) * (1.0 - gamma2))


def threshold_ib(gamma1: float, gamma2: float) -> float:
    den = gamma2 - gamma1 + gamma1 * gamma2
    # den vanishes on the Ia/Ib boundary; the limit from inside Ib is +inf
    return (gamma1 - gamma2) / den if den > 0.0 else math.inf


def _near(x: float, y: float) -> bool:
    return math.isfinite(y) and abs(x - y) <= TIE_TOL


# ---------------------------------------------------------------------------
# Explicit case analysis
# ---------------------------------------------------------------------------


class TargetMinimizers(NamedTuple):
    mu_star: float
    nu_star: float
    mu_label: str
    nu_label: str
    target_region: str
    tie: bool


def target_region_of(gamma1: float, gamma2: float) -> str:
    if gamma2 <= 0.5:
        return "I"
    if gamma1 <= 0.5:
        return "II"
    if 1.0 / gamma1 + 1.0 / gamma2 > 3.0:
        return "III"
    return "IV"


def target_minimizers(gamma1: float, gamma2: float, a: float) -> TargetMinimizers:
    """Minimising pair (mu*, nu*) from the explicit four-region case analysis.

    Region I switches nu at Delta1/bar gamma1 and region II switches mu at
    bar gamma2/Delta2; these are the thresholds that agree with the direct
    minimum (see the decisions ledger).
    """
    check_pair(gamma1, gamma2)
    check_a(a)
    ex = strategy_exponents(gamma1, gamma2, a)
    region = target_region_of(gamma1, gamma2)
    t_nu = threshold_bridge_nu(gamma1, gamma2)
    t_mu = threshold_bridge_mu(gamma1, gamma2)
    boundaries = [gamma1 - 0.5, gamma2 - 0.5]
    if region == "I":
        ml, nl = "S", ("B" if a <= t_nu else "S")
        cuts = [t_nu]
    elif region == "II":
        ml, nl = ("S" if a <= t_mu else "B"), "S"
        cuts = [t_mu]
    elif region == "III":
        if a <= t_nu:
            ml, nl = "S", "B"
        elif a <= t_mu:
            ml, nl = "S", "S"
        else:
            ml, nl = "B", "S"
        cuts = [t_nu, t_mu]
        boundaries.append(1.0 / gamma1 + 1.0 / gamma2 - 3.0)
    else:
        a1, a2 = a1_star(gamma1, gamma2), a2_star(gamma1, gamma2)
        if a <= a1:
            ml, nl = "S", "B"
        elif a <= a2:
            ml, nl = "D", "D"
        else:
            ml, nl = "B", "S"
        cuts = [a1, a2]
        boundaries.append(1.0 / gamma1 + 1.0 / gamma2 - 3.0)
    tie = any(_near(a, c) for c in cuts) or any(abs(x) <= TIE_TOL for x in boundaries)
    return TargetMinimizers(ex.mu(ml), ex.nu(nl), ml, nl, region, tie)


@dataclass(frozen=True)
class PhaseClassification:
    gamma1: float
    gamma2: float
    a: float
    region: str
    target_region: str
    a_star_value: float
    dominant_strategy: str
    thresholds: dict
    tie: bool
    mu_label: str
    nu_label: str


def _one_step(bg2: float, nu: float) -> float:
    return 1.0 + bg2 * nu


def theorem_region(gamma1: float, gamma2: float) -> str:
    if gamma1 <= 0.5:
        return "II"
    if gamma2 <= gamma1 / (1.0 + gamma1):
        return "Ia"
    if gamma2 <= 0.5:
        return "Ib"
    if 1.0 / gamma1 + 1.0 / gamma2 > 3.0:
        return "III"
    return "IV"


def region_branches(
    gamma1: float, gamma2: float, region: str
) -> list[tuple[float, str, Callable[[StrategyExponents], float]]]:
    """Explicit A* branches of a region as (upper a-threshold, strategy, formula).

    Branch i applies for thresholds[i-1] < a <= thresholds[i]; the last
    threshold is +inf.
    """
    bg2 = 1.0 - gamma2
    root_s = lambda ex: ex.mu_S  # noqa: E731
    step = {lab: (lambda ex, lab=lab: _one_step(bg2, ex.nu(lab))) for lab in LABELS}
    inf = math.inf
    if region == "Ia":
        return [(inf, "root-is-S", root_s)]
    if region == "Ib":
        return [
            (threshold_ib(gamma1, gamma2), "root-is-S", root_s),
            (inf, "one-step-to-S", step["S"]),
        ]
    if region == "II":
        return [(inf, "one-step-to-S", step["S"])]
    if region == "III":
        return [
            (threshold_bridge_nu(gamma1, gamma2), "one-step-to-B", step["B"]),
            (inf, "one-step-to-S", step["S"]),
        ]
    if region == "IV":
        return [
            (a1_star(gamma1, gamma2), "one-step-to-B", step["B"]),
            (a2_star(gamma1, gamma2), "one-step-to-D", step["D"]),
            (inf, "one-step-to-S", step["S"]),
        ]
    raise ValueError(f"unknown region {region!r}")


def _thresholds(gamma1: float, gamma2: float, region: str) -> dict:
    out = {
        "bar_gamma2/Delta2": threshold_bridge_mu(gamma1, gamma2),
        "Delta1/bar_gamma1": threshold_bridge_nu(gamma1, gamma2),
    }
    if region in ("Ia", "Ib"):
        out["gamma1/(1+gamma1)"] = gamma1 / (1.0 + gamma1)
    if region == "Ib":
        out["(gamma1-gamma2)/(gamma2-gamma1+gamma1*gamma2)"] = threshold_ib(gamma1, gamma2)
    if region in ("III", "IV"):
        out["kappa(gamma1)"] = kappa(gamma1)
    if region == "IV":
        out["a1*"] = a1_star(gamma1, gamma2)
        out["a2*"] = a2_star(gamma1, gamma2)
    return out


def _region_boundary_tie(gamma1: float, gamma2: float) -> bool:
    checks = [gamma1 - 0.5, gamma2 - 0.5, gamma2 - gamma1 / (1.0 + gamma1)]
    if gamma1 > 0.5 and gamma2 > 0.5:
        checks.append(1.0 / gamma1 + 1.0 / gamma2 - 3.0)
    return any(abs(c) <= TIE_TOL for c in checks)


def classify(gamma1: float, gamma2: float, a: float) -> PhaseClassification:
    """Region, explicit A* and dominant strategy for one parameter point."""
    check_pair(gamma1, gamma2)
    check_a(a)
    ex = strategy_exponents(gamma1, gamma2, a)
    region = theorem_region(gamma1, gamma2)
    branches = region_branches(gamma1, gamma2, region)
    chosen = next(br for br in branches if a <= br[0])
    tm = target_minimizers(gamma1, gamma2, a)
    tie = (
        _region_boundary_tie(gamma1, gamma2)
        or tm.tie
        or any(_near(a, br[0]) for br in branches)
        or len(ex.mu_ties) > 1
        or len(ex.nu_ties) > 1
    )
    return PhaseClassification(
        gamma1=gamma1,
        gamma2=gamma2,
        a=a,
        region=region,
        target_region=tm.target_region,
        a_star_value=chosen[2](ex),
        dominant_strategy=chosen[1],
        thresholds=_thresholds(gamma1, gamma2, region),
        tie=tie,
        mu_label=tm.mu_label,
        nu_label=tm.nu_label,
    )


# ---------------------------------------------------------------------------
# Transmission maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    slope: float
    intercept: float

    def __call__(self, x):
        return self.slope * x + self.intercept

    def inverse(self) -> "AffineMap":
        return AffineMap(1.0 / self.slope, -self.intercept / self.slope)


class TransmissionMaps(NamedTuple):
    phi: AffineMap
    psi: AffineMap
    phi_inv: AffineMap
    psi_inv: AffineMap


def transmission_maps(gamma1: float, gamma2: float, a: float) -> TransmissionMaps:
    check_pair(gamma1, gamma2)
    check_a(a)
    bg1, bg2 = 1.0 - gamma1, 1.0 - gamma2
    phi = AffineMap(gamma1 / bg2, -1.0 / bg2)
    psi = AffineMap(gamma2 / bg1, -a / bg1)
    # inverses written out directly rather than through AffineMap.inverse
    phi_inv = AffineMap(bg2 / gamma1, 1.0 / gamma1)
    psi_inv = AffineMap(bg1 / gamma2, a / gamma2)
    return TransmissionMaps(phi, psi, phi_inv, psi_inv)


def big_phi(gamma1: float, gamma2: float, mu: float, nu: float) -> float:
    return -gamma1 * mu + (1.0 - gamma2) * nu + 1.0


def big_psi(gamma1: float, gamma2: float, a: float, mu: float, nu: float) -> float:
    return (1.0 - gamma1) * mu - gamma2 * nu + a


# ---------------------------------------------------------------------------
# Asymptotic scales
# ---------------------------------------------------------------------------


@total_ordering
@dataclass(frozen=True)
class AsymptoticScale:
    """The formal quantity lambda**p * log(1/lambda)**q as lambda -> 0.

    Ordering is "eventually smaller": a larger lambda-exponent is smaller,
    ties in p are broken by q.
    """

    p: float
    q: float = 0.0

    def __mul__(self, other):
        if isinstance(other, AsymptoticScale):
            return AsymptoticScale(self.p + other.p, self.q + other.q)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, AsymptoticScale):
            return AsymptoticScale(self.p - other.p, self.q - other.q)
        return NotImplemented

    def __pow__(self, e: float):
        return AsymptoticScale(self.p * e, self.q * e)

    def __eq__(self, other):
        if not isinstance(other, AsymptoticScale):
            return NotImplemented
        return scale_compare(self, other) == 0

    def __lt__(self, other):
        return scale_compare(self, other) < 0

    def __hash__(self):
        return hash((round(self.p, 9), round(self.q, 9)))

    def evaluate(self, lam: float) -> float:
        return lam**self.p * math.log(1.0 / lam) ** self.q

    @classmethod
    def lam(cls, p: float) -> "AsymptoticScale":
        return cls(p, 0.0)

    @classmethod
    def log(cls, q: float) -> "AsymptoticScale":
        return cls(0.0, q)


ONE = AsymptoticScale(0.0, 0.0)


def scale_compare(s1: AsymptoticScale, s2: AsymptoticScale, tol: float = EXACT_TOL) -> int:
    """-1 if s1 is eventually strictly smaller than s2, 0 if equal, +1 otherwise."""
    if abs(s1.p - s2.p) > tol:
        return -1 if s1.p > s2.p else 1
    if abs(s1.q - s2.q) > tol:
        return -1 if s1.q < s2.q else 1
    return 0


def scale_le(s1: AsymptoticScale, s2: AsymptoticScale, tol: float = EXACT_TOL) -> bool:
    return scale_compare(s1, s2, tol) <= 0


def blue_scales(gamma1: float, gamma2: float, a: float, b: float) -> tuple[AsymptoticScale, AsymptoticScale]:
    """Formal scales of the blue/red thresholds u_blue and v_blue."""
    ex = strategy_exponents(gamma1, gamma2, a)
    return AsymptoticScale(ex.mu_star, b), AsymptoticScale(ex.nu_star, b)


@dataclass
class CheckResult:
    name: str
    passed: bool
    slack: float
    detail: str = ""


def verify_scale_inequalities(gamma1: float, gamma2: float, a: float, b: float | None = None) -> list[CheckResult]:
    """Check the four threshold inequalities plus the Phi/Psi and A* lemmas."""
    check_pair(gamma1, gamma2)
    check_a(a)
    bg1, bg2, d1, d2, _, delta = bars(gamma1, gamma2)
    if b is None:
        b = 17.0 / delta + 1.0
    elif not (b > 17.0 / delta):
        raise BadB(f"b must exceed 17/delta = {17.0 / delta!r}, got {b!r}")
    u1, u2 = blue_scales(gamma1, gamma2, a, b)
    logs = AsymptoticScale.log(delta * b)
    lam = AsymptoticScale.lam

    def _slack(lhs: AsymptoticScale, rhs: AsymptoticScale) -> float:
        # positive lambda-gap means strict domination; otherwise report the log gap
        gap = lhs.p - rhs.p
        return -gap if abs(gap) > EXACT_TOL else lhs.q - rhs.q

    pairs = [
        ("stars-type1", u1**gamma1, logs * lam(1 + a)),
        ("stars-type2", u2**gamma2, logs * lam(1 + a)),
        ("one-and-two-a", u1**d1 * u2**gamma2, logs * lam(1 + 2 * a)),
        ("two-and-a", u1**gamma1 * u2**d2, logs * lam(2 + a)),
        ("directs", u1**d1 * u2**d2, logs * lam(1 + a)),
    ]
    out = [
        CheckResult(name, scale_le(rhs, lhs), _slack(lhs, rhs), f"lhs={lhs} rhs={rhs}")
        for name, lhs, rhs in pairs
    ]
    ex = strategy_exponents(gamma1, gamma2, a)
    phi_v = big_phi(gamma1, gamma2, ex.mu_star, ex.nu_star)
    psi_v = big_psi(gamma1, gamma2, a, ex.mu_star, ex.nu_star)
    out.append(CheckResult("Phi>=0", phi_v >= -EXACT_TOL, phi_v))
    out.append(CheckResult("Psi>=0", psi_v >= -EXACT_TOL, psi_v))
    c0, c1, c2 = a_star_candidates(gamma1, gamma2, a)
    out.append(CheckResult("two-step-redundant", c2 >= min(c0, c1) - EXACT_TOL, c2 - min(c0, c1)))
    return out


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

CSV_HEADER = "gamma1,gamma2,a,region,target_region,a_star,mu_label,nu_label,strategy,tie"


@dataclass(frozen=True)
class GridRow:
    gamma1: float
    gamma2: float
    a: float
    region: str
    target_region: str
    a_star: float
    mu_label: str
    nu_label: str
    strategy: str
    tie: bool

    def csv(self) -> str:
        if self.region == "subcritical":
            tail = "subcritical,,,,,,"
        else:
            tail = ",".join(
                [
                    self.region,
                    self.target_region,
                    repr(self.a_star),
                    self.mu_label,
                    self.nu_label,
                    self.strategy,
                    "1" if self.tie else "0",
                ]
            )
        return f"{self.gamma1!r},{self.gamma2!r},{self.a!r},{tail}"


def _axis(rng, n: int, centers: bool) -> np.ndarray:
    lo, hi = float(rng[0]), float(rng[1])
    if n < 1 or hi < lo:
        raise EmptyGrid(f"empty axis {rng!r} with {n} points")
    if centers:
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n
    return np.linspace(lo, hi, n)


def grid_point_row(g1: float, g2: float, a: float) -> GridRow:
    if g1 + g2 <= 1.0:
        return GridRow(g1, g2, a, "subcritical", "", math.nan, "", "", "", False)
    c = classify(g1, g2, a)
    return GridRow(
        g1, g2, a, c.region, c.target_region, c.a_star_value, c.mu_label, c.nu_label,
        c.dominant_strategy, c.tie,
    )


def iter_grid(gamma1_range, gamma2_range, a_range, resolution, centers: bool = False) -> Iterator[GridRow]:
    if isinstance(resolution, int):
        resolution = (resolution, resolution, resolution)
    n1, n2, na = resolution
    g1s = _axis(gamma1_range, n1, centers)
    g2s = _axis(gamma2_range, n2, centers)
    as_ = _axis(a_range, na, centers)
    for g in (*g1s, *g2s):
        if not 0.0 < g < 1.0:
            raise GammaOutOfRange(f"grid gamma {g!r} outside (0,1)")
    for a in as_:
        check_a(float(a))
    for g1 in g1s:
        for g2 in g2s:
            for a in as_:
                yield grid_point_row(float(g1), float(g2), float(a))


def phase_grid(gamma1_range, gamma2_range, a_range, resolution, centers: bool = False) -> list[GridRow]:
    """Row-major table of classifications over a product grid."""
    return list(iter_grid(gamma1_range, gamma2_range, a_range, resolution, centers))


def grid_to_csv(rows) -> str:
    return "\n".join([CSV_HEADER, *(r.csv() for r in rows)]) + "\n"


def parse_grid_csv(text: str) -> list[dict]:
    import csv
    import io

    return list(csv.DictReader(io.StringIO(text)))
