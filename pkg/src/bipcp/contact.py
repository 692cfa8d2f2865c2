"""Two-rate contact process: general engine, star engine, trace events.

Infected vertices recover at rate 1; an infected type-i vertex transmits
along each incident edge at rate lambda_i.
"""

from __future__ import annotations

import heapq
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadLeafCount,
    EmptyInitialSet,
    EventCapExceeded,
    InvalidTrace,
    UnknownId,
)
from .hypergraph import GraphBase, Hypergraph, RootSpec, Window, sample
from .phase import ModelParams
from .rng import trial_graph_seed, trial_rng

Z95 = 1.959963984540054
PROXIES = ("alive-at-horizon", "target-hit", "either")


@dataclass(frozen=True)
class Rates:
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError(f"rates must be positive, got {self.lambda1!r}, {self.lambda2!r}")

    @property
    def small(self) -> bool:
        """Both rates below 1/4 (needed for the trace bound)."""
        return self.lambda1 < 0.25 and self.lambda2 < 0.25

    def of(self, vtype: int) -> float:
        return self.lambda1 if vtype == 1 else self.lambda2

    @classmethod
    def from_params(cls, params: ModelParams) -> "Rates":
        return cls(params.lambda1, params.lambda2)


@dataclass(frozen=True)
class SimConfig:
    t_max: float = 1000.0
    max_events: int = 10_000_000
    survival_proxy: str = "alive-at-horizon"
    target_thresholds: tuple[float, float] | None = None
    record_trace: bool = False
    seed: int = 0
    escape_size: int | None = None
    raise_on_cap: bool = False
    boundary_margin: float = 0.1

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.survival_proxy not in PROXIES:
            raise ValueError(f"unknown proxy {self.survival_proxy!r}")
        if self.target_thresholds is not None:
            if not all(0 < x <= 1 for x in self.target_thresholds):
                raise ValueError("target thresholds must lie in (0,1]")
        elif self.survival_proxy != "alive-at-horizon":
            raise ValueError("target-hit proxies need target_thresholds")


@dataclass
class SimOutcome:
    survived: bool
    extinction_time: float
    peak_infected: int
    total_transmissions: int
    target_hit: int | None
    events_processed: int
    alive_at_end: bool = False
    final_infected: int = 0
    capped: bool = False
    escaped: bool = False
    boundary_hit: bool = False
    trace: list | None = None

    def as_json(self, trial: int) -> dict:
        return {
            "trial": trial,
            "survived": self.survived,
            "extinction_time": self.extinction_time,
            "peak": self.peak_infected,
            "target_hit": self.target_hit,
        }


def _judge(proxy: str, alive: bool, hit: int | None) -> bool:
    if proxy == "alive-at-horizon":
        return alive
    if proxy == "target-hit":
        return hit is not None
    return alive or hit is not None


class _Uniforms:
    """Buffered uniforms in (0, 1); avoids one numpy call per draw."""

    __slots__ = ("rng", "buf", "i")

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf: list[float] = []
        self.i = 0

    def __call__(self) -> float:
        if self.i >= len(self.buf):
            self.buf = (1.0 - self.rng.random(4096)).tolist()
            self.i = 0
        x = self.buf[self.i]
        self.i += 1
        return x


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return trial_rng(int(seed_or_rng), 0)


def _targets(graph: GraphBase, thresholds):
    if thresholds is None or not isinstance(graph, Hypergraph):
        return None
    u1, u2 = thresholds
    return lambda v: graph.mark[v] <= (u1 if graph.vtypes[v] == 1 else u2)


def run(graph: GraphBase, rates: Rates, initial: Iterable[int], config: SimConfig = SimConfig(), rng=None) -> SimOutcome:
    """Exact simulation until extinction, ``t_max``, the event cap or escape.

    Each infected vertex v carries one exponential clock of rate
    1 + lambda_v * deg(v); when it rings the event is a recovery with
    probability 1 / (1 + lambda_v deg v) and otherwise a transmission along
    a uniformly chosen incident edge.
    """
    init = sorted({graph.check_id(v) for v in initial})
    if not init:
        raise EmptyInitialSet("initial infected set is empty")
    U = _Uniforms(_as_rng(config.seed if rng is None else rng))
    log = math.log
    t_max = config.t_max
    is_target = _targets(graph, config.target_thresholds)
    edge_zone = None
    if isinstance(graph, Hypergraph):
        edge_zone = (1.0 - config.boundary_margin) * graph.window.L
    lam = (0.0, rates.lambda1, rates.lambda2)
    vtypes = graph.vtypes
    nbr_cache: dict[int, np.ndarray] = {}
    rate: dict[int, float] = {}
    infected: set[int] = set()
    heap: list[tuple[float, int]] = []
    hit = None
    boundary = False
    trace = [] if config.record_trace else None
    stop_on_hit = config.survival_proxy != "alive-at-horizon"

    def infect(v: int, t: float) -> None:
        nonlocal hit, boundary
        nb = nbr_cache.get(v)
        if nb is None:
            nb = graph.neighbors(v)
            nbr_cache[v] = nb
        r = 1.0 + lam[vtypes[v]] * len(nb)
        rate[v] = r
        infected.add(v)
        heapq.heappush(heap, (t - log(U()) / r, v))
        if hit is None and is_target is not None and is_target(v):
            hit = v
        if edge_zone is not None and abs(graph.pos[v]) >= edge_zone:
            boundary = True

    for v in init:
        infect(v, 0.0)
        if trace is not None:
            trace.append((0.0, -1, v))
    peak = len(infected)
    events = 0
    trans = 0
    t = 0.0
    capped = escaped = False
    escape = config.escape_size
    while heap:
        if stop_on_hit and hit is not None:
            break
        if escape is not None and len(infected) >= escape:
            escaped = True
            break
        if events >= config.max_events:
            capped = True
            break
        t_next, v = heap[0]
        if t_next > t_max:
            t = t_max
            break
        heapq.heappop(heap)
        t = t_next
        events += 1
        r = rate[v]
        if U() * r < 1.0:
            infected.discard(v)
            continue
        trans += 1
        nb = nbr_cache[v]
        w = int(nb[int(U() * len(nb))])
        if w not in infected:
            infect(w, t)
            if trace is not None:
                trace.append((t, v, w))
            if len(infected) > peak:
                peak = len(infected)
        heapq.heappush(heap, (t - log(U()) / r, v))
    alive = bool(infected)
    ext = t if not alive else t_max
    out = SimOutcome(
        survived=_judge(config.survival_proxy, alive, hit),
        extinction_time=min(ext, t_max),
        peak_infected=peak,
        total_transmissions=trans,
        target_hit=hit,
        events_processed=events,
        alive_at_end=alive,
        final_infected=len(infected),
        capped=capped,
        escaped=escaped,
        boundary_hit=boundary,
        trace=trace,
    )
    if capped and config.raise_on_cap:
        raise EventCapExceeded(f"event cap {config.max_events} reached at t={t}", out)
    return out


# ---------------------------------------------------------------------------
# Coupled runs (monotonicity)
# ---------------------------------------------------------------------------


@dataclass
class CoupledOutcome:
    contained: bool
    events: int
    low_alive: bool
    high_alive: bool
    low_peak: int
    high_peak: int


def run_coupled(graph: GraphBase, low: Rates, high: Rates, initial: Iterable[int], config: SimConfig = SimConfig(), rng=None) -> CoupledOutcome:
    """Run two rate vectors on one graphical construction.

    Transmission marks are laid down at the high rates; each mark carries a
    uniform label and also counts for the low process when the label is
    below lambda_low / lambda_high.  Containment of the low infected set in
    the high one is checked after every event.
    """
    if low.lambda1 > high.lambda1 or low.lambda2 > high.lambda2:
        raise ValueError("low rates must not exceed high rates")
    init = sorted({graph.check_id(v) for v in initial})
    if not init:
        raise EmptyInitialSet("initial infected set is empty")
    U = _Uniforms(_as_rng(config.seed if rng is None else rng))
    log = math.log
    lam_hi = (0.0, high.lambda1, high.lambda2)
    ratio = (0.0, low.lambda1 / high.lambda1, low.lambda2 / high.lambda2)
    vt = graph.vtypes
    nbrs: dict[int, np.ndarray] = {}
    rate: dict[int, float] = {}
    hi_set: set[int] = set()
    lo_set: set[int] = set()
    heap: list[tuple[float, int]] = []

    def infect_hi(v, t):
        nb = nbrs.get(v)
        if nb is None:
            nb = nbrs[v] = graph.neighbors(v)
        rate[v] = 1.0 + lam_hi[vt[v]] * len(nb)
        hi_set.add(v)
        heapq.heappush(heap, (t - log(U()) / rate[v], v))

    for v in init:
        infect_hi(v, 0.0)
        lo_set.add(v)
    contained = True
    events = 0
    lo_peak = hi_peak = len(init)
    while heap and events < config.max_events:
        t, v = heapq.heappop(heap)
        if t > config.t_max:
            break
        events += 1
        if U() * rate[v] < 1.0:
            hi_set.discard(v)
            lo_set.discard(v)
        else:
            nb = nbrs[v]
            w = int(nb[int(U() * len(nb))])
            label = U()
            if w not in hi_set:
                infect_hi(w, t)
            if v in lo_set and label < ratio[vt[v]]:
                lo_set.add(w)
            heapq.heappush(heap, (t - log(U()) / rate[v], v))
        if not lo_set <= hi_set:
            contained = False
            break
        lo_peak = max(lo_peak, len(lo_set))
        hi_peak = max(hi_peak, len(hi_set))
    return CoupledOutcome(contained, events, bool(lo_set), bool(hi_set), lo_peak, hi_peak)


# ---------------------------------------------------------------------------
# Star engine
# ---------------------------------------------------------------------------


def run_star(n: int, rates: Rates, initial="centre", config: SimConfig = SimConfig(), rng=None, centre_infected: bool | None = None, method: str = "events") -> SimOutcome:
    """Contact process on a star with a type-1 centre and n type-2 leaves.

    The state is (centre infected, number of infected leaves).  With
    ``method='events'`` every state change is one event (wasted
    transmissions are skipped, which leaves the law of the state path
    unchanged).  ``method='leap'`` jumps a whole centre-infected period at
    once (leaves evolve independently while the centre is infected) and a
    whole centre-healthy period as a run of recoveries ended by a
    reinfection; it is exact in law for the state at period boundaries,
    the extinction time and the state at ``t_max``, but records the peak
    only at period boundaries.

    ``initial`` is ``'centre'`` or a number m of initially infected leaves.
    """
    if n < 1:
        raise BadLeafCount(f"star needs at least one leaf, got n={n}")
    if initial == "centre":
        c, k = 1, 0
    else:
        m = int(initial)
        if not 0 <= m <= n:
            raise BadLeafCount(f"leaf count {m} outside [0, {n}]")
        c = 1 if centre_infected else 0
        k = m
    if c == 0 and k == 0:
        raise EmptyInitialSet("no infected vertex")
    rng = _as_rng(config.seed if rng is None else rng)
    if method == "leap":
        return _star_leap(n, rates, c, k, config, rng)
    if method != "events":
        raise ValueError(f"unknown method {method!r}")
    U = _Uniforms(rng)
    log = math.log
    l1, l2 = rates.lambda1, rates.lambda2
    t = 0.0
    peak = c + k
    events = trans = 0
    t_max = config.t_max
    escape = config.escape_size
    capped = escaped = False
    while c + k > 0:
        if escape is not None and c + k >= escape:
            escaped = True
            break
        if events >= config.max_events:
            capped = True
            break
        r_rec_c = c
        r_rec_l = k
        r_out = c * l1 * (n - k)
        r_in = (1 - c) * l2 * k
        total = r_rec_c + r_rec_l + r_out + r_in
        t_new = t - log(U()) / total
        if t_new > t_max:
            t = t_max
            break
        t = t_new
        events += 1
        x = U() * total
        if x < r_rec_c:
            c = 0
        elif x < r_rec_c + r_rec_l:
            k -= 1
        elif x < r_rec_c + r_rec_l + r_out:
            k += 1
            trans += 1
        else:
            c = 1
            trans += 1
        if c + k > peak:
            peak = c + k
    alive = c + k > 0
    return SimOutcome(
        survived=alive,
        extinction_time=t if not alive else t_max,
        peak_infected=peak,
        total_transmissions=trans,
        target_hit=None,
        events_processed=events,
        alive_at_end=alive,
        final_infected=c + k,
        capped=capped,
        escaped=escaped,
    )


def _leaf_probs(l1: float, d: float) -> tuple[float, float]:
    """P(infected at d | infected at 0), P(infected at d | healthy at 0) for a
    leaf next to an infected centre."""
    s = 1.0 + l1
    pi = l1 / s
    e = math.exp(-s * d)
    return pi + (1.0 - pi) * e, pi * (1.0 - e)


def _star_leap(n, rates, c, k, config, rng, cycle_log: list | None = None) -> SimOutcome:
    l1, l2 = rates.lambda1, rates.lambda2
    t = 0.0
    t_max = config.t_max
    peak = c + k
    cycles = 0
    p_rec = 1.0 / (1.0 + l2)
    escape = config.escape_size
    escaped = False
    while True:
        if escape is not None and c + k >= escape:
            escaped = True
            break
        if c == 1:
            d = rng.exponential(1.0)
            span = min(d, t_max - t)
            p11, p01 = _leaf_probs(l1, span)
            k = int(rng.binomial(k, p11) + rng.binomial(n - k, p01))
            if d >= t_max - t:
                t = t_max
                break
            t += d
            c = 0
            peak = max(peak, k + 1)
        # centre healthy with k infected leaves
        if cycle_log is not None:
            cycle_log.append((t, k))
        cycles += 1
        if k == 0:
            break
        g = int(rng.geometric(1.0 - p_rec)) - 1  # recoveries before a reinfection
        steps = min(g, k)
        rates_seq = (k - np.arange(steps + (1 if g < k else 0))) * (1.0 + l2)
        times = t + np.cumsum(rng.exponential(1.0 / rates_seq))
        if times[-1] > t_max:
            j = int(np.searchsorted(times, t_max, side="right"))
            k -= j
            t = t_max
            break
        t = float(times[-1])
        if g >= k:
            k = 0
            break
        k -= steps
        c = 1
        if cycles >= config.max_events:
            break
    alive = c + k > 0
    return SimOutcome(
        survived=alive,
        extinction_time=t if not alive else t_max,
        peak_infected=peak,
        total_transmissions=0,
        target_hit=None,
        events_processed=cycles,
        alive_at_end=alive,
        final_infected=c + k,
        capped=alive and t < t_max and not escaped,
        escaped=escaped,
    )


@dataclass(frozen=True)
class ExtinctionMedian:
    median: float
    method: str  # 'empirical' or 'extrapolated'
    horizon: float
    survive_horizon: float
    cycle_rate: float  # estimated per-unit-time extinction hazard in the metastable phase
    trials: int


def star_extinction_median(n: int, rates: Rates, trials: int, horizon: float, seed: int, burn_in: float | None = None) -> ExtinctionMedian:
    """Median extinction time of the star started from the centre.

    Trials run with the leap engine up to ``horizon``.  If at least half of
    them die before it, the empirical median is returned.  Otherwise the
    tail beyond the horizon is extrapolated as exponential with the hazard
    measured in the metastable phase: each centre-healthy period that starts
    with k infected leaves ends the process with probability
    (1 + lambda2)**-k, averaged over periods after ``burn_in`` and divided by
    the mean time per period.
    """
    burn_in = horizon / 2 if burn_in is None else burn_in
    cfg = SimConfig(t_max=horizon, max_events=10**12)
    ext = []
    hazard_num = 0.0
    n_periods = 0
    span = 0.0
    for i in range(trials):
        log: list = []
        out = _star_leap(n, rates, 1, 0, cfg, trial_rng(seed, i), cycle_log=log)
        if not out.alive_at_end:
            ext.append(out.extinction_time)
            continue
        late = [(tt, kk) for tt, kk in log if tt >= burn_in]
        if len(late) >= 2:
            ks = np.array([kk for _, kk in late], dtype=float)
            hazard_num += float(np.exp(-ks * math.log1p(rates.lambda2)).sum())
            n_periods += len(late)
            span += late[-1][0] - late[0][0]
    surv = 1.0 - len(ext) / trials
    if surv <= 0.5:
        return ExtinctionMedian(float(np.median(ext + [math.inf] * (trials - len(ext)))), "empirical", horizon, surv, math.nan, trials)
    per_period = hazard_num / max(n_periods, 1)
    period_len = span / max(n_periods - 1, 1)
    h = per_period / period_len if period_len > 0 else math.nan
    med = horizon + math.log(2.0 * surv) / h
    return ExtinctionMedian(med, "extrapolated", horizon, surv, h, trials)


# ---------------------------------------------------------------------------
# Ordered traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    vertices: tuple[int, ...]

    def validate(self, graph: GraphBase) -> None:
        vs = self.vertices
        if not vs:
            raise InvalidTrace("empty trace")
        for v in vs:
            try:
                graph.check_id(v)
            except UnknownId as e:
                raise InvalidTrace(f"unknown vertex {v}") from e
        for a, b in zip(vs, vs[1:]):
            if a == b:
                raise InvalidTrace(f"consecutive repeat of {a}")
            if b not in set(graph.neighbors(a).tolist()):
                raise InvalidTrace(f"{a} and {b} are not adjacent")

    @property
    def length(self) -> int:
        return len(self.vertices) - 1


def enumerate_traces(graph: GraphBase, start: int, max_length: int) -> list[Trace]:
    """All ordered traces from ``start`` of length 1..max_length."""
    out: list[Trace] = []

    def rec(seq):
        if len(seq) > 1:
            out.append(Trace(tuple(seq)))
        if len(seq) - 1 == max_length:
            return
        for w in graph.neighbors(seq[-1]).tolist():
            rec(seq + [w])

    rec([graph.check_id(start)])
    return out


def trace_bound(rates: Rates, length: int, start_type: int) -> float:
    """(2 l_s)^ceil(len/2) (2 l_o)^floor(len/2) with l_s the start type's rate."""
    ls, lo = (rates.lambda1, rates.lambda2) if start_type == 1 else (rates.lambda2, rates.lambda1)
    return (2 * ls) ** ((length + 1) // 2) * (2 * lo) ** (length // 2)


def _trace_chain(graph: GraphBase, rates: Rates, trace: Trace):
    """Event list and mask transition table of the restricted construction.

    Bit i of a mask says that some infection path with ordered trace
    (v_0, ..., v_i) currently sits at v_i.
    """
    vs = trace.vertices
    ell = len(vs) - 1
    distinct = sorted(set(vs))
    pairs = sorted({(a, b) for a, b in zip(vs, vs[1:])})
    ev_rates = [1.0] * len(distinct) + [rates.of(graph.vtype(a)) for a, _ in pairs]
    n_masks = 1 << (ell + 1)
    table = np.zeros((len(ev_rates), n_masks), dtype=np.int64)
    masks = np.arange(n_masks)
    for e, x in enumerate(distinct):
        clear = sum(1 << i for i, v in enumerate(vs) if v == x)
        table[e] = masks & ~clear
    for j, (a, b) in enumerate(pairs):
        e = len(distinct) + j
        add = np.zeros(n_masks, dtype=np.int64)
        for i in range(ell):
            if vs[i] == a and vs[i + 1] == b:
                add |= np.where(masks & (1 << i), 1 << (i + 1), 0)
        table[e] = masks | add
    return np.array(ev_rates), table, ell


def trace_probability_exact(graph: GraphBase, rates: Rates, trace: Trace) -> float:
    """Exact probability via absorption in the finite mask chain."""
    trace.validate(graph)
    ev_rates, table, ell = _trace_chain(graph, rates, trace)
    if ell == 0:
        return 1.0
    p = ev_rates / ev_rates.sum()
    goal = 1 << ell
    states = [m for m in range(1, 1 << (ell + 1)) if not m & goal]
    idx = {m: i for i, m in enumerate(states)}
    A = np.eye(len(states))
    rhs = np.zeros(len(states))
    for m in states:
        i = idx[m]
        for e in range(len(p)):
            m2 = int(table[e, m])
            if m2 & goal:
                rhs[i] += p[e]
            elif m2 != 0:
                A[i, idx[m2]] -= p[e]
    x = np.linalg.solve(A, rhs)
    return float(x[idx[1]])


@dataclass(frozen=True)
class TraceEstimate:
    p_hat: float
    ci_lo: float
    ci_hi: float
    se: float
    bound: float | None  # None when a rate is >= 1/4
    trials: int


def trace_probability(graph: GraphBase, rates: Rates, trace: Trace | Sequence[int], n_trials: int, seed: int = 0, max_steps: int = 100_000) -> TraceEstimate:
    """Monte Carlo frequency of an infection path with the given ordered trace.

    All trials advance together; the restricted construction has a fixed
    total event rate, so only the sequence of marks matters.
    """
    if not isinstance(trace, Trace):
        trace = Trace(tuple(int(v) for v in trace))
    trace.validate(graph)
    bound = trace_bound(rates, trace.length, graph.vtype(trace.vertices[0])) if rates.small else None
    ev_rates, table, ell = _trace_chain(graph, rates, trace)
    if ell == 0:
        return TraceEstimate(1.0, 1.0, 1.0, 0.0, bound, n_trials)
    rng = trial_rng(seed, 0)
    cum = np.cumsum(ev_rates / ev_rates.sum())
    cum[-1] = 1.0
    goal = 1 << ell
    mask = np.ones(n_trials, dtype=np.int64)
    active = np.arange(n_trials)
    for _ in range(max_steps):
        if len(active) == 0:
            break
        e = np.searchsorted(cum, rng.random(len(active)), side="right")
        mask[active] = table[e, mask[active]]
        m = mask[active]
        active = active[(m != 0) & ((m & goal) == 0)]
    succ = int(np.count_nonzero(mask & goal))
    p = succ / n_trials
    lo, hi = wilson_interval(succ, n_trials)
    return TraceEstimate(p, lo, hi, math.sqrt(max(p * (1 - p), 0.0) / n_trials), bound, n_trials)


# ---------------------------------------------------------------------------
# Annealed survival estimates
# ---------------------------------------------------------------------------


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    p = successes / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class ThetaEstimate:
    theta_hat: float
    ci_lo: float
    ci_hi: float
    trials: int
    proxy: str
    diagnostics: dict = field(default_factory=dict)
    outcomes: list | None = None

    def as_json(self, lam: float) -> dict:
        return {
            "lambda": lam,
            "theta_hat": self.theta_hat,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "trials": self.trials,
            "proxy": self.proxy,
        }


def one_trial(params: ModelParams, window: Window, root: RootSpec, config: SimConfig, master_seed: int, i: int) -> SimOutcome:
    graph = sample(params, window, trial_graph_seed(master_seed, i), root)
    if graph.root_id is None:
        return SimOutcome(False, 0.0, 0, 0, None, 0)
    return run(graph, Rates.from_params(params), [graph.root_id], config, rng=trial_rng(master_seed, i))


def _trial_chunk(args) -> list[SimOutcome]:
    params, window, root, config, master_seed, lo, hi = args
    return [one_trial(params, window, root, config, master_seed, i) for i in range(lo, hi)]


def default_workers() -> int:
    env = os.environ.get("BIPCP_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def run_trials(params: ModelParams, window: Window, root: RootSpec, n_trials: int, config: SimConfig, master_seed: int, workers: int | None = None, chunk: int = 256) -> list[SimOutcome]:
    """Outcomes in trial order; independent of ``workers``."""
    workers = default_workers() if workers is None else workers
    jobs = [(params, window, root, config, master_seed, lo, min(lo + chunk, n_trials)) for lo in range(0, n_trials, chunk)]
    if workers <= 1 or len(jobs) <= 1:
        parts = [_trial_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_trial_chunk, jobs))
    return [o for p in parts for o in p]


def estimate_theta(params: ModelParams, window: Window | float, root: RootSpec, n_trials: int, config: SimConfig = SimConfig(), master_seed: int = 0, workers: int | None = None, keep_outcomes: bool = False) -> ThetaEstimate:
    """Annealed survival frequency with a fresh graph per trial."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    if not isinstance(window, Window):
        window = Window(float(window))
    outs = run_trials(params, window, root, n_trials, config, master_seed, workers)
    s = sum(o.survived for o in outs)
    lo, hi = wilson_interval(s, n_trials)
    alive = sum(o.alive_at_end for o in outs)
    hits = sum(o.target_hit is not None for o in outs)
    diag = {
        "survived": s,
        "alive_at_end": alive,
        "theta_alive": alive / n_trials,
        "target_hits": hits,
        "theta_target": hits / n_trials,
        "theta_either": sum(o.alive_at_end or o.target_hit is not None for o in outs) / n_trials,
        "event_cap_hits": sum(o.capped for o in outs),
        "escaped": sum(o.escaped for o in outs),
        "boundary_hits": sum(o.boundary_hit for o in outs),
        "events": sum(o.events_processed for o in outs),
    }
    return ThetaEstimate(s / n_trials, lo, hi, n_trials, config.survival_proxy, diag, outs if keep_outcomes else None)
