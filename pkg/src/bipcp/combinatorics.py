"""Combinatorial paths, discovery trees, tree weights and tree reductions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    BadDistinguishedLeaf,
    BadRange,
    BadThreshold,
    InvalidColouringForPath,
    InvalidPath,
    LengthTooLarge,
    PreconditionViolated,
    StuckTree,
)
from .hypergraph import GraphBase
from .phase import EXACT_TOL, AsymptoticScale, ModelParams, scale_le, validate_and_derive

DEFAULT_CAP = 14
ALL_BLUE = "all-blue"
RED_LAST = "blue-then-red-last"
COLOURINGS = (ALL_BLUE, RED_LAST)


# ---------------------------------------------------------------------------
# Combinatorial paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CombinatorialPath:
    entries: tuple[int, ...]

    def __post_init__(self):
        e = tuple(int(x) for x in self.entries)
        object.__setattr__(self, "entries", e)
        if not e or e[0] != 0:
            raise InvalidPath(f"path must start at 0: {e}")
        top = 0
        for i in range(1, len(e)):
            if e[i] == e[i - 1]:
                raise InvalidPath(f"consecutive repeat at position {i}: {e}")
            if e[i] > top + 1 or e[i] < 0:
                raise InvalidPath(f"value {e[i]} at position {i} skips past {top + 1}: {e}")
            top = max(top, e[i])

    @property
    def length(self) -> int:
        return len(self.entries) - 1

    @property
    def k(self) -> int:
        return max(self.entries) + 1

    def last_is_first_visit(self) -> bool:
        e = self.entries
        return len(e) >= 2 and e[-1] not in e[:-1]

    def dump(self) -> str:
        return ",".join(map(str, self.entries))

    @classmethod
    def parse(cls, text: str) -> "CombinatorialPath":
        return cls(tuple(int(x) for x in text.strip().split(",")))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def iter_paths(ell: int, k: int | None = None, cap: int = DEFAULT_CAP) -> Iterator[CombinatorialPath]:
    """Lexicographic generator of all combinatorial paths of length ``ell``."""
    if ell < 0:
        raise BadRange(f"length must be >= 0, got {ell}")
    if ell > cap:
        raise LengthTooLarge(f"length {ell} exceeds cap {cap}")
    if k is not None and not 1 <= k <= ell + 1:
        raise BadRange(f"k={k} outside [1, {ell + 1}]")
    seq = [0]

    def rec(top: int):
        if len(seq) == ell + 1:
            if k is None or top + 1 == k:
                yield CombinatorialPath(tuple(seq))
            return
        remaining = ell + 1 - len(seq)
        if k is not None and top + 1 + remaining < k:
            return
        for v in range(top + 2):
            if v == seq[-1]:
                continue
            if k is not None and max(top, v) + 1 > k:
                continue
            seq.append(v)
            yield from rec(max(top, v))
            seq.pop()

    yield from rec(0)


def enumerate_paths(ell: int, k: int | None = None, cap: int = DEFAULT_CAP) -> list[CombinatorialPath]:
    return list(iter_paths(ell, k, cap))


def count_bound(ell: int, k: int) -> int:
    """binom(ell+1, k) * k**(ell+1-k)."""
    if not (1 <= k <= ell + 1):
        raise BadRange(f"need 1 <= k <= ell+1, got k={k}, ell={ell}")
    return math.comb(ell + 1, k) * k ** (ell + 1 - k)


def to_combinatorial(graph_path: Sequence) -> CombinatorialPath:
    """Relabel a vertex sequence by order of first visit."""
    label: dict = {}
    out = []
    prev = object()
    for v in graph_path:
        if v == prev:
            raise InvalidPath(f"consecutive repeat of {v!r}")
        prev = v
        if v not in label:
            label[v] = len(label)
        out.append(label[v])
    if not out:
        raise InvalidPath("empty path")
    return CombinatorialPath(tuple(out))


# ---------------------------------------------------------------------------
# Trees
# ---------------------------------------------------------------------------


@dataclass
class Tree:
    """Rooted tree with a distinguished leaf; vertex ids are arbitrary ints.

    Leaves are non-root vertices of degree one.
    """

    adj: dict[int, set[int]]
    root: int = 0
    m_star: int | None = None
    parity: dict[int, int] = field(default_factory=dict)
    next_id: int = 0

    def __post_init__(self):
        if not self.next_id:
            self.next_id = max(self.adj) + 1 if self.adj else 1
        if not self.parity:
            self.parity = {v: d % 2 for v, d in self.depths().items()}

    # structure -------------------------------------------------------------
    def copy(self) -> "Tree":
        return Tree({v: set(n) for v, n in self.adj.items()}, self.root, self.m_star, dict(self.parity), self.next_id)

    @property
    def k(self) -> int:
        return len(self.adj)

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {(min(a, b), max(a, b)) for a, ns in self.adj.items() for b in ns}

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def depths(self) -> dict[int, int]:
        d = {self.root: 0}
        stack = [self.root]
        while stack:
            v = stack.pop()
            for w in self.adj[v]:
                if w not in d:
                    d[w] = d[v] + 1
                    stack.append(w)
        return d

    def parents(self) -> dict[int, int | None]:
        p: dict[int, int | None] = {self.root: None}
        stack = [self.root]
        while stack:
            v = stack.pop()
            for w in self.adj[v]:
                if w not in p:
                    p[w] = v
                    stack.append(w)
        return p

    def children(self, v: int, parents=None) -> list[int]:
        parents = self.parents() if parents is None else parents
        return [w for w in self.adj[v] if parents.get(w) == v]

    def is_leaf(self, v: int) -> bool:
        return v != self.root and len(self.adj[v]) == 1

    def leaves(self) -> list[int]:
        return sorted(v for v in self.adj if self.is_leaf(v))

    def is_tree(self) -> bool:
        if len(self.edges) != self.k - 1:
            return False
        return len(self.depths()) == self.k

    def path_to(self, target: int) -> list[int]:
        p = self.parents()
        out = [target]
        while out[-1] != self.root:
            out.append(p[out[-1]])
        return out[::-1]

    def is_segment(self) -> bool:
        if self.m_star is None:
            return False
        return self.k == len(self.path_to(self.m_star)) and self.k in (2, 3)

    def parent_array(self) -> list[int]:
        """Parents indexed by sorted vertex id, -1 for the root."""
        p = self.parents()
        return [-1 if p[v] is None else p[v] for v in sorted(self.adj)]

    def dump(self) -> str:
        return " ".join(map(str, self.parent_array()))

    @classmethod
    def from_edges(cls, edges, root: int = 0, m_star: int | None = None, k: int | None = None) -> "Tree":
        adj: dict[int, set[int]] = {}
        if k is not None:
            adj = {i: set() for i in range(k)}
        for a, b in edges:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        adj.setdefault(root, set())
        t = cls(adj, root, m_star)
        if m_star is not None:
            t.check_m_star()
        return t

    @classmethod
    def from_parent_array(cls, parents: Sequence[int], m_star: int | None = None) -> "Tree":
        root = parents.index(-1)
        edges = [(i, p) for i, p in enumerate(parents) if p >= 0]
        return cls.from_edges(edges, root, m_star, k=len(parents))

    def check_m_star(self) -> None:
        m = self.m_star
        if m is None or m not in self.adj or m == self.root or not self.is_leaf(m):
            raise BadDistinguishedLeaf(f"{m!r} is not a non-root leaf")


def discovery_tree(path: CombinatorialPath, m_star: int | None = None) -> Tree:
    """Tree of first-visit jumps; ``m_star`` defaults to the path's last entry
    when that entry is a leaf."""
    if not isinstance(path, CombinatorialPath):
        path = CombinatorialPath(tuple(path))
    e = path.entries
    seen = {0}
    edges = []
    for a, b in zip(e, e[1:]):
        if b not in seen:
            seen.add(b)
            edges.append((a, b))
    t = Tree.from_edges(edges, 0, None, k=path.k)
    if m_star is None and len(e) > 1 and t.is_leaf(e[-1]):
        m_star = e[-1]
    if m_star is not None:
        t.m_star = m_star
        t.check_m_star()
    return t


# ---------------------------------------------------------------------------
# Mark integrals
# ---------------------------------------------------------------------------


def mark_integral(n: int, gamma: float, thr: float) -> float:
    """int_thr^1 x**(-gamma n) dx."""
    if n < 1:
        raise BadRange(f"n must be >= 1, got {n}")
    if not (0.0 < thr <= 1.0):
        raise BadThreshold(f"threshold must lie in (0,1], got {thr!r}")
    e = 1.0 - gamma * n
    if thr == 1.0:
        return 0.0
    if abs(e) < 1e-12:
        return -math.log(thr)
    # expm1 keeps the near-log branch accurate
    return -math.expm1(e * math.log(thr)) / e


def log_mark_integral(n: int, gamma: float, log_thr: float) -> float:
    """log of int_thr^1 x**(-gamma n) dx, given log(thr) <= 0."""
    if n < 1:
        raise BadRange(f"n must be >= 1, got {n}")
    if not log_thr <= 0.0:
        raise BadThreshold(f"log threshold must be <= 0, got {log_thr!r}")
    if log_thr == 0.0:
        return -math.inf
    e = 1.0 - gamma * n
    if abs(e) < 1e-12:
        return math.log(-log_thr)
    x = e * log_thr
    if e > 0:
        return math.log(-math.expm1(x)) - math.log(e)
    return x + math.log1p(-math.exp(-x)) - math.log(-e)


def red_integral(gamma: float, thr: float, n: int = 1) -> float:
    """int_0^thr x**(-gamma n) dx (finite only for gamma n < 1)."""
    e = 1.0 - gamma * n
    if e <= 0:
        return math.inf
    return thr**e / e


def script_u(n: int, gamma1: float, u1: float) -> float:
    return mark_integral(n, gamma1, u1)


def script_v(n: int, gamma2: float, u2: float) -> float:
    return mark_integral(n, gamma2, u2)


# ---------------------------------------------------------------------------
# Weight context and envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightContext:
    """Everything F needs: rates, thresholds and their formal scales."""

    gamma1: float
    gamma2: float
    a: float
    lam: float
    u1: float
    u2: float
    mu_star: float
    nu_star: float
    b: float
    log_u1: float
    log_u2: float

    @classmethod
    def from_params(cls, params: ModelParams, b: float | None = None, thresholds: tuple[float, float] | None = None) -> "WeightContext":
        """Numeric thresholds default to lambda^mu* log(1/lambda)^b (clamped
        at 1); ``thresholds`` replaces them without touching the scales."""
        s = validate_and_derive(params, b)
        if thresholds is None:
            ll = math.log(params.lam)
            lell = math.log(-ll)
            lu1 = min(0.0, s.mu_star * ll + s.b * lell)
            lu2 = min(0.0, s.nu_star * ll + s.b * lell)
        else:
            for t in thresholds:
                if not 0.0 < t <= 1.0:
                    raise BadThreshold(f"threshold must lie in (0,1], got {t!r}")
            lu1, lu2 = (math.log(t) for t in thresholds)
        return cls(params.gamma1, params.gamma2, params.a, params.lam, math.exp(lu1), math.exp(lu2), s.mu_star, s.nu_star, s.b, lu1, lu2)

    def log_thr(self, parity: int) -> float:
        return self.log_u1 if parity == 0 else self.log_u2

    def gamma(self, parity: int) -> float:
        return self.gamma1 if parity == 0 else self.gamma2

    def thr(self, parity: int) -> float:
        return self.u1 if parity == 0 else self.u2

    def rate(self, parity: int) -> float:
        return self.lam if parity == 0 else self.lam**self.a

    def rate_exp(self, parity: int) -> float:
        return 1.0 if parity == 0 else self.a

    def thr_scale(self, parity: int) -> AsymptoticScale:
        return AsymptoticScale(self.mu_star if parity == 0 else self.nu_star, self.b)


SLACK_RULES = ("uniform", "exact")


def integral_envelope(n: int, parity: int, ctx: WeightContext, side: str, slack_rule: str = "uniform") -> AsymptoticScale:
    """Formal envelope of the n-th mark integral of the given parity.

    The shape is thr**((1 - gamma n) ^ 0).  The upper side adds one power
    of log(1/lambda): always under ``'uniform'``, and only on the
    logarithmic branch gamma n = 1 under ``'exact'``.
    """
    e = min(1.0 - ctx.gamma(parity) * n, 0.0)
    base = ctx.thr_scale(parity) ** e
    if side == "lower":
        return base
    log_branch = abs(1.0 - ctx.gamma(parity) * n) <= EXACT_TOL
    if slack_rule == "uniform" or log_branch:
        return base * AsymptoticScale.log(1.0)
    return base


# ---------------------------------------------------------------------------
# Tree weight
# ---------------------------------------------------------------------------

ROOT_RULES = ("children", "literal")


def vertex_exponent(tree: Tree, v: int, root_rule: str = "children") -> int:
    d = tree.degree(v)
    if v == tree.root and root_rule == "children":
        return d
    return max(d - 1, 1)


def _factor_log(tree: Tree, v: int, ctx: WeightContext, root_rule: str) -> float:
    par = tree.parity[v]
    e = vertex_exponent(tree, v, root_rule)
    log_integ = log_mark_integral(tree.degree(v), ctx.gamma(par), ctx.log_thr(par))
    return e * (math.log(2.0) + ctx.rate_exp(par) * math.log(ctx.lam)) + log_integ


def _factor_scale(tree: Tree, v: int, ctx: WeightContext, root_rule: str, side: str, slack_rule: str) -> AsymptoticScale:
    par = tree.parity[v]
    e = vertex_exponent(tree, v, root_rule)
    lam_part = AsymptoticScale.lam(e * ctx.rate_exp(par))
    return lam_part * integral_envelope(tree.degree(v), par, ctx, side, slack_rule)


@dataclass(frozen=True)
class WeightValue:
    log_value: float
    upper: AsymptoticScale
    lower: AsymptoticScale


def _weight_vertices(tree: Tree) -> list[int]:
    tree.check_m_star()
    return [v for v in tree.adj if v != tree.m_star]


def tree_weight(tree: Tree, ctx: WeightContext, root_rule: str = "children", slack_rule: str = "uniform") -> WeightValue:
    """log F together with upper and lower formal envelopes.

    Vertices of even depth contribute (2 lambda)^e U_deg and odd ones
    (2 lambda^a)^e V_deg, where e = (deg - 1) v 1, except that the root
    uses e = deg under ``root_rule='children'`` (the number of times any
    path must leave it).
    """
    vs = _weight_vertices(tree)
    logv = sum(_factor_log(tree, v, ctx, root_rule) for v in vs)
    up = lo = AsymptoticScale(0.0, 0.0)
    for v in vs:
        up = up * _factor_scale(tree, v, ctx, root_rule, "upper", slack_rule)
        lo = lo * _factor_scale(tree, v, ctx, root_rule, "lower", slack_rule)
    return WeightValue(logv, up, lo)


def tree_weight_F(tree: Tree, ctx: WeightContext, mode: str = "numeric", root_rule: str = "children", slack_rule: str = "uniform"):
    w = tree_weight(tree, ctx, root_rule, slack_rule)
    if mode == "numeric":
        return w.log_value
    if mode == "asymptotic":
        return w.upper
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------

OPS = ("Op1", "Op2", "Op3")


def _require(cond: bool, clause: str) -> None:
    if not cond:
        raise PreconditionViolated(clause)


def apply_reduction(tree: Tree, op: str, site: Sequence[int]) -> Tree:
    """Return a new tree with ``op`` applied at ``site``.

    Op1 (x, y): y a leaf child of x and not its only child; remove y.
    Op2 (x, y, z): z a leaf and the only child of y; y a child of x and not
    its only child; remove y and z.
    Op3 (x, y, z): x ~ y ~ z, x and z not leaves, N(y) = {x, z}; remove y
    and merge x and z.  The merged vertex keeps the root's id when x or z
    is the root and receives a fresh id otherwise.
    """
    t = tree.copy()
    names = list(site)
    for v in names:
        _require(v in t.adj, f"{v} is not a vertex")
        _require(v != t.m_star, f"{v} is the distinguished leaf")
    par = t.parents()
    if op == "Op1":
        _require(len(names) == 2, "Op1 takes (x, y)")
        x, y = names
        _require(par.get(y) == x, "y is a child of x")
        _require(t.is_leaf(y), "y is a leaf")
        _require(len(t.children(x, par)) >= 2, "y is not the only child of x")
        t.adj[x].discard(y)
        del t.adj[y]
        del t.parity[y]
        return t
    if op == "Op2":
        _require(len(names) == 3, "Op2 takes (x, y, z)")
        x, y, z = names
        _require(t.is_leaf(z), "z is a leaf")
        _require(par.get(z) == y and t.children(y, par) == [z], "z is the only child of y")
        _require(par.get(y) == x, "y is a child of x")
        _require(len(t.children(x, par)) >= 2, "y is not the only child of x")
        t.adj[x].discard(y)
        for v in (y, z):
            del t.adj[v]
            del t.parity[v]
        return t
    if op == "Op3":
        _require(len(names) == 3, "Op3 takes (x, y, z)")
        x, y, z = names
        _require(len({x, y, z}) == 3, "x, y, z distinct")
        _require(t.adj[y] == {x, z}, "x and z are the only neighbours of y")
        _require(not t.is_leaf(x) and not t.is_leaf(z), "x and z are not leaves")
        nbrs = (t.adj[x] | t.adj[z]) - {x, y, z}
        parity = t.parity[x]
        if t.root in (x, z):
            w = t.root
        else:
            w = t.next_id
            t.next_id += 1
        for v in (x, y, z):
            for n in t.adj[v]:
                if n in t.adj and n not in (x, y, z):
                    t.adj[n].discard(v)
            del t.adj[v]
            del t.parity[v]
        t.adj[w] = set(nbrs)
        t.parity[w] = parity
        for n in nbrs:
            t.adj[n].add(w)
        return t
    raise ValueError(f"unknown operation {op!r}")


def next_reduction(tree: Tree) -> tuple[str, tuple[int, ...]] | None:
    """The greedy reducer's next move, or None once a segment is reached."""
    if tree.is_segment():
        return None
    par = tree.parents()
    spine = tree.path_to(tree.m_star)
    on_spine = set(spine)
    depth = tree.depths()
    hanging = [v for v in tree.adj if v not in on_spine and tree.is_leaf(v)]
    if hanging:
        y = max(hanging, key=lambda v: (depth[v], v))
        x = par[y]
        if len(tree.children(x, par)) >= 2:
            return "Op1", (x, y)
        p = par[x]
        if len(tree.children(p, par)) >= 2:
            return "Op2", (p, x, y)
        return "Op3", (par[p], p, x)
    if len(spine) >= 4:
        return "Op3", (spine[0], spine[1], spine[2])
    return None


@dataclass
class ReductionStep:
    op: str
    site: tuple[int, ...]
    k_before: int
    k_after: int
    log_ratio: float  # log F(T) - log F(T')
    ratio_upper: AsymptoticScale  # upper envelope of F(T) / F(T') on changed factors
    target: AsymptoticScale  # log(1/lambda)^-16
    scale_ok: bool
    incremental_log_f: float
    recomputed_log_f: float


def _changed(tree: Tree, new: Tree) -> tuple[list[int], list[int]]:
    """Vertices whose factor differs between ``tree`` and ``new``."""
    old_f = [v for v in tree.adj if v != tree.m_star]
    new_f = [v for v in new.adj if v != new.m_star]
    gone = [v for v in old_f if v not in new.adj or new.degree(v) != tree.degree(v) or (v == tree.root) != (v == new.root)]
    born = [v for v in new_f if v not in tree.adj or new.degree(v) != tree.degree(v) or (v == tree.root) != (v == new.root)]
    return gone, born


def reduce_to_segment(tree: Tree, ctx: WeightContext | None = None, root_rule: str = "children", slack_rule: str = "exact", max_ops: int = 10_000) -> tuple[Tree, list[ReductionStep]]:
    """Greedy reduction to the segment o-m* or o-w-m*.

    With a weight context each step also records the weight ratio, checks
    it against log(1/lambda)^-16 in formal scale algebra and maintains log F
    incrementally alongside a from-scratch recomputation.
    """
    tree.check_m_star()
    cur = tree.copy()
    log_f = tree_weight(cur, ctx, root_rule, slack_rule).log_value if ctx else math.nan
    steps: list[ReductionStep] = []
    target = AsymptoticScale.log(-16.0)
    for _ in range(max_ops):
        mv = next_reduction(cur)
        if mv is None:
            break
        op, site = mv
        new = apply_reduction(cur, op, site)
        if ctx is not None:
            gone, born = _changed(cur, new)
            d_log = sum(_factor_log(cur, v, ctx, root_rule) for v in gone) - sum(
                _factor_log(new, v, ctx, root_rule) for v in born
            )
            up = AsymptoticScale(0.0, 0.0)
            for v in gone:
                up = up * _factor_scale(cur, v, ctx, root_rule, "upper", slack_rule)
            for v in born:
                up = up / _factor_scale(new, v, ctx, root_rule, "lower", slack_rule)
            log_f -= d_log
            recomputed = tree_weight(new, ctx, root_rule, slack_rule).log_value
            steps.append(ReductionStep(op, tuple(site), cur.k, new.k, d_log, up, target, scale_le(up, target), log_f, recomputed))
        else:
            steps.append(ReductionStep(op, tuple(site), cur.k, new.k, math.nan, AsymptoticScale(0, 0), target, True, math.nan, math.nan))
        cur = new
    else:
        raise StuckTree("operation budget exhausted")
    if not cur.is_segment():
        raise StuckTree(f"no operation applies to tree with {cur.k} vertices")
    return cur, steps


def random_tree(k: int, rng: np.random.Generator) -> Tree:
    """Random recursive tree on k >= 2 vertices rooted at 0, with a random
    non-root leaf as m*."""
    if k < 2:
        raise BadRange("need k >= 2")
    edges = [(int(rng.integers(0, i)), i) for i in range(1, k)]
    t = Tree.from_edges(edges, 0, None, k=k)
    leaves = t.leaves()
    t.m_star = int(leaves[int(rng.integers(0, len(leaves)))])
    return t


# ---------------------------------------------------------------------------
# Mecke expectations and realised counts
# ---------------------------------------------------------------------------


def mecke_expected_count(path: CombinatorialPath, colouring: str, gamma1: float, gamma2: float, u1: float, u2: float) -> float:
    """Expected number of root-started paths with this combinatorial path.

    Exact when every step of the path runs along a discovery-tree edge
    (always the case for length <= 2); otherwise an upper bound.  Each tree
    edge contributes the two-sided factor 2.
    """
    if not isinstance(path, CombinatorialPath):
        path = CombinatorialPath(tuple(path))
    if colouring not in COLOURINGS:
        raise ValueError(f"unknown colouring {colouring!r}")
    tree = discovery_tree(path, m_star=None)
    tree.m_star = None
    gam = (gamma1, gamma2)
    thr = (u1, u2)
    last = path.entries[-1]
    if colouring == RED_LAST and not path.last_is_first_visit():
        raise InvalidColouringForPath("the last entry must be a first visit for a red endpoint")
    out = 2.0 ** (tree.k - 1)
    for v in tree.adj:
        par = tree.parity[v]
        deg = tree.degree(v)
        if colouring == RED_LAST and v == last:
            out *= red_integral(gam[par], thr[par], deg)
        else:
            out *= mark_integral(deg, gam[par], thr[par]) if deg > 0 else (1.0 - thr[par])
    return out


def mecke_truncation_bound(path: CombinatorialPath, colouring: str, gamma1: float, gamma2: float, u1: float, u2: float, L: float) -> float:
    """Upper bound on the fraction of the infinite-line expectation lost by
    restricting points to [-L, L].

    Blue vertices reach at most r = u1^-gamma1 u2^-gamma2, so an all-blue
    path stays within length * r of the origin.  A red endpoint of mark w is
    lost only if its reach from a blue neighbour exceeds L - (length-1) r,
    which needs w below a cutoff w_c; the lost share of its mark integral is
    then at most (w_c / thr)^(1 - gamma n).
    """
    if not isinstance(path, CombinatorialPath):
        path = CombinatorialPath(tuple(path))
    ell = path.length
    r = u1**-gamma1 * u2**-gamma2
    if colouring == ALL_BLUE:
        return 0.0 if L >= ell * r else 1.0
    if colouring != RED_LAST:
        raise ValueError(f"unknown colouring {colouring!r}")
    if not path.last_is_first_visit():
        raise InvalidColouringForPath("the last entry must be a first visit for a red endpoint")
    room = L - (ell - 1) * r
    if room <= 0:
        return 1.0
    tree = discovery_tree(path, m_star=None)
    last = path.entries[-1]
    par = tree.parity[last]
    n = tree.degree(last)
    g_w, thr_w = (gamma1, u1) if par == 0 else (gamma2, u2)
    g_p, thr_p = (gamma2, u2) if par == 0 else (gamma1, u1)
    # reach(p, w) <= thr_p^-g_p w^-g_w, so w >= w_c keeps every neighbour inside
    w_c = (room * thr_p**g_p) ** (-1.0 / g_w)
    if w_c >= thr_w:
        return 1.0
    return (w_c / thr_w) ** (1.0 - g_w * n)


def mecke_window(paths, gamma1: float, gamma2: float, u1: float, u2: float, budget: float = 0.01) -> float:
    """Smallest power-of-two multiple of the blue reach whose truncation
    bound is below ``budget`` for every (path, colouring) pair given."""
    r = u1**-gamma1 * u2**-gamma2
    L = r
    while max(mecke_truncation_bound(p, c, gamma1, gamma2, u1, u2, L) for p, c in paths) >= budget:
        L *= 2.0
        if L > 1e12:
            raise BadRange("no window meets the truncation budget")
    return L


def count_realized_paths(graph: GraphBase, path: CombinatorialPath, colouring: str, blue: np.ndarray, cap: int = DEFAULT_CAP) -> int:
    """Number of root-started vertex paths realising ``path`` under ``colouring``."""
    if not isinstance(path, CombinatorialPath):
        path = CombinatorialPath(tuple(path))
    if path.length > cap:
        raise LengthTooLarge(f"length {path.length} exceeds cap {cap}")
    if colouring not in COLOURINGS:
        raise ValueError(f"unknown colouring {colouring!r}")
    if colouring == RED_LAST and not path.last_is_first_visit():
        raise InvalidColouringForPath("the last entry must be a first visit for a red endpoint")
    root = graph.root_id
    if root is None:
        return 0
    e = path.entries
    ell = len(e) - 1

    def ok(v: int, pos: int) -> bool:
        want_blue = not (colouring == RED_LAST and pos == ell)
        return bool(blue[v]) == want_blue

    if not ok(root, 0):
        return 0
    assign = {0: root}
    used = {root}

    def rec(pos: int) -> int:
        if pos == ell:
            return 1
        cur = assign[e[pos]]
        nxt = e[pos + 1]
        total = 0
        if nxt in assign:
            w = assign[nxt]
            nb = graph.neighbors(cur)
            i = np.searchsorted(nb, w)
            if i < len(nb) and nb[i] == w and ok(w, pos + 1):
                total += rec(pos + 1)
            return total
        for w in graph.neighbors(cur).tolist():
            if w in used or not ok(w, pos + 1):
                continue
            assign[nxt] = w
            used.add(w)
            total += rec(pos + 1)
            used.discard(w)
            del assign[nxt]
        return total

    return rec(0)


# ---------------------------------------------------------------------------
# M factor and path-class bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MFactor:
    value: float
    constant: float
    scale: AsymptoticScale


def m_factor(lam: float, a: float, k: int, ell: int) -> MFactor:
    """binom(ell+1,k) k^(ell+1-k) (2 lam^(a^1))^((ell-2k) v 0) log(1/lam)^(-16 floor((k-3)/2))."""
    if k < 2 or ell < k - 1:
        raise BadRange(f"need k >= 2 and ell >= k-1, got k={k}, ell={ell}")
    e = max(ell - 2 * k, 0)
    q = -16 * ((k - 3) // 2)
    const = float(count_bound(ell, k)) * 2.0**e
    scale = AsymptoticScale(min(a, 1.0) * e, float(q))
    value = float(count_bound(ell, k)) * (2.0 * lam ** min(a, 1.0)) ** e * math.log(1.0 / lam) ** q
    return MFactor(value, const, scale)


@dataclass(frozen=True)
class SumBoundCheck:
    total: float
    bound: int
    passed: bool
    terms: int
    regime_ok: bool  # 2 k^2 lam^(a^1) <= 1/2


def sum_bound_check(k: int, lam: float, a: float, rel_cut: float = 1e-300) -> SumBoundCheck:
    """Truncated sum over ell >= k-1 of binom(ell+1,k) k^(ell+1-k) (2 lam^(a^1))^((ell-2k) v 0)."""
    if k < 3:
        raise BadRange(f"need k >= 3, got {k}")
    x = 2.0 * lam ** min(a, 1.0)
    total = 0.0
    ell = k - 1
    n = 0
    while True:
        e = max(ell - 2 * k, 0)
        log_term = (
            math.log(math.comb(ell + 1, k)) + (ell + 1 - k) * math.log(k) + e * math.log(x)
        )
        term = math.exp(log_term)
        total += term
        n += 1
        if ell > 2 * k and term < rel_cut * total:
            break
        if n > 1_000_000:
            break
        ell += 1
    bound = (4 * k) ** (3 * k)
    return SumBoundCheck(total, bound, total <= bound, n, 2 * k * k * lam ** min(a, 1.0) <= 0.5)


def path_class_bound(k: int, ell: int, variant: str, ctx_or_exponents, a: float | None = None, lam: float = 0.5) -> tuple[AsymptoticScale, float]:
    """C-free bound on P(k, ell) or Q(k, ell) as (scale, constant).

    ``ctx_or_exponents`` is a WeightContext or a tuple
    (gamma1, gamma2, a, mu_star, nu_star).
    """
    if isinstance(ctx_or_exponents, WeightContext):
        c = ctx_or_exponents
        g1, g2, a, mu, nu = c.gamma1, c.gamma2, c.a, c.mu_star, c.nu_star
    else:
        g1, g2, a, mu, nu = ctx_or_exponents
    mf = m_factor(lam, a, k, ell)
    d2 = max(2 * g2 - 1, 0.0)
    even = ell % 2 == 0
    if variant == "P":
        p = 1 + a - d2 * nu + (1 - g1) * mu if even else 1 + (1 - g2) * nu
    elif variant == "Q":
        p = 1 + a if even else 1.0
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return mf.scale * AsymptoticScale.lam(p), mf.constant
