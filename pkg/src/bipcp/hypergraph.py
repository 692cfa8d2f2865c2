"""Bipartite random connection graph on a finite window.

Type-1 and type-2 vertices are unit-intensity Poisson points on
``[-L, L] x (0, 1]``; a type-1 vertex (x, u) and a type-2 vertex (y, v) are
adjacent iff ``|x - y| <= u**-gamma1 * v**-gamma2``.

Vertex ids are dense integers.  When a root is present it has id 0; the
remaining vertices follow, type 1 first, each block sorted by position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import (
    BadBand,
    BadRootSpec,
    InsufficientData,
    SameTypePair,
    UnknownId,
    WindowTooSmall,
)
from .phase import ModelParams, validate_and_derive
from .rng import graph_rng

N_LAYERS = 64


@dataclass(frozen=True)
class Vertex:
    id: int
    vtype: int
    position: float
    mark: float


@dataclass(frozen=True)
class Window:
    L: float

    def __post_init__(self):
        if not (self.L > 0) or not math.isfinite(self.L):
            raise WindowTooSmall(f"window half-length must be positive, got {self.L!r}")


@dataclass(frozen=True)
class RootSpec:
    """``kind`` is one of 'none', 'uniform', 'fixed'."""

    kind: str = "uniform"
    mark: float | None = None
    vtype: int = 1

    def __post_init__(self):
        if self.kind not in ("none", "uniform", "fixed"):
            raise BadRootSpec(f"unknown root kind {self.kind!r}")
        if self.vtype not in (1, 2):
            raise BadRootSpec(f"root type must be 1 or 2, got {self.vtype!r}")
        if self.kind == "fixed":
            if self.mark is None or not (0.0 < self.mark <= 1.0):
                raise BadRootSpec(f"fixed root mark must lie in (0,1], got {self.mark!r}")

    @classmethod
    def none(cls) -> "RootSpec":
        return cls("none")

    @classmethod
    def uniform(cls, vtype: int = 1) -> "RootSpec":
        return cls("uniform", None, vtype)

    @classmethod
    def fixed(cls, mark: float, vtype: int = 1) -> "RootSpec":
        return cls("fixed", mark, vtype)


def reach(u, v, gamma1: float, gamma2: float):
    """Connection radius between a type-1 mark u and a type-2 mark v.

    Overflow to ``inf`` is harmless: it only ever compares against finite
    distances.
    """
    with np.errstate(over="ignore"):
        return np.power(u, -gamma1) * np.power(v, -gamma2)


def edge_exists(v1: Vertex, v2: Vertex, gamma1: float, gamma2: float) -> bool:
    """Exact edge rule; symmetric in argument order."""
    if v1.vtype == v2.vtype:
        raise SameTypePair(f"vertices {v1.id} and {v2.id} are both of type {v1.vtype}")
    if v1.vtype == 2:
        v1, v2 = v2, v1
    return bool(abs(v1.position - v2.position) <= reach(v1.mark, v2.mark, gamma1, gamma2))


class _LayerIndex:
    """Vertices of one type bucketed into dyadic mark layers (2^-j-1, 2^-j].

    All layers live in one array sorted by the composite key
    ``layer * stride + (position + L)`` so that a single ``searchsorted``
    call answers every layer at once.
    """

    def __init__(self, ids: np.ndarray, pos: np.ndarray, mark: np.ndarray, L: float):
        self.L = L
        self.stride = 2.0 * L + 2.0
        with np.errstate(divide="ignore"):
            layer = np.floor(-np.log2(mark)).astype(np.int64) if len(mark) else np.zeros(0, np.int64)
        layer = np.clip(layer, 0, N_LAYERS - 1)
        key = layer * self.stride + (pos + L)
        order = np.lexsort((pos, layer))
        self.ids = ids[order]
        self.pos = pos[order]
        self.mark = mark[order]
        self.key = key[order]
        self.layers = np.unique(layer)
        starts = np.searchsorted(layer[order], self.layers, side="left")
        ends = np.searchsorted(layer[order], self.layers, side="right")
        self.starts, self.ends = starts, ends
        # smallest mark per layer gives the largest possible reach into it
        self.min_mark = (
            np.minimum.reduceat(self.mark, starts) if len(starts) else np.zeros(0)
        )

    def candidates(self, x: float, base_reach: float, gamma_other: float) -> np.ndarray:
        """Positions in the sorted arrays that may lie within reach of (x, .)."""
        if len(self.layers) == 0:
            return np.zeros(0, np.int64)
        with np.errstate(over="ignore"):
            r = base_reach * np.power(self.min_mark, -gamma_other)
        lo_off = np.clip(x - r + self.L, 0.0, 2.0 * self.L)
        hi_off = np.clip(x + r + self.L, 0.0, 2.0 * self.L)
        base = self.layers * self.stride
        # slack of a few ulps of the key; the exact rule filters afterwards
        eps = 1e-9 * (self.stride * N_LAYERS)
        lo = np.searchsorted(self.key, base + lo_off - eps, side="left")
        hi = np.searchsorted(self.key, base + hi_off + eps, side="right")
        lo = np.maximum(lo, self.starts)
        hi = np.minimum(hi, self.ends)
        counts = np.maximum(hi - lo, 0)
        total = int(counts.sum())
        if total == 0:
            return np.zeros(0, np.int64)
        starts = np.repeat(lo - np.cumsum(counts) + counts, counts)
        return starts + np.arange(total)


class GraphBase:
    """Read-only interface shared by sampled and hand-built graphs."""

    vtypes: np.ndarray
    root_id: int | None

    @property
    def n(self) -> int:
        return len(self.vtypes)

    def check_id(self, vid: int) -> int:
        vid = int(vid)
        if not 0 <= vid < self.n:
            raise UnknownId(vid)
        return vid

    def vtype(self, vid: int) -> int:
        return int(self.vtypes[self.check_id(vid)])

    def neighbors(self, vid: int) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def degree(self, vid: int) -> int:
        return len(self.neighbors(vid))

    def adjacency(self) -> sparse.csr_matrix:  # pragma: no cover - abstract
        raise NotImplementedError


class StaticGraph(GraphBase):
    """Explicit small graph (stars, paths, test fixtures)."""

    def __init__(self, vtypes: Sequence[int], edges: Iterable[tuple[int, int]], root_id: int | None = 0, enforce_bipartite: bool = True):
        self.vtypes = np.asarray(vtypes, dtype=np.int8)
        self.root_id = root_id
        nbrs: list[set[int]] = [set() for _ in range(len(self.vtypes))]
        for a, b in edges:
            a, b = self.check_id(a), self.check_id(b)
            if a == b:
                raise ValueError("self-loops are not allowed")
            if enforce_bipartite and self.vtypes[a] == self.vtypes[b]:
                raise SameTypePair(f"edge {a}-{b} joins two vertices of type {self.vtypes[a]}")
            nbrs[a].add(b)
            nbrs[b].add(a)
        self._nbrs = [np.array(sorted(s), dtype=np.int64) for s in nbrs]

    def neighbors(self, vid: int) -> np.ndarray:
        return self._nbrs[self.check_id(vid)]

    def adjacency(self) -> sparse.csr_matrix:
        rows = np.repeat(np.arange(self.n), [len(x) for x in self._nbrs])
        cols = np.concatenate(self._nbrs) if self.n else np.zeros(0, np.int64)
        return sparse.csr_matrix((np.ones(len(rows), np.int8), (rows, cols)), shape=(self.n, self.n))

    @classmethod
    def star(cls, n_leaves: int, centre_type: int = 1) -> "StaticGraph":
        leaf = 3 - centre_type
        return cls([centre_type] + [leaf] * n_leaves, [(0, i) for i in range(1, n_leaves + 1)])

    @classmethod
    def cube(cls) -> "StaticGraph":
        """The 3-cube: 8 vertices, types by bit parity, vertex 0 of type 1."""
        types = [1 + bin(i).count("1") % 2 for i in range(8)]
        edges = [(i, i ^ (1 << b)) for i in range(8) for b in range(3) if i < i ^ (1 << b)]
        return cls(types, edges)

    @classmethod
    def path(cls, k: int, first_type: int = 1) -> "StaticGraph":
        types = [first_type if i % 2 == 0 else 3 - first_type for i in range(k)]
        return cls(types, [(i, i + 1) for i in range(k - 1)])


class Hypergraph(GraphBase):
    """A sampled instance; construct through :func:`sample`."""

    def __init__(self, params: ModelParams, window: Window, seed: int, vtypes, pos, mark, root_id, variant: str = ""):
        self.params = params
        self.window = window
        self.seed = seed
        self.variant = variant
        self.vtypes = np.asarray(vtypes, dtype=np.int8)
        self.pos = np.asarray(pos, dtype=np.float64)
        self.mark = np.asarray(mark, dtype=np.float64)
        self.root_id = root_id
        for arr in (self.vtypes, self.pos, self.mark):
            arr.setflags(write=False)
        ids = np.arange(self.n, dtype=np.int64)
        self._index = {
            t: _LayerIndex(ids[self.vtypes == t], self.pos[self.vtypes == t], self.mark[self.vtypes == t], window.L)
            for t in (1, 2)
        }
        self._cache: dict[int, np.ndarray] = {}
        self._adj: sparse.csr_matrix | None = None

    @property
    def gamma(self) -> tuple[float, float]:
        return self.params.gamma1, self.params.gamma2

    def vertex(self, vid: int) -> Vertex:
        vid = self.check_id(vid)
        return Vertex(vid, int(self.vtypes[vid]), float(self.pos[vid]), float(self.mark[vid]))

    def vertices(self) -> list[Vertex]:
        return [self.vertex(i) for i in range(self.n)]

    def count(self, vtype: int, include_root: bool = False) -> int:
        c = int(np.count_nonzero(self.vtypes == vtype))
        if not include_root and self.root_id is not None and self.vtypes[self.root_id] == vtype:
            c -= 1
        return c

    def edge(self, a: int, b: int) -> bool:
        return edge_exists(self.vertex(a), self.vertex(b), *self.gamma)

    def neighbors(self, vid: int) -> np.ndarray:
        """Sorted neighbor ids (cached after the first query)."""
        vid = self.check_id(vid)
        hit = self._cache.get(vid)
        if hit is not None:
            return hit
        if self._adj is not None:
            out = self._adj.indices[self._adj.indptr[vid]:self._adj.indptr[vid + 1]]
        else:
            out = self._query(vid)
        self._cache[vid] = out
        return out

    def _query(self, vid: int) -> np.ndarray:
        g1, g2 = self.gamma
        t = int(self.vtypes[vid])
        x, m = self.pos[vid], self.mark[vid]
        other = self._index[3 - t]
        g_self, g_other = (g1, g2) if t == 1 else (g2, g1)
        with np.errstate(over="ignore"):
            base = np.power(m, -g_self)
        cand = other.candidates(x, base, g_other)
        if len(cand) == 0:
            return np.zeros(0, np.int64)
        if t == 1:
            r = reach(m, other.mark[cand], g1, g2)
        else:
            r = reach(other.mark[cand], m, g1, g2)
        keep = np.abs(other.pos[cand] - x) <= r
        out = np.sort(other.ids[cand[keep]])
        out.setflags(write=False)
        return out

    def adjacency(self) -> sparse.csr_matrix:
        """Full symmetric adjacency, built with one vectorised pass per layer."""
        if self._adj is not None:
            return self._adj
        g1, g2 = self.gamma
        q = np.flatnonzero(self.vtypes == 1)
        xq, uq = self.pos[q], self.mark[q]
        with np.errstate(over="ignore"):
            base = np.power(uq, -g1)
        idx = self._index[2]
        rows, cols = [], []
        L = self.window.L
        for li, (s, e) in enumerate(zip(idx.starts, idx.ends)):
            pos_l = idx.pos[s:e]
            with np.errstate(over="ignore"):
                r = base * np.power(idx.min_mark[li], -g2)
            lo = np.searchsorted(pos_l, np.clip(xq - r, -L - 1, L + 1), side="left")
            hi = np.searchsorted(pos_l, np.clip(xq + r, -L - 1, L + 1), side="right")
            counts = hi - lo
            # chunk to bound memory
            chunk_rows = np.cumsum(counts)
            start = 0
            limit = 20_000_000
            while start < len(q):
                stop = int(np.searchsorted(chunk_rows, (chunk_rows[start - 1] if start else 0) + limit, side="right"))
                stop = max(stop, start + 1)
                c = counts[start:stop]
                tot = int(c.sum())
                if tot:
                    qi = np.repeat(np.arange(start, stop), c)
                    off = np.repeat(lo[start:stop] - np.cumsum(c) + c, c) + np.arange(tot)
                    ok = np.abs(pos_l[off] - xq[qi]) <= reach(uq[qi], idx.mark[s:e][off], g1, g2)
                    rows.append(q[qi[ok]])
                    cols.append(idx.ids[s:e][off[ok]])
                start = stop
        r_ = np.concatenate(rows) if rows else np.zeros(0, np.int64)
        c_ = np.concatenate(cols) if cols else np.zeros(0, np.int64)
        data = np.ones(2 * len(r_), dtype=np.int8)
        adj = sparse.csr_matrix(
            (data, (np.concatenate([r_, c_]), np.concatenate([c_, r_]))), shape=(self.n, self.n)
        )
        adj.sort_indices()
        self._adj = adj
        return adj

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency().indptr)

    def dump(self) -> str:
        return dump_graph(self)


def all_pairs_adjacency(graph: Hypergraph) -> list[np.ndarray]:
    """O(n^2) reference neighbor lists straight from the edge rule."""
    g1, g2 = graph.gamma
    t1 = np.flatnonzero(graph.vtypes == 1)
    t2 = np.flatnonzero(graph.vtypes == 2)
    out = [np.zeros(0, np.int64) for _ in range(graph.n)]
    if len(t1) == 0 or len(t2) == 0:
        return out
    d = np.abs(graph.pos[t1][:, None] - graph.pos[t2][None, :])
    r = reach(graph.mark[t1][:, None], graph.mark[t2][None, :], g1, g2)
    m = d <= r
    for i, vid in enumerate(t1):
        out[vid] = np.sort(t2[m[i]])
    for j, vid in enumerate(t2):
        out[vid] = np.sort(t1[m[:, j]])
    return out


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _uniform_marks(rng: np.random.Generator, n: int) -> np.ndarray:
    return 1.0 - rng.random(n)  # (0, 1]


def _root_mark(rng: np.random.Generator, root: RootSpec) -> float:
    return float(root.mark) if root.kind == "fixed" else float(_uniform_marks(rng, 1)[0])


def _assemble(params, window, seed, parts, root: RootSpec | None, root_mark: float | None, variant=""):
    vt, ps, mk = [], [], []
    root_id = None
    if root is not None and root.kind != "none":
        vt.append(np.array([root.vtype]))
        ps.append(np.array([0.0]))
        mk.append(np.array([root_mark]))
        root_id = 0
    for t, (pos, mark) in zip((1, 2), parts):
        o = np.argsort(pos, kind="stable")
        vt.append(np.full(len(pos), t))
        ps.append(pos[o])
        mk.append(mark[o])
    return Hypergraph(params, window, seed, np.concatenate(vt), np.concatenate(ps), np.concatenate(mk), root_id, variant)


def sample(params: ModelParams, window: Window | float, seed: int, root: RootSpec | None = None) -> Hypergraph:
    """Sample the graph on ``[-L, L]``; fully determined by ``seed``."""
    if not isinstance(window, Window):
        window = Window(float(window))
    root = root if root is not None else RootSpec.uniform()
    rng = graph_rng(seed)
    L = window.L
    parts = []
    for _ in (1, 2):
        n = rng.poisson(2.0 * L)
        parts.append((rng.uniform(-L, L, n), _uniform_marks(rng, n)))
    rm = _root_mark(rng, root) if root.kind != "none" else None
    return _assemble(params, window, seed, parts, root, rm)


def sample_restricted(params: ModelParams, window: Window | float, seed: int, variant: str, h: float) -> Hypergraph:
    """Half-line variants with an emptied mark band around the root.

    ``G1plus``: type-1 root at (0, h), h in [u0, 2 u0]; all vertices left of
    0 removed; non-root type-1 vertices with mark in [u0, 2 u0] removed.
    ``G2plus`` is the same with the types exchanged and v0 in place of u0.
    """
    if not isinstance(window, Window):
        window = Window(float(window))
    if variant not in ("G1plus", "G2plus"):
        raise BadRootSpec(f"unknown variant {variant!r}")
    sc = validate_and_derive(params)
    t = 1 if variant == "G1plus" else 2
    lo = sc.u0 if t == 1 else sc.v0
    if not (lo <= h <= 2.0 * lo) or not (0.0 < h <= 1.0):
        raise BadBand(f"h={h!r} outside [{lo!r}, {2 * lo!r}]")
    rng = graph_rng(seed)
    L = window.L
    parts = []
    for tt in (1, 2):
        n = rng.poisson(L)
        pos, mark = rng.uniform(0.0, L, n), _uniform_marks(rng, n)
        if tt == t:
            keep = (mark < lo) | (mark > 2.0 * lo)
            pos, mark = pos[keep], mark[keep]
        parts.append((pos, mark))
    return _assemble(params, window, seed, parts, RootSpec.fixed(h, t), h, variant)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailStats:
    m: np.ndarray
    tail: np.ndarray
    slope: float
    intercept: float
    stderr: float
    n_vertices: int


def degree_tail_stats(samples, vtype: int = 1, m_range: tuple[float, float] = (20.0, 1000.0), n_points: int = 15, min_vertices: int = 1000) -> TailStats:
    """Log-log regression of the empirical tail P(deg > m) over ``m_range``.

    ``samples`` is an iterable of graphs or of plain degree arrays.
    """
    pooled = []
    for s in samples:
        if isinstance(s, GraphBase):
            deg = s.degrees() if isinstance(s, Hypergraph) else np.array([s.degree(i) for i in range(s.n)])
            mask = s.vtypes == vtype
            if s.root_id is not None:
                mask[s.root_id] = False
            pooled.append(deg[mask])
        else:
            pooled.append(np.asarray(s))
    deg = np.concatenate(pooled) if pooled else np.zeros(0)
    if len(deg) < min_vertices:
        raise InsufficientData(f"{len(deg)} vertices pooled, need {min_vertices}")
    srt = np.sort(deg)
    ms = np.unique(np.round(np.geomspace(m_range[0], m_range[1], n_points)))
    tail = 1.0 - np.searchsorted(srt, ms, side="right") / len(srt)
    ok = tail > 0
    if np.count_nonzero(ok) < 3 or srt[0] == srt[-1]:
        raise InsufficientData("degenerate tail: fewer than three positive tail points")
    x, y = np.log(ms[ok]), np.log(tail[ok])
    X = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(len(x) - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return TailStats(ms, tail, float(coef[0]), float(coef[1]), float(math.sqrt(cov[0, 0])), len(deg))


def connected_components(graph: GraphBase) -> list[int]:
    """Component sizes, largest first."""
    if graph.n == 0:
        return []
    _, labels = csgraph.connected_components(graph.adjacency(), directed=False)
    sizes = np.bincount(labels)
    return sorted(sizes.tolist(), reverse=True)


def largest_component_fraction(graph: GraphBase) -> float:
    sizes = connected_components(graph)
    return sizes[0] / graph.n if sizes else 0.0


def blue_mask(graph: Hypergraph, scales) -> np.ndarray:
    """True where the mark is strictly above the type's threshold."""
    thr = np.where(graph.vtypes == 1, scales.u_blue, scales.v_blue)
    return graph.mark > thr


def colour(graph: Hypergraph, scales) -> np.ndarray:
    return np.where(blue_mask(graph, scales), "blue", "red")


@dataclass(frozen=True)
class Thresholds:
    """Stand-alone blue/red thresholds, for use away from the asymptotic regime."""

    u_blue: float
    v_blue: float


def reach_envelope(params: ModelParams, mark1: float, mark2: float) -> float:
    """Largest single-hop reach when marks are bounded below by (mark1, mark2)."""
    return float(reach(mark1, mark2, params.gamma1, params.gamma2))


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

HEADER = "bipcp-graph v1"


def dump_graph(graph: Hypergraph) -> str:
    p = graph.params
    lines = [f"{HEADER} {p.gamma1!r} {p.gamma2!r} {graph.window.L!r} {graph.seed}"]
    for i in range(graph.n):
        lines.append(f"{i} {int(graph.vtypes[i])} {float(graph.pos[i])!r} {float(graph.mark[i])!r}")
    return "\n".join(lines) + "\n"


def load_graph(text: str, a: float = 1.0, lam: float = 0.1, root_id: int | None = 0) -> Hypergraph:
    lines = text.strip().splitlines()
    head = lines[0].split()
    if " ".join(head[:2]) != HEADER:
        raise ValueError("not a bipcp-graph v1 file")
    g1, g2, L, seed = float(head[2]), float(head[3]), float(head[4]), int(head[5])
    rows = [ln.split() for ln in lines[1:]]
    ids = [int(r[0]) for r in rows]
    if ids != list(range(len(ids))):
        raise ValueError("vertex ids must be 0..n-1 in order")
    vt = [int(r[1]) for r in rows]
    pos = [float(r[2]) for r in rows]
    mk = [float(r[3]) for r in rows]
    params = ModelParams(g1, g2, a, lam, allow_subcritical=g1 + g2 <= 1)
    if root_id is not None and (not rows or pos[root_id] != 0.0):
        root_id = None
    return Hypergraph(params, Window(L), seed, vt, pos, mk, root_id)
