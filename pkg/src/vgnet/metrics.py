"""Degree, clustering, path-length and degree-mixing diagnostics of a graph.

All functions take a :class:`~vgnet.vg.VisibilityGraph` (or any graph with the
same CSR attributes) and are pure. Accumulations that must be reproducible use
integer arithmetic, so results do not depend on traversal order.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._validation import seed_children
from .exceptions import BudgetExceedsN, DegenerateVariance, PreconditionFailed

__all__ = [
    "ClusteringProfile",
    "DegreeDistribution",
    "MixingProfile",
    "PathStats",
    "SmallWorldScan",
    "EXACT_PATH_LIMIT",
    "DEFAULT_PATH_BUDGET",
    "assortativity",
    "average_shortest_path",
    "clustering",
    "degree_distribution",
    "mixing_profile",
    "small_world_scan",
]

EXACT_PATH_LIMIT = 20_000
DEFAULT_PATH_BUDGET = 2_000


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value)) if isinstance(value, (float, np.floating)) else str(value)


def _csv(header, columns) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in zip(*columns):
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def _group_mean(keys: np.ndarray, values: np.ndarray):
    """Mean of ``values`` per distinct key, in increasing key order."""
    support, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    sums = np.zeros(len(support))
    np.add.at(sums, inverse, values)
    return support, counts, sums / counts


# -- degrees -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    degrees: np.ndarray
    support: np.ndarray
    counts: np.ndarray
    pdf_values: np.ndarray
    ccdf_values: np.ndarray

    @property
    def pdf(self) -> dict[int, float]:
        return dict(zip(self.support.tolist(), self.pdf_values.tolist()))

    @property
    def ccdf(self) -> dict[int, float]:
        """``k -> Pr(K >= k)`` at the observed degrees."""
        return dict(zip(self.support.tolist(), self.ccdf_values.tolist()))

    @property
    def k_min_obs(self) -> int:
        return int(self.support[0])

    @property
    def k_max(self) -> int:
        return int(self.support[-1])

    @property
    def k_mean(self) -> float:
        return float(self.degrees.sum()) / len(self.degrees)

    def summary(self) -> dict:
        return {"k_min": self.k_min_obs, "k_mean": self.k_mean, "k_max": self.k_max}

    def to_csv(self) -> str:
        return _csv(
            ["k", "count", "pdf", "ccdf"],
            [self.support.tolist(), self.counts.tolist(), self.pdf_values, self.ccdf_values],
        )


def degree_distribution(graph) -> DegreeDistribution:
    degrees = graph.degrees()
    support, counts = np.unique(degrees, return_counts=True)
    n = len(degrees)
    tail_counts = np.cumsum(counts[::-1])[::-1]
    return DegreeDistribution(
        degrees=degrees,
        support=support,
        counts=counts,
        pdf_values=counts / n,
        ccdf_values=tail_counts / n,
    )


# -- clustering --------------------------------------------------------------


@njit(cache=True, nogil=True)
def _edges_among_neighbours(indptr, indices):
    # each triangle (i, j, l) is found once per edge; attribute it to the apex
    n = indptr.shape[0] - 1
    e = np.zeros(n, dtype=np.int64)
    for i in range(n):
        a0, a1 = indptr[i], indptr[i + 1]
        for pos in range(a0, a1):
            j = indices[pos]
            if j <= i:
                continue
            x, y = a0, indptr[j]
            y1 = indptr[j + 1]
            while x < a1 and y < y1:
                u, v = indices[x], indices[y]
                if u == v:
                    # triangle i-j-u: edge (i, j) lies among u's neighbours, etc.
                    e[u] += 1
                    x += 1
                    y += 1
                elif u < v:
                    x += 1
                else:
                    y += 1
    return e


@dataclass(frozen=True, eq=False)
class ClusteringProfile:
    """Local clustering ``c_i = 2 E_i / (k_i (k_i - 1))``.

    ``per_node`` is NaN where ``k_i < 2``; such nodes are left out of
    ``global_mean``, ``conditional`` and the reciprocal points.
    """

    degrees: np.ndarray
    per_node: np.ndarray
    global_mean: float
    conditional_k: np.ndarray
    conditional_n: np.ndarray
    conditional_c: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.per_node)

    @property
    def conditional(self) -> dict[int, float]:
        return dict(zip(self.conditional_k.tolist(), self.conditional_c.tolist()))

    @property
    def reciprocal_pairs(self) -> np.ndarray:
        """``(k_i, 1 / c_i)`` rows for every node with ``c_i > 0``."""
        c = self.per_node
        mask = self.defined & (np.nan_to_num(c) > 0)
        return np.column_stack([self.degrees[mask], 1.0 / c[mask]])

    @property
    def c_min(self) -> float:
        c = self.per_node[self.defined]
        return float(c.min()) if c.size else math.nan

    @property
    def c_max(self) -> float:
        c = self.per_node[self.defined]
        return float(c.max()) if c.size else math.nan

    def summary(self) -> dict:
        return {"c_min": self.c_min, "c_mean": self.global_mean, "c_max": self.c_max}

    def to_csv(self) -> str:
        c = self.per_node
        inv = np.full_like(c, np.nan)
        pos = self.defined & (np.nan_to_num(c) > 0)
        inv[pos] = 1.0 / c[pos]
        return _csv(
            ["node", "k", "c", "inv_c"],
            [range(len(c)), self.degrees.tolist(), c, inv],
        )

    def conditional_csv(self) -> str:
        return _csv(
            ["k", "n_nodes", "c_mean"],
            [self.conditional_k.tolist(), self.conditional_n.tolist(), self.conditional_c],
        )


def clustering(graph) -> ClusteringProfile:
    degrees = graph.degrees()
    e = _edges_among_neighbours(graph.indptr, graph.indices)
    c = np.full(len(degrees), np.nan)
    ok = degrees >= 2
    k = degrees[ok].astype(np.float64)
    c[ok] = 2.0 * e[ok] / (k * (k - 1.0))
    if ok.any():
        ck, cn, cm = _group_mean(degrees[ok], c[ok])
        mean = float(np.mean(c[ok]))
    else:
        ck = cn = np.zeros(0, dtype=np.int64)
        cm = np.zeros(0)
        mean = math.nan
    return ClusteringProfile(degrees, c, mean, ck, cn, cm)


# -- shortest paths ----------------------------------------------------------


@njit(cache=True, nogil=True)
def _bfs_sums(indptr, indices, sources):
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    sums = np.zeros(sources.shape[0], dtype=np.int64)
    reached = np.zeros(sources.shape[0], dtype=np.int64)
    for s_idx in range(sources.shape[0]):
        s = sources[s_idx]
        dist[s] = 0
        queue[0] = s
        head, tail = 0, 1
        total = 0
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u] + 1
            for pos in range(indptr[u], indptr[u + 1]):
                v = indices[pos]
                if dist[v] < 0:
                    dist[v] = du
                    total += du
                    queue[tail] = v
                    tail += 1
        sums[s_idx] = total
        reached[s_idx] = tail
        for q in range(tail):
            dist[queue[q]] = -1
    return sums, reached


@dataclass(frozen=True)
class PathStats:
    n_nodes: int
    avg_shortest_path: float
    method: str
    n_sources_used: int

    def to_dict(self) -> dict:
        return {
            "n_nodes": self.n_nodes,
            "avg_shortest_path": self.avg_shortest_path,
            "method": self.method,
            "n_sources_used": self.n_sources_used,
        }


def average_shortest_path(graph, budget="exact", seed=None) -> PathStats:
    """Mean BFS distance over ordered node pairs.

    ``budget="exact"`` uses every node as a source. An integer budget draws that
    many distinct sources uniformly (``seed`` feeds ``numpy.random.default_rng``)
    and averages over their rows. Distances are summed as integers, so a full
    budget reproduces the exact value bit for bit.
    """
    n = graph.n_nodes
    if n < 2:
        raise PreconditionFailed("average shortest path needs at least 2 nodes")
    if budget == "exact":
        sources = np.arange(n, dtype=np.int64)
        method = "exact"
    else:
        budget = int(budget)
        if budget < 1:
            raise PreconditionFailed("path budget must be positive")
        if budget > n:
            raise BudgetExceedsN(f"budget {budget} exceeds the {n} nodes of the graph")
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(n, size=budget, replace=False)).astype(np.int64)
        method = "sampled"
    sums, reached = _bfs_sums(graph.indptr, graph.indices, sources)
    if np.any(reached != n):
        raise PreconditionFailed("graph is not connected")
    total = int(sums.sum())
    return PathStats(n, total / (len(sources) * (n - 1)), method, len(sources))


def auto_budget(n_nodes: int, budget=None):
    """Exact traversal up to :data:`EXACT_PATH_LIMIT` nodes, otherwise a sampled budget."""
    if budget in (None, "auto"):
        return "exact" if n_nodes <= EXACT_PATH_LIMIT else DEFAULT_PATH_BUDGET
    if budget == "exact":
        return "exact"
    return "exact" if int(budget) >= n_nodes else int(budget)


@dataclass(frozen=True)
class SmallWorldScan:
    points: tuple[tuple[int, float], ...]
    slope: float
    intercept: float
    pearson: float

    def to_csv(self, labels=None) -> str:
        n = [p[0] for p in self.points]
        L = [p[1] for p in self.points]
        cols = [n, L, [math.log(v) for v in n]]
        header = ["N", "L", "ln_N"]
        if labels is not None:
            header = ["window"] + header
            cols = [list(labels)] + cols
        return _csv(header, cols)


def small_world_scan(graphs, budget="exact", seed=None) -> SmallWorldScan:
    """``(N, L)`` per graph plus the least-squares fit of ``L`` against ``ln N``.

    ``seed`` may be an int or a ``numpy.random.SeedSequence``; graph ``g`` uses
    the ``g``-th spawned child when sampling sources.
    """
    graphs = list(graphs)
    if len(graphs) < 3:
        raise PreconditionFailed("a small-world scan needs at least 3 graphs")
    children = seed_children(seed, len(graphs))
    points = []
    for g, child in zip(graphs, children):
        b = budget if budget == "exact" else min(int(budget), g.n_nodes)
        points.append((g.n_nodes, average_shortest_path(g, b, child).avg_shortest_path))
    x = np.log([p[0] for p in points])
    y = np.array([p[1] for p in points])
    if np.ptp(x) == 0:
        slope = intercept = pearson = math.nan
    else:
        slope, intercept = np.polyfit(x, y, 1)
        pearson = float(np.corrcoef(x, y)[0, 1]) if np.ptp(y) > 0 else math.nan
    return SmallWorldScan(tuple(points), float(slope), float(intercept), pearson)


# -- degree mixing -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MixingProfile:
    degrees: np.ndarray
    knn_per_node: np.ndarray
    knn_k: np.ndarray
    knn_n: np.ndarray
    knn_mean: np.ndarray
    assortativity_r: float | None

    @property
    def knn_by_degree(self) -> dict[int, float]:
        return dict(zip(self.knn_k.tolist(), self.knn_mean.tolist()))

    def to_csv(self) -> str:
        return _csv(
            ["node", "k", "knn"],
            [range(len(self.degrees)), self.degrees.tolist(), self.knn_per_node],
        )

    def conditional_csv(self) -> str:
        return _csv(
            ["k", "n_nodes", "knn_mean"],
            [self.knn_k.tolist(), self.knn_n.tolist(), self.knn_mean],
        )


def _edge_degree_sums(graph):
    deg = graph.degrees()
    edges = graph.edges()
    j = deg[edges[:, 0]]
    k = deg[edges[:, 1]]
    m = len(edges)
    return m, int(np.sum(j * k)), int(np.sum(j + k)), int(np.sum(j * j + k * k))


def assortativity(graph) -> float:
    """Newman's degree assortativity over undirected edges.

    Evaluates ``[M^-1 sum j k - (M^-1 sum (j+k)/2)^2] /
    [M^-1 sum (j^2+k^2)/2 - (M^-1 sum (j+k)/2)^2]`` with both parts scaled by
    ``4 M^2`` and computed in integers, then divided once.
    """
    m, s_jk, s_sum, s_sq = _edge_degree_sums(graph)
    if m == 0:
        raise PreconditionFailed("assortativity needs at least one edge")
    num = 4 * m * s_jk - s_sum * s_sum
    den = 2 * m * s_sq - s_sum * s_sum
    if den == 0:
        raise DegenerateVariance("every edge endpoint has the same degree")
    return num / den


def mixing_profile(graph) -> MixingProfile:
    """Average nearest-neighbour degree per node and per degree class, plus ``r``.

    ``assortativity_r`` is None when the edge-endpoint degree variance vanishes.
    """
    if graph.n_edges == 0:
        raise PreconditionFailed("mixing profile needs at least one edge")
    deg = graph.degrees()
    src = np.repeat(np.arange(len(deg)), deg)
    neigh_sum = np.bincount(src, weights=deg[graph.indices], minlength=len(deg))
    knn = np.full(len(deg), np.nan)
    ok = deg > 0
    knn[ok] = neigh_sum[ok] / deg[ok]
    kk, kn, km = _group_mean(deg[ok], knn[ok])
    try:
        r = assortativity(graph)
    except DegenerateVariance:
        r = None
    return MixingProfile(deg, knn, kk, kn, km, r)
