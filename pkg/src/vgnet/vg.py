"""Natural visibility graph construction.

Two builders produce identical edge sets:

* :func:`build_naive` sweeps every left endpoint across the rest of the series,
  O(n^2). It is the reference.
* :func:`build_fast` splits at the maximum of each interval. The maximum blocks
  every chord that passes over it, so its edges are found by one sweep to each
  side and the two halves are processed independently. Intervals shorter than
  :data:`BASE_CASE` fall back to the naive sweep.

Both rely on :func:`vgnet._predicates.below`, which is exact for doubles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._predicates import below
from ._validation import check_times_values
from .exceptions import IndexOutOfRange, MalformedCsv
from .series import PriceSeries

__all__ = [
    "BASE_CASE",
    "TIME_MODES",
    "VisibilityGraph",
    "build_fast",
    "build_naive",
    "export_edgelist",
    "import_edgelist",
    "visible",
]

TIME_MODES = ("ordinal", "actual")
BASE_CASE = 32


@njit(cache=True, nogil=True)
def _push(buf, count, u, v):
    if count == buf.shape[0]:
        grown = np.empty((2 * buf.shape[0], 2), dtype=np.int64)
        grown[:count] = buf[:count]
        buf = grown
    buf[count, 0] = u
    buf[count, 1] = v
    return buf, count + 1


@njit(cache=True, nogil=True)
def _naive_block(t, p, lo, hi, buf, count):
    for i in range(lo, hi - 1):
        buf, count = _push(buf, count, i, i + 1)
        m = i + 1
        for j in range(i + 2, hi):
            if below(t[i], p[i], t[m], p[m], t[j], p[j]):
                buf, count = _push(buf, count, i, j)
                m = j
    return buf, count


@njit(cache=True, nogil=True)
def _naive_edges(t, p):
    n = p.shape[0]
    buf = np.empty((max(4 * n, 16), 2), dtype=np.int64)
    buf, count = _naive_block(t, p, 0, n, buf, 0)
    return buf[:count].copy()


@njit(cache=True, nogil=True)
def _fast_edges(t, p, base_case):
    n = p.shape[0]
    buf = np.empty((max(4 * n, 16), 2), dtype=np.int64)
    count = 0
    stack = np.empty((2 * n + 4, 2), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n
    top = 1
    while top > 0:
        top -= 1
        lo = stack[top, 0]
        hi = stack[top, 1]
        if hi - lo < 2:
            continue
        if hi - lo < base_case:
            buf, count = _naive_block(t, p, lo, hi, buf, count)
            continue
        piv = lo + np.argmax(p[lo:hi])
        if piv + 1 < hi:
            buf, count = _push(buf, count, piv, piv + 1)
            m = piv + 1
            for j in range(piv + 2, hi):
                if below(t[piv], p[piv], t[m], p[m], t[j], p[j]):
                    buf, count = _push(buf, count, piv, j)
                    m = j
        if piv - 1 >= lo:
            buf, count = _push(buf, count, piv - 1, piv)
            m = piv - 1
            for j in range(piv - 2, lo - 1, -1):
                if below(t[j], p[j], t[m], p[m], t[piv], p[piv]):
                    buf, count = _push(buf, count, j, piv)
                    m = j
        # Larger child is processed last so the stack stays O(log n) on balanced splits.
        if piv - lo > hi - piv - 1:
            stack[top, 0] = lo
            stack[top, 1] = piv
            stack[top + 1, 0] = piv + 1
            stack[top + 1, 1] = hi
        else:
            stack[top, 0] = piv + 1
            stack[top, 1] = hi
            stack[top + 1, 0] = lo
            stack[top + 1, 1] = piv
        top += 2
    return buf[:count].copy()


@njit(cache=True, nogil=True)
def _visible_pair(t, p, i, j):
    for k in range(i + 1, j):
        if not below(t[i], p[i], t[k], p[k], t[j], p[j]):
            return False
    return True


@dataclass(frozen=True, eq=False)
class VisibilityGraph:
    """Undirected simple graph in CSR form; node ``i`` is observation ``i``.

    ``indices[indptr[i]:indptr[i + 1]]`` lists the neighbours of ``i`` in
    increasing order. Every undirected edge is stored in both rows.
    """

    indptr: np.ndarray
    indices: np.ndarray
    source_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("indptr", "indices"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(
            self, "source_meta", {str(k): str(v) for k, v in self.source_meta.items()}
        )

    @classmethod
    def from_edges(cls, n_nodes: int, edges, source_meta=None) -> "VisibilityGraph":
        """Build from an ``(m, 2)`` array of undirected edges (either orientation)."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n_nodes):
            raise IndexOutOfRange("edge endpoint outside [0, n_nodes)")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if src.size and np.any((np.diff(src) == 0) & (np.diff(dst) == 0)):
            raise ValueError("duplicate edges are not allowed")
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n_nodes), out=indptr[1:])
        return cls(indptr, dst, dict(source_meta or {}))

    @property
    def n_nodes(self) -> int:
        return len(self.indptr) - 1

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n_nodes:
            raise IndexOutOfRange(f"node {i} outside [0, {self.n_nodes})")
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        row = self.neighbors(i)
        pos = np.searchsorted(row, j)
        return bool(pos < len(row) and row[pos] == j)

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of edges with ``i < j``, sorted lexicographically."""
        src = np.repeat(np.arange(self.n_nodes), self.degrees())
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def same_structure(self, other: "VisibilityGraph") -> bool:
        return np.array_equal(self.indptr, other.indptr) and np.array_equal(
            self.indices, other.indices
        )

    def __eq__(self, other):
        if not isinstance(other, VisibilityGraph):
            return NotImplemented
        return self.same_structure(other) and self.source_meta == other.source_meta

    __hash__ = None

    def to_networkx(self):
        """Convert to a ``networkx.Graph`` (networkx must be installed)."""
        import networkx as nx

        g = nx.Graph(**self.source_meta)
        g.add_nodes_from(range(self.n_nodes))
        g.add_edges_from(map(tuple, self.edges().tolist()))
        return g


def _coordinates(series, time_mode, times=None):
    if time_mode not in TIME_MODES:
        raise ValueError(f"time_mode must be one of {TIME_MODES}, got {time_mode!r}")
    if isinstance(series, PriceSeries):
        p = series.prices
        t = series.seconds() - series.seconds()[0] if time_mode == "actual" else None
        meta = {
            "instrument": series.instrument_label,
            "frequency": series.frequency_label,
        }
    else:
        t, p = check_times_values(times, series)
        if time_mode == "ordinal":
            t = None
        meta = {}
    if t is None:
        t = np.arange(len(p), dtype=np.float64)
    meta["time_mode"] = time_mode
    return np.ascontiguousarray(t, dtype=np.float64), np.ascontiguousarray(p, dtype=np.float64), meta


def visible(series, i: int, j: int, time_mode: str = "ordinal", times=None) -> bool:
    """Whether observations ``i < j`` see each other (every point between is strictly below)."""
    t, p, _ = _coordinates(series, time_mode, times)
    n = len(p)
    if not (0 <= i < j < n):
        raise IndexOutOfRange(f"need 0 <= i < j < {n}, got i={i}, j={j}")
    return bool(_visible_pair(t, p, i, j))


def build_naive(series, time_mode: str = "ordinal", times=None, source_meta=None) -> VisibilityGraph:
    """Reference O(n^2) construction.

    ``series`` is a :class:`PriceSeries` or a 1-D array of values. Under
    ``time_mode="ordinal"`` the abscissa of observation ``i`` is ``i``; under
    ``"actual"`` it is the timestamp in seconds (or ``times`` for raw arrays).
    """
    t, p, meta = _coordinates(series, time_mode, times)
    meta.update(source_meta or {})
    return VisibilityGraph.from_edges(len(p), _naive_edges(t, p), meta)


def build_fast(series, time_mode: str = "ordinal", times=None, source_meta=None) -> VisibilityGraph:
    """Divide-and-conquer construction; same arguments and result as :func:`build_naive`.

    Expected O(n log n) on i.i.d. data, O(n^2) on monotone input.
    """
    t, p, meta = _coordinates(series, time_mode, times)
    meta.update(source_meta or {})
    return VisibilityGraph.from_edges(len(p), _fast_edges(t, p, BASE_CASE), meta)


def export_edgelist(graph: VisibilityGraph, extra_header=None) -> bytes:
    """Serialize as ``i j`` lines (``i < j``, sorted) after ``# key: value`` header lines."""
    lines = [f"# {k}: {v}\n" for k, v in graph.source_meta.items()]
    lines += [f"# {k}: {v}\n" for k, v in (extra_header or {}).items()]
    edges = graph.edges()
    body = "".join(f"{i} {j}\n" for i, j in edges.tolist())
    return ("".join(lines) + body).encode("utf-8")


def import_edgelist(data: bytes | str, n_nodes: int | None = None) -> VisibilityGraph:
    """Inverse of :func:`export_edgelist`.

    The node count comes from ``n_nodes``, a ``# n_nodes:`` header, or the
    largest index plus one, in that order of preference.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    meta, pairs = {}, []
    for lineno, line in enumerate(data.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MalformedCsv("edge lines must hold exactly two node indices", lineno)
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise MalformedCsv(f"non-integer node index in {line!r}", lineno) from None
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    if n_nodes is None:
        if "n_nodes" in meta:
            n_nodes = int(meta["n_nodes"])
        else:
            n_nodes = int(edges.max()) + 1 if edges.size else 0
    return VisibilityGraph.from_edges(n_nodes, edges, meta)
