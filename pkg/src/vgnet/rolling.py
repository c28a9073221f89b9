"""Per-window visibility-graph analysis over calendar or explicit windows.

Nothing here computes new quantities: a window report is the composition of
slicing, :func:`~vgnet.vg.build_fast` and the metric / power-law functions on
the same slice.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import metrics
from .exceptions import EmptyWindow, NoMaximumInRange, TailTooSmall, VGError
from ._validation import seed_children
from .powerlaw import MIN_TAIL_SIZE, PowerLawFit, bootstrap_gof, select_kmin
from .series import (
    SPARSE_THRESHOLD,
    PriceSeries,
    WindowSlice,
    WindowSpec,
    day_partition,
    monthly_partition,
    slice_series,
)
from .vg import VisibilityGraph, build_fast

__all__ = [
    "AnalysisOptions",
    "WindowAnalysis",
    "WindowReport",
    "analyze_series",
    "analyze_slice",
    "analyze_window",
    "reports_long_csv",
    "worker_count",
]

TRAJECTORY_METRICS = ("k_min", "k_mean", "k_max", "c_min", "c_mean", "c_max", "r", "alpha")


def worker_count(default: int = 1) -> int:
    """Worker pool size, capped by the ``VG_THREADS`` environment variable."""
    cap = os.environ.get("VG_THREADS")
    if cap:
        try:
            return max(1, int(cap))
        except ValueError:
            pass
    return default


@dataclass(frozen=True)
class AnalysisOptions:
    """``fit_powerlaw=None`` fits tails for intraday series and skips daily ones."""

    time_mode: str = "ordinal"
    fit_powerlaw: bool | None = None
    min_tail_size: int = MIN_TAIL_SIZE
    bootstrap: int = 0
    path_budget: object = None
    compute_paths: bool = False
    seed: int = 0

    def wants_fit(self, series: PriceSeries) -> bool:
        if self.fit_powerlaw is None:
            return series.frequency_label in ("5min", "15min", "30min")
        return self.fit_powerlaw


@dataclass(frozen=True, eq=False)
class WindowAnalysis:
    """Full metric objects for one slice (the CLI writes these out)."""

    series: PriceSeries
    graph: VisibilityGraph
    degrees: metrics.DegreeDistribution
    clustering: metrics.ClusteringProfile
    mixing: metrics.MixingProfile
    powerlaw: PowerLawFit | None
    powerlaw_error: str | None
    paths: metrics.PathStats | None


def analyze_slice(sub: PriceSeries, options: AnalysisOptions, seed=None,
                  source_meta=None) -> WindowAnalysis:
    """Build the graph of ``sub`` and compute every diagnostic on it.

    ``seed`` (an int or ``SeedSequence``) drives path sampling and the
    bootstrap; children 0 and 1 of it are used respectively.
    """
    path_seed, boot_seed = seed_children(options.seed if seed is None else seed, 2)
    graph = build_fast(sub, time_mode=options.time_mode, source_meta=source_meta)
    dd = metrics.degree_distribution(graph)
    cp = metrics.clustering(graph)
    mp = metrics.mixing_profile(graph)
    fit, fit_error = None, None
    if options.wants_fit(sub):
        try:
            fit = select_kmin(dd.degrees, min_tail_size=options.min_tail_size)
            if options.bootstrap:
                p = bootstrap_gof(fit, dd.degrees, options.bootstrap, seed=boot_seed,
                                  min_tail_size=options.min_tail_size)
                fit = replace(fit, gof_p_value=p)
        except (TailTooSmall, NoMaximumInRange) as exc:
            fit_error = type(exc).__name__
    else:
        fit_error = "Disabled"
    paths = None
    if options.compute_paths:
        budget = metrics.auto_budget(graph.n_nodes, options.path_budget)
        paths = metrics.average_shortest_path(graph, budget, path_seed)
    return WindowAnalysis(sub, graph, dd, cp, mp, fit, fit_error, paths)


@dataclass(frozen=True)
class WindowReport:
    window: WindowSpec
    n_obs: int
    sparse_flag: bool
    degree_summary: tuple[int, float, int] | None = None
    clustering_summary: tuple[float, float, float] | None = None
    assortativity_r: float | None = None
    r_status: str | None = None
    powerlaw: PowerLawFit | None = None
    powerlaw_status: str | None = None
    avg_shortest_path: float | None = None
    error: str | None = None
    partition: str = "explicit"

    @classmethod
    def from_analysis(cls, window, analysis: WindowAnalysis, partition="explicit"):
        d = analysis.degrees
        c = analysis.clustering
        r = analysis.mixing.assortativity_r
        return cls(
            window=window,
            n_obs=len(analysis.series),
            sparse_flag=len(analysis.series) < SPARSE_THRESHOLD,
            degree_summary=(d.k_min_obs, d.k_mean, d.k_max),
            clustering_summary=(c.c_min, c.global_mean, c.c_max),
            assortativity_r=r,
            r_status=None if r is not None else "DegenerateVariance",
            powerlaw=analysis.powerlaw,
            powerlaw_status=analysis.powerlaw_error,
            avg_shortest_path=None if analysis.paths is None else analysis.paths.avg_shortest_path,
            partition=partition,
        )

    def metric_values(self) -> dict:
        k = self.degree_summary or (None, None, None)
        c = self.clustering_summary or (None, None, None)
        return {
            "k_min": k[0], "k_mean": k[1], "k_max": k[2],
            "c_min": c[0], "c_mean": c[1], "c_max": c[2],
            "r": self.assortativity_r,
            "alpha": None if self.powerlaw is None else self.powerlaw.alpha,
        }

    def to_dict(self) -> dict:
        def clean(x):
            return None if isinstance(x, float) and math.isnan(x) else x

        return {
            "window": self.window.to_dict(),
            "partition": self.partition,
            "n_obs": self.n_obs,
            "sparse": self.sparse_flag,
            "error": self.error,
            **{k: clean(v) for k, v in self.metric_values().items() if k != "alpha"},
            "r_status": self.r_status,
            "L": self.avg_shortest_path,
            "powerlaw": None if self.powerlaw is None else self.powerlaw.to_dict(),
            "powerlaw_status": self.powerlaw_status,
        }


def analyze_window(series: PriceSeries, window: WindowSpec,
                   options: AnalysisOptions = AnalysisOptions(), seed=None) -> WindowReport:
    """Report for the slice of ``series`` inside ``window``; raises :class:`EmptyWindow`."""
    sub = slice_series(series, window)
    meta = {"window": window.name}
    return WindowReport.from_analysis(window, analyze_slice(sub, options, seed, meta))


def _cells(series, windows, window_days):
    if windows is not None:
        cells = []
        for w in windows:
            try:
                sub = slice_series(series, w)
                cells.append(WindowSlice(w, sub, len(sub), len(sub) < SPARSE_THRESHOLD))
            except EmptyWindow:
                lo, hi = np.searchsorted(series.timestamps, [w.start, w.end])
                cells.append(WindowSlice(w, None, int(hi - lo), True))
        return cells, "explicit"
    if window_days:
        return day_partition(series, int(window_days)), f"fixed-days:{int(window_days)}"
    return monthly_partition(series), "calendar-month"


def analyze_series(series: PriceSeries, options: AnalysisOptions = AnalysisOptions(),
                   windows=None, window_days: int | None = None, n_jobs: int | None = None,
                   seed_key: tuple = ()) -> list[WindowReport]:
    """Reports for every calendar month of ``series`` (or the given windows).

    Months without observations are absent. Windows that cannot be analysed
    yield a report whose ``error`` names the failure instead of aborting.
    Window ``i`` is seeded by ``SeedSequence(options.seed, spawn_key=seed_key + (i,))``.
    """
    cells, partition = _cells(series, windows, window_days)

    def run(item):
        idx, cell = item
        if cell.series is None:
            return WindowReport(cell.window, cell.n_obs, True, error="EmptyWindow",
                                partition=partition)
        seq = np.random.SeedSequence(options.seed, spawn_key=tuple(seed_key) + (idx,))
        try:
            analysis = analyze_slice(cell.series, options, seq, {"window": cell.window.name})
        except VGError as exc:
            return WindowReport(cell.window, cell.n_obs, cell.sparse, error=type(exc).__name__,
                                partition=partition)
        return WindowReport.from_analysis(cell.window, analysis, partition)

    n_jobs = n_jobs or worker_count()
    items = list(enumerate(cells))
    if n_jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(run, items))
    return [run(item) for item in items]


def reports_long_csv(reports, instrument: str = "") -> str:
    """One row per window per metric; undefined values are blank with a status."""
    out = io.StringIO()
    out.write("instrument,window,start,end,n_obs,sparse,metric,value,status\n")
    for rep in reports:
        values = rep.metric_values()
        for name in TRAJECTORY_METRICS:
            value = values[name]
            status = rep.error or ""
            if not status and name == "r" and value is None:
                status = rep.r_status or ""
            if not status and name == "alpha" and value is None:
                status = rep.powerlaw_status or ""
            if isinstance(value, float) and math.isnan(value):
                value, status = None, status or "Undefined"
            text = "" if value is None else (repr(float(value)) if isinstance(value, float) else str(value))
            out.write(
                f"{instrument},{rep.window.name},{rep.window.start},{rep.window.end},"
                f"{rep.n_obs},{int(rep.sparse_flag)},{name},{text},{status}\n"
            )
    return out.getvalue()
