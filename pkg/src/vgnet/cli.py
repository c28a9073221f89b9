"""Command-line front end: ``vgnet describe | analyze | rolling | metrics``.

Every artifact carries the toolkit version, a hash of the run configuration
and the seed (CSV header comments, or a ``provenance`` JSON field). Random
streams derive from the single ``--seed`` through ``SeedSequence`` spawn keys
``(input index, window index)``, so output bytes do not depend on
``VG_THREADS``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__, metrics
from ._validation import seed_children
from .exceptions import (
    InputError,
    NoMaximumInRange,
    PreconditionFailed,
    TailTooSmall,
    VGError,
)
from .powerlaw import MIN_TAIL_SIZE, bootstrap_gof, curves_csv, fitted_ccdf, select_kmin
from .rolling import AnalysisOptions, analyze_series, analyze_slice, reports_long_csv, worker_count
from .series import (
    PAPER_DAILY,
    PAPER_MONTHLY,
    CsvSchema,
    PriceSeries,
    WindowSpec,
    describe,
    parse_csv,
    slice_series,
)
from .vg import export_edgelist, import_edgelist

log = logging.getLogger("vgnet")

PRESETS = {"paper-daily": PAPER_DAILY, "paper-monthly": PAPER_MONTHLY, "whole": ()}
TABLE1_ROWS = ("n_obs", "mean", "max", "min", "std_dev", "skewness", "kurtosis", "jb_p_value")


@dataclass
class RunConfig:
    command: str
    inputs: list[str]
    instruments: list[str]
    time_col: str = "timestamp"
    price_col: str = "price"
    frequency: str | None = None
    preset: str | None = None
    windows: list[dict] | None = None
    time_mode: str = "ordinal"
    l_budget: str = "auto"
    fit: bool | None = None
    min_tail_size: int = MIN_TAIL_SIZE
    bootstrap: int = 0
    seed: int = 0
    window_days: int | None = None
    out: str = "vgnet-out"
    version: str = __version__
    window_list: list[dict] = field(default_factory=list)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"version": self.version, "config_hash": self.config_hash, "seed": self.seed}


class Writer:
    """Writes artifacts under ``root`` with provenance headers."""

    def __init__(self, root: Path, config: RunConfig):
        self.root = root
        self.config = config
        root.mkdir(parents=True, exist_ok=True)
        self.header = (
            f"# vgnet {config.version}\n# config_hash: {config.config_hash}\n"
            f"# seed: {config.seed}\n"
        )

    def text(self, rel: str, body: str, header: bool = True):
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text((self.header if header else "") + body, encoding="utf-8")

    def json(self, rel: str, payload):
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"provenance": self.config.provenance(), "data": payload}
        path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n", encoding="utf-8")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return None if math.isnan(x) or math.isinf(x) else float(x)
    return x


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


# -- configuration -----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", action="append", required=True, metavar="CSV",
                        help="price CSV (repeatable)")
    common.add_argument("--instrument", action="append", default=None,
                        help="label per --input (default: file stem)")
    common.add_argument("--time-col", default="timestamp")
    common.add_argument("--price-col", default="price")
    common.add_argument("--frequency", choices=("daily", "5min", "15min", "30min", "other"),
                        default=None, help="override the inferred sampling frequency")
    common.add_argument("--preset", choices=sorted(PRESETS), default=None)
    common.add_argument("--windows", metavar="JSON", default=None,
                        help="JSON array of {name, start, end} (end exclusive)")
    common.add_argument("--time-mode", choices=("ordinal", "actual"), default="ordinal")
    common.add_argument("--l-budget", default="auto", metavar="N|exact",
                        help="BFS sources for L; 'exact', an integer, or 'auto'")
    common.add_argument("--fit", action=argparse.BooleanOptionalAction, default=None,
                        help="fit power-law tails (default depends on the command)")
    common.add_argument("--min-tail-size", type=int, default=MIN_TAIL_SIZE)
    common.add_argument("--bootstrap", type=int, default=0, metavar="N",
                        help="goodness-of-fit resamples (0 disables; otherwise >= 100)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="vgnet-out")
    common.add_argument("--window-days", type=int, default=None)

    parser = argparse.ArgumentParser(prog="vgnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"vgnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("describe", parents=[common], help="descriptive statistics per window")
    sub.add_parser("analyze", parents=[common], help="static VG analysis per window")
    sub.add_parser("rolling", parents=[common], help="monthly time-varying VG metrics")
    sub.add_parser("metrics", parents=[common],
                   help="metrics of graphs read from edge-list files given as --input")
    return parser


def _config_from_args(args) -> RunConfig:
    if args.instrument and len(args.instrument) != len(args.input):
        raise InputError("--instrument must be given once per --input")
    if args.bootstrap and args.bootstrap < 100:
        raise InputError("--bootstrap needs at least 100 resamples")
    if args.l_budget not in ("auto", "exact"):
        try:
            if int(args.l_budget) < 1:
                raise ValueError
        except ValueError:
            raise InputError("--l-budget must be 'auto', 'exact' or a positive integer") from None
    windows = None
    if args.windows:
        try:
            raw = json.loads(Path(args.windows).read_text(encoding="utf-8"))
            windows = [WindowSpec.from_dict(w).to_dict() for w in raw]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"cannot read windows file {args.windows}: {exc}") from None
        if len({w["name"] for w in windows}) != len(windows):
            raise InputError("window names must be unique")
    instruments = args.instrument or [Path(p).stem for p in args.input]
    fit = args.fit
    if fit is None and args.command in ("analyze", "metrics"):
        fit = True
    return RunConfig(
        command=args.command,
        inputs=list(args.input),
        instruments=instruments,
        time_col=args.time_col,
        price_col=args.price_col,
        frequency=args.frequency,
        preset=args.preset,
        windows=windows,
        time_mode=args.time_mode,
        l_budget=args.l_budget,
        fit=fit,
        min_tail_size=args.min_tail_size,
        bootstrap=args.bootstrap,
        seed=args.seed,
        window_days=args.window_days,
        out=args.out,
    )


def _load(config: RunConfig) -> list[PriceSeries]:
    series = []
    for path, name in zip(config.inputs, config.instruments):
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from None
        schema = CsvSchema(config.time_col, config.price_col, config.frequency, name)
        try:
            series.append(parse_csv(data, schema))
        except InputError as exc:
            raise type(exc)(f"{path}: {exc}") from None
    return series


def _static_windows(config: RunConfig, series: PriceSeries) -> list[WindowSpec]:
    """Explicit windows, or a preset followed by the whole sample."""
    if config.windows is not None:
        return [WindowSpec.from_dict(w) for w in config.windows]
    preset = PRESETS[config.preset or "paper-daily"]
    whole = WindowSpec("Whole", series.start, series.end + np.timedelta64(1, "s"))
    return list(preset) + [whole]


def _options(config: RunConfig, compute_paths: bool) -> AnalysisOptions:
    budget = config.l_budget if config.l_budget in ("auto", "exact") else int(config.l_budget)
    return AnalysisOptions(
        time_mode=config.time_mode,
        fit_powerlaw=config.fit,
        min_tail_size=config.min_tail_size,
        bootstrap=config.bootstrap,
        path_budget=budget,
        compute_paths=compute_paths,
        seed=config.seed,
    )


# -- commands ----------------------------------------------------------------


def cmd_describe(config: RunConfig) -> int:
    all_series = _load(config)
    writer = Writer(Path(config.out), config)
    names = [w.name for w in _static_windows(config, all_series[0])]
    table, payload = [], {}
    for s in all_series:
        per_window = {}
        for w in _static_windows(config, s):
            try:
                per_window[w.name] = describe(slice_series(s, w)).to_dict()
            except VGError as exc:
                log.warning("%s/%s: %s", s.instrument_label, w.name, exc)
                per_window[w.name] = {"error": type(exc).__name__}
        payload[s.instrument_label] = per_window
        for stat in TABLE1_ROWS:
            cells = [_num(per_window[n].get(stat)) for n in names]
            table.append(",".join([s.instrument_label, stat] + cells))
    writer.text("table1.csv", ",".join(["instrument", "statistic"] + names) + "\n"
                + "\n".join(table) + "\n")
    writer.json("table1.json", payload)
    writer.json("config.json", config.echo())
    return 0


def _window_summary(analysis, window: WindowSpec) -> dict:
    fit = analysis.powerlaw
    paths = analysis.paths
    return {
        "window": None if window is None else window.to_dict(),
        "N": analysis.graph.n_nodes,
        "n_edges": analysis.graph.n_edges,
        "k_min_obs": analysis.degrees.k_min_obs,
        "k_mean": analysis.degrees.k_mean,
        "k_max": analysis.degrees.k_max,
        "C": analysis.clustering.global_mean,
        "c_min": analysis.clustering.c_min,
        "c_max": analysis.clustering.c_max,
        "r": analysis.mixing.assortativity_r,
        "r_status": None if analysis.mixing.assortativity_r is not None else "DegenerateVariance",
        "L": None if paths is None else paths.avg_shortest_path,
        "L_method": None if paths is None else paths.method,
        "L_sources": None if paths is None else paths.n_sources_used,
        "alpha": None if fit is None else fit.alpha,
        "beta": None if fit is None else fit.beta,
        "k_min": None if fit is None else fit.k_min,
        "ks_distance": None if fit is None else fit.ks_distance,
        "n_tail": None if fit is None else fit.n_tail,
        "gof_p_value": None if fit is None else fit.gof_p_value,
        "powerlaw": None if fit is None else fit.to_dict(),
        "powerlaw_reason": analysis.powerlaw_error if fit is None else None,
    }


def _degree_csv(analysis) -> str:
    dd, fit = analysis.degrees, analysis.powerlaw
    fitted = np.full(len(dd.support), np.nan)
    overall = np.full(len(dd.support), np.nan)
    if fit is not None:
        tail = dd.support >= fit.k_min
        fitted[tail] = fitted_ccdf(fit, dd.support[tail])
        overall[tail] = fitted[tail] * (fit.n_tail / fit.n_total)
    lines = ["k,count,pdf,ccdf,fitted_ccdf,fitted_ccdf_overall"]
    for row in zip(dd.support.tolist(), dd.counts.tolist(), dd.pdf_values.tolist(),
                   dd.ccdf_values.tolist(), fitted.tolist(), overall.tolist()):
        lines.append(",".join(_num(v) for v in row))
    return "\n".join(lines) + "\n"


def _write_graph_artifacts(writer: Writer, base: str, analysis, write_edges: bool = True):
    g = analysis.graph
    if write_edges:
        writer.text(base + "edges.txt", export_edgelist(g, {"n_nodes": g.n_nodes}).decode())
    writer.text(base + "degree_distribution.csv", _degree_csv(analysis))
    if analysis.powerlaw is not None:
        emp, fitted = curves_csv(analysis.powerlaw, analysis.degrees.degrees)
        writer.text(base + "ccdf_empirical.csv", emp)
        writer.text(base + "ccdf_fitted.csv", fitted)
    writer.text(base + "clustering_nodes.csv", analysis.clustering.to_csv())
    writer.text(base + "clustering_by_degree.csv", analysis.clustering.conditional_csv())
    writer.text(base + "mixing_nodes.csv", analysis.mixing.to_csv())
    writer.text(base + "mixing_by_degree.csv", analysis.mixing.conditional_csv())


def cmd_analyze(config: RunConfig) -> int:
    all_series = _load(config)
    writer = Writer(Path(config.out), config)
    options = _options(config, compute_paths=True)
    tasks = []
    for si, s in enumerate(all_series):
        for wi, w in enumerate(_static_windows(config, s)):
            tasks.append((si, wi, s, w))

    def run(task):
        si, wi, s, w = task
        try:
            sub = slice_series(s, w)
            seq = np.random.SeedSequence(config.seed, spawn_key=(si, wi))
            meta = {"instrument": s.instrument_label, "window": w.name}
            return analyze_slice(sub, options, seq, meta), None
        except VGError as exc:
            return None, exc

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(run, tasks))

    scan_rows, manifest = [], []
    table2: dict[str, dict[str, dict]] = {}
    names = []
    for (si, wi, s, w), (analysis, error) in zip(tasks, results):
        if w.name not in names:
            names.append(w.name)
        entry = {"instrument": s.instrument_label, "window": w.name}
        if error is not None:
            log.warning("%s/%s: %s", s.instrument_label, w.name, error)
            manifest.append({**entry, "status": type(error).__name__, "message": str(error)})
            continue
        manifest.append({**entry, "status": "ok"})
        base = f"{s.instrument_label}/{w.name}/"
        _write_graph_artifacts(writer, base, analysis)
        g = analysis.graph
        summary = _window_summary(analysis, w)
        writer.json(base + "summary.json", {"instrument": s.instrument_label, **summary})
        table2.setdefault(s.instrument_label, {})[w.name] = summary
        n, L = g.n_nodes, summary["L"]
        scan_rows.append(f"{s.instrument_label},{w.name},{n},{_num(L)},{math.log(n)!r}")

    writer.text("small_world_scan.csv", "instrument,window,N,L,ln_N\n"
                + "".join(r + "\n" for r in scan_rows))
    lines = [",".join(["instrument", "metric"] + names)]
    for inst in config.instruments:
        row = table2.get(inst, {})
        for metric in ("C", "r"):
            lines.append(",".join([inst, metric] + [_num(row.get(n, {}).get(metric)) for n in names]))
    writer.text("table2.csv", "\n".join(lines) + "\n")
    writer.json("manifest.json", manifest)
    writer.json("config.json", config.echo())
    return 0


def cmd_rolling(config: RunConfig) -> int:
    all_series = _load(config)
    writer = Writer(Path(config.out), config)
    options = _options(config, compute_paths=False)
    long_parts, payload = [], {}
    explicit = None
    if config.windows is not None:
        explicit = [WindowSpec.from_dict(w) for w in config.windows]
    elif config.preset:
        explicit = list(PRESETS[config.preset])
    for si, s in enumerate(all_series):
        reports = analyze_series(s, options, windows=explicit, window_days=config.window_days,
                                 n_jobs=worker_count(), seed_key=(si,))
        for rep in reports:
            if rep.error:
                log.warning("%s/%s: %s", s.instrument_label, rep.window.name, rep.error)
        long_parts.append(reports_long_csv(reports, s.instrument_label))
        payload[s.instrument_label] = [r.to_dict() for r in reports]
    header, *_ = long_parts[0].splitlines(keepends=True)
    body = "".join(part.split("\n", 1)[1] for part in long_parts)
    writer.text("trajectories.csv", header + body)
    writer.json("trajectories.json", payload)
    writer.json("config.json", config.echo())
    return 0


def cmd_metrics(config: RunConfig) -> int:
    """Degree, clustering, mixing, path and tail diagnostics of external edge lists."""
    writer = Writer(Path(config.out), config)
    options = _options(config, compute_paths=True)
    for gi, (path, name) in enumerate(zip(config.inputs, config.instruments)):
        try:
            graph = import_edgelist(Path(path).read_bytes())
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from None
        except (InputError, ValueError) as exc:
            raise InputError(f"{path}: {exc}") from None
        path_seed, boot_seed = seed_children(np.random.SeedSequence(config.seed, spawn_key=(gi,)), 2)
        dd = metrics.degree_distribution(graph)
        fit, reason = None, "Disabled"
        if options.fit_powerlaw is not False:
            try:
                fit = select_kmin(dd.degrees, min_tail_size=options.min_tail_size)
                reason = None
                if options.bootstrap:
                    p = bootstrap_gof(fit, dd.degrees, options.bootstrap, seed=boot_seed,
                                      min_tail_size=options.min_tail_size)
                    fit = replace(fit, gof_p_value=p)
            except (TailTooSmall, NoMaximumInRange) as exc:
                reason = type(exc).__name__
        paths = None
        try:
            budget = metrics.auto_budget(graph.n_nodes, options.path_budget)
            paths = metrics.average_shortest_path(graph, budget, path_seed)
        except PreconditionFailed as exc:
            log.warning("%s: L undefined: %s", name, exc)
        analysis = SimpleNamespace(
            graph=graph, degrees=dd, clustering=metrics.clustering(graph),
            mixing=metrics.mixing_profile(graph), powerlaw=fit, powerlaw_error=reason,
            paths=paths,
        )
        _write_graph_artifacts(writer, f"{name}/", analysis, write_edges=False)
        summary = _window_summary(analysis, None)
        writer.json(f"{name}/summary.json", {"instrument": name, **summary})
    writer.json("config.json", config.echo())
    return 0


COMMANDS = {
    "describe": cmd_describe,
    "analyze": cmd_analyze,
    "rolling": cmd_rolling,
    "metrics": cmd_metrics,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        return COMMANDS[config.command](config)
    except InputError as exc:
        print(f"vgnet: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (VGError, OSError) as exc:
        print(f"vgnet: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
