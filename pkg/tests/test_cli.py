import json
from pathlib import Path

import numpy as np
import pytest

from vgnet import __version__
from vgnet.cli import main
from vgnet.series import PAPER_DAILY, PAPER_MONTHLY
from vgnet.vg import import_edgelist

SUB_NAMES = [w.name for w in PAPER_DAILY]


def write_daily(path: Path, start="2018-03-01", end="2023-08-01", seed=0):
    days = np.arange(np.datetime64(start), np.datetime64(end))
    prices = 60 + np.cumsum(np.random.default_rng(seed).normal(size=len(days)))
    path.write_text("timestamp,price\n" + "".join(f"{d},{p!r}\n" for d, p in zip(days, prices.tolist())))
    return path


def write_intraday(path: Path, start, end, minutes=30, seed=0, skip=None):
    ts = np.arange(np.datetime64(start), np.datetime64(end), np.timedelta64(minutes, "m"))
    if skip is not None:
        ts = ts[(ts < np.datetime64(skip[0])) | (ts >= np.datetime64(skip[1]))]
    prices = 500 + np.cumsum(np.random.default_rng(seed).normal(size=len(ts)))
    rows = "".join(f"{str(t).replace('T', ' ')},{p!r}\n" for t, p in zip(ts, prices.tolist()))
    path.write_text("timestamp,price\n" + rows)
    return path


def read_csv(path: Path):
    lines = path.read_text().splitlines()
    body = [l for l in lines if not l.startswith("#")]
    return [l for l in lines if l.startswith("#")], body[0].split(","), [r.split(",") for r in body[1:]]


def tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def daily_csv(tmp_path_factory):
    return write_daily(tmp_path_factory.mktemp("data") / "wti.csv")


@pytest.fixture(scope="module")
def two_inputs(tmp_path_factory):
    d = tmp_path_factory.mktemp("two")
    return write_daily(d / "wti.csv", seed=1), write_daily(d / "brent.csv", seed=2)


# -- describe ----------------------------------------------------------------


def test_describe_table_layout(daily_csv, tmp_path):
    assert main(["describe", "--input", str(daily_csv), "--out", str(tmp_path)]) == 0
    headers, cols, rows = read_csv(tmp_path / "table1.csv")
    assert cols == ["instrument", "statistic"] + SUB_NAMES + ["Whole"]
    assert [r[1] for r in rows] == ["n_obs", "mean", "max", "min", "std_dev", "skewness",
                                    "kurtosis", "jb_p_value"]
    assert headers[0] == f"# vgnet {__version__}"
    assert any(h.startswith("# config_hash: ") for h in headers)
    assert "# seed: 0" in headers
    doc = json.loads((tmp_path / "table1.json").read_text())
    assert set(doc) == {"provenance", "data"}
    assert set(doc["data"]["wti"]) == set(SUB_NAMES + ["Whole"])
    assert set(doc["data"]["wti"]["Sub1"]) == {"n_obs", "mean", "max", "min", "std_dev", "skewness",
                                               "kurtosis", "jb_statistic", "jb_p_value", "flags"}


def test_describe_missing_column(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,close\n2020-01-01,1\n2020-01-02,2\n")
    assert main(["describe", "--input", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "'price'" in capsys.readouterr().err


def test_describe_empty_file(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["describe", "--input", str(empty), "--out", str(tmp_path / "o")]) == 2
    assert "TooShort" in capsys.readouterr().err


def test_custom_columns(tmp_path):
    src = tmp_path / "x.csv"
    src.write_text("date,settle\n" + "".join(f"2021-01-{d:02d},{d * 1.5}\n" for d in range(1, 29)))
    code = main(["describe", "--input", str(src), "--time-col", "date", "--price-col", "settle",
                 "--preset", "whole", "--out", str(tmp_path / "o")])
    assert code == 0
    _, cols, rows = read_csv(tmp_path / "o" / "table1.csv")
    assert cols == ["instrument", "statistic", "Whole"]
    assert rows[0][2] == "28"


def test_usage_errors(daily_csv, tmp_path):
    assert main(["analyze", "--input", str(daily_csv), "--bootstrap", "5", "--out", str(tmp_path)]) == 2
    assert main(["analyze", "--input", str(daily_csv), "--l-budget", "x", "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["analyze"])
    assert exc.value.code == 2


# -- analyze -----------------------------------------------------------------


def test_analyze_preset_emits_table2(two_inputs, tmp_path):
    args = ["analyze", "--preset", "paper-daily", "--out", str(tmp_path)]
    for p in two_inputs:
        args += ["--input", str(p)]
    assert main(args) == 0
    _, cols, rows = read_csv(tmp_path / "table2.csv")
    assert cols == ["instrument", "metric"] + SUB_NAMES + ["Whole"]
    assert [(r[0], r[1]) for r in rows] == [("wti", "C"), ("wti", "r"), ("brent", "C"), ("brent", "r")]
    for r in rows:
        values = [float(v) for v in r[2:]]
        assert all(-1 <= v <= 1 for v in values)
    _, cols, rows = read_csv(tmp_path / "small_world_scan.csv")
    assert cols == ["instrument", "window", "N", "L", "ln_N"]
    assert len(rows) == 10


def test_analyze_artifacts(daily_csv, tmp_path):
    windows = tmp_path / "w.json"
    windows.write_text(json.dumps([
        {"name": "A", "start": "2019-01-01", "end": "2020-01-01"},
        {"name": "tiny", "start": "2019-05-01", "end": "2019-05-20"},
    ]))
    out = tmp_path / "out"
    assert main(["analyze", "--input", str(daily_csv), "--windows", str(windows), "--out", str(out)]) == 0
    a = out / "wti" / "A"
    expected = {"edges.txt", "degree_distribution.csv", "ccdf_empirical.csv", "ccdf_fitted.csv",
                "clustering_nodes.csv", "clustering_by_degree.csv", "mixing_nodes.csv",
                "mixing_by_degree.csv", "summary.json"}
    assert {p.name for p in a.iterdir()} == expected
    assert read_csv(a / "degree_distribution.csv")[1] == [
        "k", "count", "pdf", "ccdf", "fitted_ccdf", "fitted_ccdf_overall"]
    assert read_csv(a / "clustering_nodes.csv")[1] == ["node", "k", "c", "inv_c"]
    assert read_csv(a / "clustering_by_degree.csv")[1] == ["k", "n_nodes", "c_mean"]
    assert read_csv(a / "mixing_nodes.csv")[1] == ["node", "k", "knn"]
    assert read_csv(a / "mixing_by_degree.csv")[1] == ["k", "n_nodes", "knn_mean"]
    assert read_csv(a / "ccdf_fitted.csv")[1] == ["k", "ccdf"]
    summary = json.loads((a / "summary.json").read_text())
    assert set(summary["provenance"]) == {"version", "config_hash", "seed"}
    data = summary["data"]
    for key in ("N", "C", "r", "L", "L_method", "alpha", "beta", "k_min", "ks_distance",
                "n_tail", "powerlaw", "powerlaw_reason", "k_min_obs", "k_mean", "k_max"):
        assert key in data
    assert data["N"] == 365 and data["L_method"] == "exact"
    g = import_edgelist((a / "edges.txt").read_bytes())
    assert g.n_nodes == 365
    tiny = json.loads((out / "wti" / "tiny" / "summary.json").read_text())["data"]
    assert tiny["powerlaw"] is None and tiny["powerlaw_reason"] == "TailTooSmall"
    _, _, scan = read_csv(out / "small_world_scan.csv")
    assert len(scan) == 2


def test_analyze_records_failed_window(daily_csv, tmp_path):
    windows = tmp_path / "w.json"
    windows.write_text(json.dumps([
        {"name": "ok", "start": "2019-01-01", "end": "2019-03-01"},
        {"name": "void", "start": "1990-01-01", "end": "1990-02-01"},
    ]))
    out = tmp_path / "out"
    assert main(["analyze", "--input", str(daily_csv), "--windows", str(windows), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())["data"]
    assert [m["status"] for m in manifest] == ["ok", "EmptyWindow"]
    _, _, rows = read_csv(out / "table2.csv")
    assert rows[0][3] == ""


def test_config_echo(daily_csv, tmp_path):
    main(["describe", "--input", str(daily_csv), "--out", str(tmp_path)])
    config = json.loads((tmp_path / "config.json").read_text())["data"]
    for key in ("inputs", "time_col", "price_col", "preset", "windows", "time_mode", "l_budget",
                "fit", "min_tail_size", "bootstrap", "seed", "window_days", "version"):
        assert key in config
    assert "out" not in config


def test_analyze_is_deterministic_across_workers(daily_csv, tmp_path, monkeypatch):
    args = ["analyze", "--input", str(daily_csv), "--preset", "paper-daily", "--l-budget", "200",
            "--seed", "42"]
    monkeypatch.setenv("VG_THREADS", "1")
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("VG_THREADS", "4")
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a == b and len(a) > 20


def test_seed_changes_sampled_output(daily_csv, tmp_path):
    base = ["analyze", "--input", str(daily_csv), "--preset", "whole", "--l-budget", "50"]
    main(base + ["--seed", "1", "--out", str(tmp_path / "a")])
    main(base + ["--seed", "2", "--out", str(tmp_path / "b")])
    la = json.loads((tmp_path / "a" / "wti" / "Whole" / "summary.json").read_text())["data"]["L"]
    lb = json.loads((tmp_path / "b" / "wti" / "Whole" / "summary.json").read_text())["data"]["L"]
    assert la != lb


# -- rolling -----------------------------------------------------------------


def test_rolling_fourteen_months(tmp_path):
    src = write_intraday(tmp_path / "sc.csv", "2022-01-01T00:00", "2023-03-01T00:00", 240)
    out = tmp_path / "out"
    assert main(["rolling", "--input", str(src), "--out", str(out)]) == 0
    _, cols, rows = read_csv(out / "trajectories.csv")
    assert cols == ["instrument", "window", "start", "end", "n_obs", "sparse", "metric", "value", "status"]
    for metric in ("k_min", "k_mean", "k_max", "c_min", "c_mean", "c_max", "r", "alpha"):
        assert sum(r[6] == metric for r in rows) == 14
    doc = json.loads((out / "trajectories.json").read_text())
    assert len(doc["data"]["sc"]) == 14
    assert doc["data"]["sc"][0]["partition"] == "calendar-month"


def test_rolling_gap_month_absent(tmp_path):
    src = write_intraday(tmp_path / "sc.csv", "2021-06-01T00:00", "2021-11-01T00:00", 60,
                         skip=("2021-08-01", "2021-09-01"))
    out = tmp_path / "out"
    assert main(["rolling", "--input", str(src), "--out", str(out)]) == 0
    _, _, rows = read_csv(out / "trajectories.csv")
    assert sorted({r[1] for r in rows}) == ["2021-06", "2021-07", "2021-09", "2021-10"]


def test_rolling_window_days(tmp_path):
    src = write_intraday(tmp_path / "sc.csv", "2022-01-25T00:00", "2022-04-01T00:00", 30)
    out = tmp_path / "out"
    assert main(["rolling", "--input", str(src), "--window-days", "30", "--out", str(out)]) == 0
    _, _, rows = read_csv(out / "trajectories.csv")
    starts = sorted({r[2] for r in rows})
    assert starts == ["2022-01-25T00:00:00", "2022-02-24T00:00:00", "2022-03-26T00:00:00"]


def test_rolling_paper_monthly_preset(tmp_path):
    src = write_intraday(tmp_path / "sc.csv", "2019-11-25T00:00", "2020-02-05T00:00", 30)
    out = tmp_path / "out"
    assert main(["rolling", "--input", str(src), "--preset", "paper-monthly", "--out", str(out)]) == 0
    doc = json.loads((out / "trajectories.json").read_text())["data"]["sc"]
    assert [d["window"]["name"] for d in doc] == [w.name for w in PAPER_MONTHLY]
    assert [d["error"] for d in doc][2:] == ["EmptyWindow"] * 3


def test_rolling_is_deterministic_across_workers(tmp_path, monkeypatch):
    src = write_intraday(tmp_path / "sc.csv", "2022-01-01T00:00", "2022-05-01T00:00", 30)
    args = ["rolling", "--input", str(src), "--bootstrap", "100", "--seed", "5"]
    monkeypatch.setenv("VG_THREADS", "1")
    main(args + ["--out", str(tmp_path / "a")])
    monkeypatch.setenv("VG_THREADS", "3")
    main(args + ["--out", str(tmp_path / "b")])
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


# -- metrics on external graphs ----------------------------------------------


def test_metrics_from_edge_list(tmp_path):
    edges = tmp_path / "p4.txt"
    edges.write_text("0 1\n1 2\n2 3\n")
    out = tmp_path / "out"
    assert main(["metrics", "--input", str(edges), "--instrument", "p4", "--out", str(out)]) == 0
    data = json.loads((out / "p4" / "summary.json").read_text())["data"]
    assert data["N"] == 4 and data["L"] == 5 / 3 and data["r"] == -0.5 and data["C"] == 0.0
    assert data["powerlaw_reason"] == "TailTooSmall"


def test_metrics_rejects_bad_edge_list(tmp_path):
    edges = tmp_path / "bad.txt"
    edges.write_text("0 1 2\n")
    assert main(["metrics", "--input", str(edges), "--out", str(tmp_path / "o")]) == 2
