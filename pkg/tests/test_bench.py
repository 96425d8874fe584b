import json
import subprocess
import sys

import pytest

from pimsauth.bench import cli
from pimsauth.bench import sweep as sweep_mod
from pimsauth.bench.report import CSV_COLUMNS, emit_csv, fit_trend, load_csv, rows_to_csv, summarize
from pimsauth.bench.sweep import PHASES, BenchRow, Sweep, SweepConfig, build_point, run_pipeline, run_sweep
from pimsauth.errors import ConfigInvalid
from pimsauth.ledger import Scheme
from pimsauth.secret_sharing import ThresholdPolicy

GOLDEN_ROWS = [
    BenchRow("SS", 2, 25, 30, "encrypt_setup", 1200, 0),
    BenchRow("PRE", 2, 25, 30, "node_response", 8400, 0),
    BenchRow("PRE", 3, 25, 30, "end_to_end", 133535, 1),
]
GOLDEN_CSV = (
    "scheme,t,n,msg_size_bytes,phase,latency_micros,rep\n"
    "SS,2,25,30,encrypt_setup,1200,0\n"
    "PRE,2,25,30,node_response,8400,0\n"
    "PRE,3,25,30,end_to_end,133535,1\n"
)


def test_golden_csv_fixture(tmp_path):
    assert rows_to_csv(GOLDEN_ROWS) == GOLDEN_CSV
    path = tmp_path / "g.csv"
    emit_csv(GOLDEN_ROWS, path)
    assert path.read_bytes() == GOLDEN_CSV.encode()
    assert load_csv(path) == GOLDEN_ROWS


def test_empty_rows_header_only(tmp_path):
    path = tmp_path / "e.csv"
    emit_csv([], path)
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"
    assert load_csv(path) == []


def test_constant_latency_zero_slope():
    rows = [BenchRow("SS", t, 25, 30, p, 500, r) for t in range(1, 6) for p in PHASES for r in range(3)]
    s = summarize(rows)
    assert s["free_variable"] == "t"
    for phase in PHASES:
        trend = s["trends"]["SS"][phase]
        assert trend["slope"] == 0.0 and trend["median"] == 500
        assert trend["monotonic_fraction"] == 1.0


def test_fit_trend_linear():
    trend = fit_trend([1, 2, 3, 4], [10, 20, 30, 40])
    assert trend["slope"] == pytest.approx(10) and trend["spearman"] == pytest.approx(1)


def test_msgsize_summary_uses_log_axis():
    rows = [BenchRow("PRE", 2, 25, size, "node_response", 100 + i, 0) for i, size in enumerate((10, 100, 1000))]
    s = summarize(rows)
    assert s["x_transform"] == "log10"
    assert s["trends"]["PRE"]["node_response"]["slope"] == pytest.approx(1.0)


@pytest.mark.parametrize("kwargs", [
    dict(sweep="threshold", t=3),
    dict(sweep="nodes", n=5),
    dict(sweep="msgsize", size=10),
    dict(sweep="threshold", scheme="rsa"),
    dict(sweep="threshold", repetitions=0),
    dict(sweep="nodes", t=9, points=(5,)),
    dict(sweep="threshold", latency="bogus"),
])
def test_invalid_config(kwargs):
    with pytest.raises(ConfigInvalid):
        SweepConfig(**kwargs)


def test_default_grids():
    assert SweepConfig(Sweep.THRESHOLD).grid() == [(t, 25, 30) for t in range(1, 26)]
    assert SweepConfig(Sweep.NODES).grid() == [(2, n, 30 * 1024) for n in (5, 10, 15, 20, 25)]
    assert [p[2] for p in SweepConfig(Sweep.MSGSIZE).grid()] == [10, 100, 1000, 10_000, 100_000, 1_000_000]


def test_row_count_no_silent_drops():
    cfg = SweepConfig(Sweep.NODES, points=(3, 4), size=64, repetitions=2, warmup=1, consumers=2)
    rows = run_sweep(cfg)
    assert len(rows) == 2 * 2 * 2 * len(PHASES)
    assert all(r.latency_micros >= 0 for r in rows)


def test_phases_partition_end_to_end():
    cfg = SweepConfig(Sweep.THRESHOLD, n=4, points=(2,), repetitions=1, warmup=0)
    setup = build_point(cfg, Scheme.PRE, 2, 4, 30)
    timings = run_pipeline(setup, Scheme.PRE, ThresholdPolicy(2, 4), 30)
    parts = sum(timings[p] for p in PHASES[:-1])
    assert parts <= timings["end_to_end"] * 1.05 + 200
    assert parts >= timings["end_to_end"] * 0.8


def test_workload_transcript_deterministic():
    cfg = SweepConfig(Sweep.THRESHOLD, n=3, points=(2,), repetitions=1, warmup=0, seed=7)

    def transcript(scheme):
        setup = build_point(cfg, scheme, 2, 3, 30, record=True)
        run_pipeline(setup, scheme, ThresholdPolicy(2, 3), 30)
        return setup.network.transport.transcript

    for scheme in (Scheme.SS, Scheme.PRE):
        a, b = transcript(scheme), transcript(scheme)
        assert a and a == b


def test_failed_point_row(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("injected")

    monkeypatch.setattr(sweep_mod, "run_pipeline", boom)
    rows = run_sweep(SweepConfig(Sweep.NODES, scheme="ss", points=(3,), size=10, repetitions=2, warmup=0))
    assert rows == [BenchRow("SS", 2, 3, 10, "failed", 0, -1)]


def test_cli_success(tmp_path, capsys):
    out, summary = tmp_path / "r.csv", tmp_path / "s.json"
    code = cli.main(["sweep", "nodes", "--scheme", "pre", "--points", "3,4", "--size", "100", "--reps", "1",
                     "--warmup", "0", "--out", str(out), "--summary", str(summary)])
    assert code == 0
    rows = load_csv(out)
    assert len(rows) == 2 * len(PHASES)
    assert json.loads(summary.read_text())["free_variable"] == "n"
    assert cli.main(["summarize", str(out)]) == 0
    assert '"free_variable": "n"' in capsys.readouterr().out


def test_cli_exit_2_on_failed_point(tmp_path, monkeypatch):
    monkeypatch.setattr(sweep_mod, "run_pipeline", lambda *a, **k: 1 / 0)
    out = tmp_path / "r.csv"
    code = cli.main(["sweep", "threshold", "--scheme", "ss", "--n", "3", "--points", "1", "--reps", "1",
                     "--warmup", "0", "--out", str(out)])
    assert code == 2
    assert cli.main(["summarize", str(out)]) == 2


def test_cli_config_error_exit_2(capsys):
    assert cli.main(["sweep", "threshold", "--t", "3"]) == 2
    assert "free variable" in capsys.readouterr().err


def test_cli_network_config(tmp_path):
    net = tmp_path / "net.json"
    net.write_text(json.dumps({"n": 3, "t": 2, "latency": "fixed:0.1", "timeout": 2}))
    out = tmp_path / "r.csv"
    code = cli.main(["sweep", "msgsize", "--scheme", "ss", "--points", "10", "--reps", "1", "--warmup", "0",
                     "--network-config", str(net), "--out", str(out)])
    assert code == 0
    assert {(r.t, r.n) for r in load_csv(out)} == {(2, 3)}


def test_cli_plot(tmp_path):
    pytest.importorskip("matplotlib")
    csv_path, png = tmp_path / "g.csv", tmp_path / "p.png"
    emit_csv([BenchRow("SS", t, 25, 30, p, 10 * t, 0) for t in (1, 2) for p in PHASES], csv_path)
    assert cli.main(["summarize", str(csv_path), "--summary", str(tmp_path / "s.json"), "--plot", str(png)]) == 0
    assert png.read_bytes()[:4] == b"\x89PNG"


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pimsauth", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "sweep" in proc.stdout
