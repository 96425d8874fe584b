"""CSV emission and trend summaries for benchmark rows."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
from collections import defaultdict
from typing import Iterable

import numpy as np
from scipy import stats

from .sweep import FAILED, PHASES, BenchRow

CSV_COLUMNS = ("scheme", "t", "n", "msg_size_bytes", "phase", "latency_micros", "rep")
_X_COLUMNS = ("t", "n", "msg_size_bytes")


def rows_to_csv(rows: Iterable[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([getattr(r, c) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_csv(rows: Iterable[BenchRow], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def load_csv(path: str | os.PathLike) -> list[BenchRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            BenchRow(
                r["scheme"], int(r["t"]), int(r["n"]), int(r["msg_size_bytes"]), r["phase"],
                int(r["latency_micros"]), int(r["rep"]),
            )
            for r in reader
        ]


def free_variable(rows: list[BenchRow]) -> str | None:
    varying = [c for c in _X_COLUMNS if len({getattr(r, c) for r in rows}) > 1]
    return varying[0] if len(varying) == 1 else None


def medians(rows: Iterable[BenchRow]) -> dict[tuple[str, str, tuple[int, int, int]], float]:
    """Median latency keyed by ``(scheme, phase, (t, n, size))``."""
    groups: dict[tuple, list[int]] = defaultdict(list)
    for r in rows:
        if r.phase != FAILED:
            groups[(r.scheme, r.phase, (r.t, r.n, r.msg_size_bytes))].append(r.latency_micros)
    return {k: statistics.median(v) for k, v in groups.items()}


def fit_trend(xs: list[float], ys: list[float]) -> dict:
    """Least-squares slope, Spearman rank correlation and monotonicity of ``ys`` over ``xs``."""
    out = {"points": len(xs), "median": statistics.median(ys) if ys else None,
           "slope": 0.0, "intercept": ys[0] if ys else None, "slope_stderr": 0.0,
           "spearman": None, "monotonic_fraction": None}
    if len(xs) < 2:
        return out
    if len(set(ys)) > 1:
        fit = stats.linregress(xs, ys)
        out.update(slope=float(fit.slope), intercept=float(fit.intercept), slope_stderr=float(fit.stderr))
        rho = stats.spearmanr(xs, ys).statistic
        out["spearman"] = None if math.isnan(rho) else float(rho)
    steps = np.diff(np.asarray(ys, dtype=float)[np.argsort(xs)])
    out["monotonic_fraction"] = float(np.mean(steps >= 0))
    return out


def summarize(rows: Iterable[BenchRow]) -> dict:
    rows = list(rows)
    ok = [r for r in rows if r.phase != FAILED]
    xname = free_variable(ok)
    med = medians(ok)
    table = [
        {"scheme": s, "phase": p, "t": pt[0], "n": pt[1], "msg_size_bytes": pt[2], "median_micros": m}
        for (s, p, pt), m in sorted(med.items())
    ]
    trends: dict[str, dict[str, dict]] = defaultdict(dict)
    log_x = xname == "msg_size_bytes"
    for scheme in sorted({r.scheme for r in ok}):
        for phase in PHASES:
            pts = sorted((pt, m) for (s, p, pt), m in med.items() if s == scheme and p == phase)
            if not pts:
                continue
            idx = _X_COLUMNS.index(xname) if xname else None
            xs = [float(pt[idx]) if idx is not None else 0.0 for pt, _ in pts]
            if log_x:
                xs = [math.log10(max(x, 1.0)) for x in xs]
            trend = fit_trend(xs, [m for _, m in pts]) if xname else fit_trend([], [])
            trends[scheme][phase] = trend
    return {
        "free_variable": xname,
        "x_transform": "log10" if log_x else "identity",
        "failed_points": [r.__dict__ for r in rows if r.phase == FAILED],
        "medians": table,
        "trends": dict(trends),
    }


def write_summary(summary: dict, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def render_plot(summary: dict, path: str | os.PathLike) -> None:
    """Static PNG of median latency per phase against the free variable."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xname = summary["free_variable"] or "t"
    fig, axes = plt.subplots(1, len(PHASES), figsize=(4 * len(PHASES), 3.5), sharex=True)
    for ax, phase in zip(axes, PHASES):
        for scheme in sorted({m["scheme"] for m in summary["medians"]}):
            pts = sorted((m[xname], m["median_micros"] / 1000) for m in summary["medians"]
                         if m["scheme"] == scheme and m["phase"] == phase)
            if pts:
                ax.plot(*zip(*pts), marker="o", label=scheme)
        ax.set_title(phase)
        ax.set_xlabel(xname)
        if xname == "msg_size_bytes":
            ax.set_xscale("log")
    axes[0].set_ylabel("median latency (ms)")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
