"""``pimsauth`` command line: run latency sweeps and summarize their CSV output."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..authz import NetworkConfig
from ..errors import ConfigInvalid
from .report import emit_csv, load_csv, render_plot, rows_to_csv, summarize, write_summary
from .sweep import Sweep, SweepConfig, failed_points, run_sweep

EXIT_OK = 0
EXIT_FAILED_POINTS = 2


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pimsauth", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run a latency sweep")
    sw.add_argument("sweep", choices=[s.value for s in Sweep])
    sw.add_argument("--scheme", choices=["ss", "pre", "both"], default="both")
    sw.add_argument("--t", type=int, help="threshold (fixed unless sweeping t)")
    sw.add_argument("--n", type=int, help="node count (fixed unless sweeping n)")
    sw.add_argument("--size", type=int, help="message size in bytes (fixed unless sweeping size)")
    sw.add_argument("--points", type=_int_list, help="values of the free variable, e.g. 1,5,10")
    sw.add_argument("--reps", type=int, default=30)
    sw.add_argument("--warmup", type=int, default=5)
    sw.add_argument("--consumers", type=int, default=1, help="grant+request rounds per repetition")
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--latency-model", default=None, help="none | fixed:MS | uniform:LO:HI | exp:MEAN")
    sw.add_argument("--network-config", help="JSON network file (n, t, latency, timeout)")
    sw.add_argument("--out", help="CSV path (stdout when omitted)")
    sw.add_argument("--summary", help="write the JSON trend summary here")
    sw.add_argument("--plot", help="write a PNG chart here")

    sm = sub.add_parser("summarize", help="trend report for an existing CSV")
    sm.add_argument("csv")
    sm.add_argument("--summary", help="write JSON here instead of stdout")
    sm.add_argument("--plot", help="write a PNG chart here")
    return parser


def _config_from_args(args) -> SweepConfig:
    fixed = {"t": args.t, "n": args.n, "size": args.size}
    latency, timeout = args.latency_model, 5.0
    if args.network_config:
        net = NetworkConfig.load(args.network_config)
        for key, value in (("t", net.t), ("n", net.n)):
            free = {"threshold": "t", "nodes": "n"}.get(args.sweep)
            if fixed[key] is None and key != free:
                fixed[key] = value
        latency = latency or str(net.latency)
        timeout = net.timeout
    return SweepConfig(
        sweep=Sweep(args.sweep), scheme=args.scheme, points=args.points, repetitions=args.reps,
        warmup=args.warmup, consumers=args.consumers, seed=args.seed, latency=latency or "none",
        timeout=timeout, out=args.out, **fixed,
    )


def _cmd_sweep(args) -> int:
    try:
        config = _config_from_args(args)
    except ConfigInvalid as exc:
        print(f"pimsauth: {exc}", file=sys.stderr)
        return EXIT_FAILED_POINTS
    progress = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    rows = run_sweep(config, progress)
    if args.out:
        emit_csv(rows, args.out)
    else:
        sys.stdout.write(rows_to_csv(rows))
    summary = summarize(rows)
    if args.summary:
        write_summary(summary, args.summary)
    if args.plot:
        render_plot(summary, args.plot)
    failed = failed_points(rows)
    for r in failed:
        print(f"pimsauth: failed point {r.scheme} t={r.t} n={r.n} size={r.msg_size_bytes}", file=sys.stderr)
    return EXIT_FAILED_POINTS if failed else EXIT_OK


def _cmd_summarize(args) -> int:
    rows = load_csv(args.csv)
    summary = summarize(rows)
    if args.summary:
        write_summary(summary, args.summary)
    else:
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    if args.plot:
        render_plot(summary, args.plot)
    return EXIT_FAILED_POINTS if summary["failed_points"] else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    if args.command == "sweep":
        return _cmd_sweep(args)
    return _cmd_summarize(args)


if __name__ == "__main__":
    sys.exit(main())
