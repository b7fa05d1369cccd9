"""Command line entry point: ``caetlab {explore,regret,oracle} --config FILE``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import harness


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help="override experiment.seed")
    common.add_argument("--out", type=Path, help="report path (stdout when omitted)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for trial fan-out")
    common.add_argument("--trace", action="store_true", help="write per-step JSON-lines traces")

    p = argparse.ArgumentParser(prog="caetlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("explore", parents=[common], help="confidence sweep of exploration cost")
    sub.add_parser("regret", parents=[common], help="explore-then-commit regret")
    sub.add_parser("oracle", parents=[common], help="optimal proportions on the true instance")
    return p


def _trace_path(args) -> Path:
    if args.out is not None:
        return args.out.with_suffix(args.out.suffix + ".trace.jsonl")
    return Path(f"caetlab-{args.command}.trace.jsonl")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    spec = harness.load_spec(args.config)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    out = args.out or (Path(spec.output) if spec.output else None)

    if args.command == "oracle":
        text = json.dumps(harness.oracle_report(spec), indent=2) + "\n"
        if out is None:
            sys.stdout.write(text)
        else:
            out.write_text(text)
        return 0

    if args.command == "explore":
        if args.trace:
            with open(_trace_path(args), "w") as trace:
                summary = harness.run_trials(spec, trace=trace)
        else:
            summary = harness.run_trials(spec, jobs=args.jobs)
    else:
        summary = harness.run_etc_regret(spec, jobs=args.jobs)

    if out is None:
        fmt = harness.format_csv if args.format == "csv" else harness.format_json
        sys.stdout.write(fmt(summary))
    else:
        harness.emit_report(summary, out, args.format)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
