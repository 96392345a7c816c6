"""Command-line entry point: ``gibbon run | verify | timing``."""

from __future__ import annotations

import argparse
import logging
import sys

from .exceptions import GibbonError
from .experiment import ACQUISITIONS, RunConfig, aggregate, load_config, run, traces_to_csv, write_csv
from .benchmarks import REGISTRY

log = logging.getLogger("gibbon")

# flag dest -> RunConfig field
_RUN_FLAGS = {
    "benchmark": "benchmark",
    "acq": "acquisition",
    "batch_size": "batch_size",
    "budget": "budget",
    "iterations": "iterations",
    "seeds": "seeds",
    "max_value_samples": "max_value_samples",
    "grid_size": "grid_size",
    "restarts": "restarts",
    "raw_samples": "raw_samples",
    "init_size": "init_size",
    "noise_variance": "noise_variance",
    "out": "out",
}


def _add_run(sub):
    p = sub.add_parser("run", help="run a seeded benchmark experiment and write a regret CSV")
    p.add_argument("--config", help="flat key = value file; flags override its entries")
    p.add_argument("--benchmark", choices=sorted(REGISTRY))
    p.add_argument("--acq", choices=ACQUISITIONS)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--budget", type=float, help="total evaluation cost")
    p.add_argument("--iterations", type=int, help="maximum number of batches after the initial design")
    p.add_argument("--seeds", help="e.g. 0-19 or 0,3,7")
    p.add_argument("--max-value-samples", type=int)
    p.add_argument("--grid-size", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--raw-samples", type=int)
    p.add_argument("--init-size", type=int)
    p.add_argument("--noise-variance", type=float)
    p.add_argument("--mask-overhead", action="store_true", default=None,
                   help="record zero overhead so repeated runs give identical files")
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.add_argument("--jobs", type=int, default=1, help="seeds run in parallel processes")


def _add_verify(sub):
    p = sub.add_parser("verify", help="check the information-gain lower bound on random scenarios")
    p.add_argument("--scenarios", type=int, default=50)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON-lines report path (stdout if omitted)")


def _add_timing(sub):
    p = sub.add_parser("timing", help="measure how GIBBON query time grows with n or B")
    p.add_argument("--axis", choices=("n", "B"), required=True)
    p.add_argument("--values", required=True, help="comma-separated increasing sizes")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--fixed", type=int, help="the other size (default B=1 or n=100)")
    p.add_argument("--out", help="CSV path (stdout if omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gibbon", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_verify(sub)
    _add_timing(sub)
    return parser


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def config_from_args(args) -> RunConfig:
    mapping = load_config(args.config) if args.config else {}
    for dest, key in _RUN_FLAGS.items():
        value = getattr(args, dest)
        if value is not None:
            mapping[key] = value
    if args.mask_overhead:
        mapping["mask_overhead"] = True
    if "benchmark" not in mapping:
        raise GibbonError("a benchmark is required (--benchmark or config file)")
    return RunConfig.from_mapping(mapping)


def cmd_run(args) -> int:
    config = config_from_args(args)
    traces = run(config, jobs=args.jobs)
    if config.out:
        write_csv(traces, config.out)
    else:
        sys.stdout.write(traces_to_csv(traces))
    summary = aggregate(traces)
    log.info("run %s: final mean regret %.6g (se %.3g) over %d seeds",
             config.run_id(), summary.mean[-1], summary.se[-1], len(traces))
    truncated = [t.seed for t in traces if t.truncated]
    for t in traces:
        if t.truncated:
            log.error("seed %d truncated: %s", t.seed, t.failure)
    return 2 if truncated else 0


def cmd_verify(args) -> int:
    import io

    from .validation import lower_bound_suite, write_report

    records = lower_bound_suite(args.scenarios, args.seed, args.samples)
    buf = io.StringIO()
    write_report(records, buf)
    _emit(buf.getvalue(), args.out)
    failed = sum(not r.passed for r in records)
    log.info("lower bound held in %d/%d scenarios", len(records) - failed, len(records))
    return 1 if failed else 0


def cmd_timing(args) -> int:
    from .timing import scaling_probe

    values = [int(v) for v in args.values.split(",") if v.strip()]
    report = scaling_probe(args.axis, values, args.trials, fixed=args.fixed)
    _emit(report.to_csv(), args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    handler = {"run": cmd_run, "verify": cmd_verify, "timing": cmd_timing}[args.command]
    try:
        return handler(args)
    except GibbonError as exc:
        print(f"gibbon: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
