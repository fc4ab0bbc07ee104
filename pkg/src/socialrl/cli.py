"""Command line interface.

Exit codes: 0 success, 2 configuration or validation failure, 3 runtime
numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import load_config, validate_config
from .errors import ConfigurationError, ModelError, NumericError, TopologyError
from .harness import run_paired, run_sweep, terminal_metrics, write_run_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="socialrl",
                                     description="paired decentralized-learning simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="one paired run, CSV trace to --out")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, required=True)
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--stride", type=int, default=None,
                       help="record every Nth step (default: config record_stride)")

    sweep_p = sub.add_parser("sweep", help="grid of paired runs over drift values and seeds")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--eps", required=True, help="comma separated drift values")
    sweep_p.add_argument("--seeds", type=int, required=True, help="number of seeds (0..n-1)")
    sweep_p.add_argument("--out", required=True)
    sweep_p.add_argument("--stride", type=int, default=None)
    sweep_p.add_argument("--jobs", type=int, default=1)

    check_p = sub.add_parser("check-assumptions", help="validate a config against every assumption")
    check_p.add_argument("--config", required=True)

    sub.add_parser("version", help="print the package version")
    return parser


def _validated_config(path):
    cfg = load_config(path)
    checks = validate_config(cfg)
    failed = [c for c in checks if not c.passed]
    if failed:
        for check in failed:
            print(str(check), file=sys.stderr)
        raise ConfigurationError(f"{len(failed)} assumption check(s) failed")
    return cfg


def _cmd_run(args) -> int:
    cfg = _validated_config(args.config)
    result = run_paired(cfg, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stride = cfg.record_stride if args.stride is None else args.stride
    path = out_dir / f"run-{result.run_id}.csv"
    write_run_csv(path, result, stride)
    print(f"wrote {path}")
    for name, value in terminal_metrics(result).items():
        print(f"  {name} = {value:.6g}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _validated_config(args.config)
    try:
        eps_values = [float(tok) for tok in args.eps.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad --eps list {args.eps!r}: {exc}")
    if not eps_values:
        raise ConfigurationError("--eps list is empty")
    if args.seeds < 1:
        raise ConfigurationError("--seeds must be positive")
    csv_path, summary_path, _ = run_sweep(
        cfg, eps_values, args.seeds, args.out, stride=args.stride, jobs=args.jobs
    )
    print(f"wrote {csv_path}")
    print(f"wrote {summary_path}")
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    checks = validate_config(cfg)
    for check in checks:
        print(str(check))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CONFIG


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "check-assumptions":
            return _cmd_check(args)
        if args.command == "version":
            print(__version__)
            return EXIT_OK
    except (ConfigurationError, TopologyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
