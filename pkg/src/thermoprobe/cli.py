"""Command-line entry point: ``thermoprobe {simulate,steady,heatmap,validate}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .scenarios import ConfigError, bundled_configs, cli_overrides, load_config, run

log = logging.getLogger("thermoprobe")

COMMAND_KINDS = {"simulate": "transient", "steady": "steady_sweep", "heatmap": "heatmap"}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermoprobe",
        description="Two-qubit bath thermometry: transient and steady-state QFI.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in COMMAND_KINDS.items():
        p = sub.add_parser(name, help=f"run a {kind} config and write CSV")
        p.add_argument("config", help="config file, or the name of a bundled config")
        p.add_argument("--out", default="results", help="CSV output directory")
        p.add_argument("--variant", choices=("partial", "full", "unified"))
        p.add_argument("--no-lamb-shift", action="store_true")
        p.add_argument("--series", help="run only this named series")
    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--filter", help="criterion number or check-name fragment")
    sub.add_parser("configs", help="list the bundled configs")
    return parser


def _run_scenario(args) -> int:
    overrides = cli_overrides(args.variant, args.no_lamb_shift)
    configs = load_config(args.config, overrides)
    if args.series:
        configs = [c for c in configs if c.series == args.series]
        if not configs:
            raise ConfigError(f"no series named {args.series!r}")
    expected = COMMAND_KINDS[args.command]
    for cfg in configs:
        if cfg.kind != expected:
            raise ConfigError(f"{cfg.name} is a {cfg.kind} config; "
                              f"'{args.command}' needs kind {expected!r}")
    out = Path(args.out)
    for cfg in configs:
        log.info("running %s %s", cfg.name, cfg.series)
        run(cfg, out)
        print(out / cfg.csv_name)
    return 0


def _validate(args) -> int:
    from .validation import run_checks

    report = run_checks(args.filter)
    if not report.results:
        print(f"no check matches {args.filter!r}", file=sys.stderr)
        return 1
    failed = [r.number for r in report.results if not r.passed]
    print(f"{len(report.results) - len(failed)}/{len(report.results)} criteria passed"
          + (f"; failing: {', '.join(map(str, failed))}" if failed else ""))
    return 0 if report.passed else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "validate":
            return _validate(args)
        if args.command == "configs":
            print("\n".join(bundled_configs()))
            return 0
        return _run_scenario(args)
    except (ConfigError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
