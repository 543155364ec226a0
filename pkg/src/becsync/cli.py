"""Command-line entry point ``becsync``.

    becsync <experiment> --config FILE [--set key=value]...
    becsync sweep --config FILE --axis chi=-1:0:0.01 --metric r_minus_amplitude --workers K
    becsync validate FILE

Exit status is 0 on success, 1 for configuration errors and 2 for runtime or
physics errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from . import __version__
from .config import EXPERIMENTS, ConfigError, load_config, load_file, resolve
from .experiments import available_metrics, run, sweep, write_result

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("becsync")


class _Parser(argparse.ArgumentParser):
    """Usage mistakes are configuration errors (exit 1), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: config error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="becsync", description="Two-mode synchronization experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="config file or JSON sidecar")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value (repeatable)")
    sw = sub.add_parser("sweep", help="evaluate a scalar metric over a parameter grid")
    sw.add_argument("--config", required=True)
    sw.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    sw.add_argument("--axis", action="append", metavar="NAME=START:STOP:STEP",
                    help="grid axis; give one or two")
    sw.add_argument("--metric")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--output", default=None, help="grid CSV path")
    sw.add_argument("--list-metrics", action="store_true", help="print the metric names and exit")
    va = sub.add_parser("validate", help="check a config file without running it")
    va.add_argument("file")
    return ap


def _cmd_validate(args):
    entries = load_file(args.file)
    cfg = resolve(entries)
    print(f"ok: {args.file} is a valid {cfg.experiment} config (schema_version {cfg.schema_version})")
    print(cfg.to_text(), end="")
    return EXIT_OK


def _cmd_sweep(args):
    cfg = load_config(args.config, args.set)
    if args.list_metrics:
        print("\n".join(available_metrics(cfg)))
        return EXIT_OK
    if not args.axis or not args.metric:
        raise ConfigError("sweep needs --axis and --metric")
    csv_path, meta_path = sweep(cfg, args.axis, args.metric, args.workers, args.output)
    print(f"wrote {csv_path} and {meta_path}")
    return EXIT_OK


def _cmd_run(args):
    cfg = load_config(args.config, args.set, experiment=args.command)
    t0 = time.perf_counter()
    result, errors = run(cfg)
    elapsed = time.perf_counter() - t0
    csv_path, meta_path = write_result(cfg, result, errors, elapsed)
    print(f"wrote {csv_path} and {meta_path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_run(args)
    except ConfigError as exc:
        print(f"becsync: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        log.debug("run failed", exc_info=True)
        print(f"becsync: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
