"""Command line: ``entrofact run <config.json>`` and ``entrofact list [filter]``.

Exit status: 0 all checks pass, 1 some warn, 2 some fail, 64 usage or
schema error, 65 unknown experiment, 66 enumeration cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import experiments
from .exact import CapExceededError
from .reports import FAIL, WARN

EXIT_PASS, EXIT_WARN, EXIT_FAIL = 0, 1, 2
EXIT_USAGE, EXIT_UNKNOWN, EXIT_CAP = 64, 65, 66


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entrofact", description="Entropy factorization experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config", help="path to a JSON config")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--out", help="output directory for report.json and CSV series")
    ls = sub.add_parser("list", help="list experiments")
    ls.add_argument("filter", nargs="?", default="")
    return p


def _summary(report) -> str:
    lines = [f"{report.experiment} seed={report.seed}: {report.verdict}"]
    for c in report.checks:
        lines.append(f"  {c.verdict:4s}  {c.name}  worst margin {c.worst_margin:.6g}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, desc in experiments.list_experiments(args.filter):
            print(f"{name:30s} {desc}")
        return EXIT_PASS
    if args.workers is not None and args.workers < 1:
        print("entrofact: --workers must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"entrofact: cannot read config: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = experiments.run(doc, seed=args.seed, workers=args.workers, out=args.out)
    except experiments.ConfigError as e:
        print(f"entrofact: config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except experiments.UnknownExperimentError as e:
        print(f"entrofact: unknown experiment {e.args[0]!r}; see 'entrofact list'", file=sys.stderr)
        return EXIT_UNKNOWN
    except CapExceededError as e:
        print(f"entrofact: {e}", file=sys.stderr)
        return EXIT_CAP
    print(_summary(report))
    if report.verdict == FAIL:
        return EXIT_FAIL
    if report.verdict == WARN:
        return EXIT_WARN
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
