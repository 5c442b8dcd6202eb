"""``mathphys <scenario> [--key value]... [--format json|csv] [--out PATH] [--seed N]``.

Exit status: 0 on success, 1 when the scenario reports ``pass = false``,
2 on usage or flag errors.
"""
from __future__ import annotations

import argparse
import sys

from .emit import emit
from .errors import FlagParseError, UsageError, WorkbenchError
from .scenarios import REGISTRY, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mathphys", description="Run a named numerical scenario and emit its result.")
    sub = parser.add_subparsers(dest="scenario", metavar="scenario", required=True)
    for name in sorted(REGISTRY):
        sc = REGISTRY[name]
        p = sub.add_parser(name, help=sc.help, description=sc.help)
        for key, (_, default) in sc.params.items():
            p.add_argument(f"--{key}", dest=f"flag_{key}", metavar="VALUE", help=f"default {default}")
        p.add_argument("--seed", help="random seed (required for randomized scenarios)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", metavar="PATH", help="output file (default: standard output)")
        p.add_argument(
            "--no-runtime", action="store_true", help="report runtime_ms as 0 so that repeated runs are byte-identical"
        )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {k[len("flag_"):]: v for k, v in vars(args).items() if k.startswith("flag_") and v is not None}
    if args.seed is not None:
        flags["seed"] = args.seed
    try:
        result = run_scenario(args.scenario, flags, timed=not args.no_runtime)
    except (FlagParseError, UsageError) as exc:
        print(f"mathphys {args.scenario}: error: {exc}", file=sys.stderr)
        return 2
    except WorkbenchError as exc:
        print(f"mathphys {args.scenario}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    try:
        text = emit(result, args.format, args.out)
    except OSError as exc:
        print(f"mathphys: cannot write {args.out}: {exc}", file=sys.stderr)
        return 2
    if args.out is None:
        sys.stdout.write(text)
    return 0 if result.passed is not False else 1


if __name__ == "__main__":
    sys.exit(main())
