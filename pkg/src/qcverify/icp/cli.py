"""Command-line front end for the bundled delta-complete solver.

Speaks the same protocol as the dReal 4 binary so the verification
driver can use either interchangeably:

    icpsat --precision 1e-4 query.smt2

prints "unsat" or "delta-sat with delta = <d>" followed by one
"name : [lo, hi]" model line per declared variable.
"""

from __future__ import annotations

import argparse
import sys

from ..smtlib import parse_script
from .search import Budget, solve

VERSION = "icpsat 0.1.0 (delta-complete interval constraint solver)"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="icpsat", add_help=True)
    parser.add_argument("file", nargs="?", help="SMT-LIB2 input file")
    parser.add_argument("--precision", type=float, default=1e-3, help="delta precision")
    parser.add_argument("--max-boxes", type=int, default=200_000)
    parser.add_argument("--max-branches", type=int, default=60_000)
    parser.add_argument("--version", action="store_true")
    args = parser.parse_args(argv)

    if args.version:
        print(VERSION)
        return 0
    if not args.file:
        parser.error("an input file is required")
    try:
        with open(args.file, "r", encoding="utf-8") as handle:
            text = handle.read()
        script = parse_script(text)
    except Exception as exc:  # parse failures are protocol errors
        print(f"error: {exc}", file=sys.stderr)
        return 2
    budget = Budget(max_boxes=args.max_boxes, max_branches=args.max_branches)
    result = solve(script.asserts, script.decls, args.precision, budget)
    if result.verdict == "unsat":
        print("unsat")
        return 0
    if result.verdict == "delta-sat":
        print(f"delta-sat with delta = {args.precision}")
        for name in script.decls:
            interval = result.model.get(name)
            if interval is None:
                continue
            print(f"{name} : [{interval.lo!r}, {interval.hi!r}]")
        return 0
    print("unknown")
    return 2


if __name__ == "__main__":
    sys.exit(main())
