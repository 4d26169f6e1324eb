#!/usr/bin/env python3
"""hooks/validate_tables.py

Weight-table validation hook / utility.

- Supports nested table layout via recursive globs (**).
- Runs the same checks as src/table_validator.py (schema, kernel, alpha in (0, 2),
  index-set order, decimal-string values).
- Refuses binary-float weight values so tables never lose digits on a round trip.

Usage:
  python hooks/validate_tables.py
  python hooks/validate_tables.py --glob "tables/reference/on_diag/*.json"
  python hooks/validate_tables.py --glob "tables/reference/**/table*.json,tables/generated/*.json"

Exit codes:
  0 = all tables valid
  1 = no tables matched
  2 = one or more tables invalid
"""

from __future__ import annotations

import argparse
import os
import sys

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
REPO_SRC = os.path.join(REPO_ROOT, "src")
if REPO_SRC not in sys.path:
    sys.path.insert(0, REPO_SRC)

from ci_gate import expand_globs  # noqa: E402
from errors import TableFormatError  # noqa: E402
from table_validator import validate  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument(
        "--glob",
        default="tables/reference/**/table*.json,tables/generated/table*.json",
        help="Comma-separated glob(s) to weight-table JSON files.",
    )
    args = ap.parse_args()

    paths = expand_globs(args.glob)
    if not paths:
        print(f"No tables match: {args.glob}")
        return 1

    ok = 0
    bad = 0
    for p in paths:
        try:
            r = validate(p)
            print(f"[OK] {p} ({r['kernel']} alpha={r['alpha']} p={r['p']}, {r['weights']} weights)")
            ok += 1
        except TableFormatError as e:
            print(f"[FAIL] {p}: {e}")
            bad += 1

    if bad:
        print(f"\nValidation failed: {bad} table(s) failed, {ok} passed.")
        return 2

    print(f"\nValidation passed: {ok} table(s).")
    return 0


if __name__ == "__main__":
    sys.exit(main())
