"""src/table_validator.py

Validates a weight-table JSON file.

Checks:
- schema tag is present and known
- kernel is one of on_diag_x1 / on_diag_x2 / off_diag
- alpha is a decimal string in (0, 2)
- p is valid for the kernel (off_diag needs p >= 2)
- exactly one weight per index of I_p, in index-set order
- every weight value is a decimal *string* (binary floats are rejected)
- digits <= provenance.working_precision - 10 when the precision is recorded

Usage:
  python src/table_validator.py tables/reference/on_diag/table_on_diag_x1_alpha0.5_p1.json
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Dict

from mpmath import mp

from errors import QuadratureError, TableFormatError
from kernels import KernelKind
from stencil import MultiIndex, index_set

SCHEMAS = ("weight-table/1",)


def fail(msg: str) -> None:
    raise TableFormatError(msg)


def validate_table_dict(obj: Any) -> Dict[str, Any]:
    if not isinstance(obj, dict):
        fail("weight table must be a JSON object")

    if obj.get("schema") not in SCHEMAS:
        fail(f"unknown or missing schema {obj.get('schema')!r} (expected one of {SCHEMAS})")

    try:
        kernel = KernelKind.from_name(str(obj.get("kernel")))
    except QuadratureError as e:
        fail(str(e))

    alpha = obj.get("alpha")
    if not isinstance(alpha, str):
        fail("alpha must be a decimal string")
    try:
        a = mp.mpf(alpha)
    except (ValueError, TypeError):
        fail(f"alpha is not a decimal number: {alpha!r}")
    if not 0 < a < 2:
        fail(f"alpha must lie in (0, 2), got {alpha}")

    p = obj.get("p")
    if not isinstance(p, int) or isinstance(p, bool):
        fail("p must be an integer")
    try:
        idx = index_set(kernel, p)
    except QuadratureError as e:
        fail(str(e))

    digits = obj.get("digits")
    if not isinstance(digits, int) or isinstance(digits, bool) or digits < 0:
        fail("digits must be a non-negative integer")

    prov = obj.get("provenance", {})
    if not isinstance(prov, dict):
        fail("provenance must be an object")
    wp = prov.get("working_precision")
    if wp is not None and digits > int(wp) - 10:
        fail(f"digits {digits} exceed working_precision {wp} - 10")

    weights = obj.get("weights")
    if not isinstance(weights, list):
        fail("weights must be a list")
    if len(weights) != len(idx):
        fail(f"expected {len(idx)} weights for {kernel.value} p={p}, got {len(weights)}")

    for expected, w in zip(idx, weights):
        if not isinstance(w, dict):
            fail("each weight must be an object with gamma and value")
        g = w.get("gamma")
        if not isinstance(g, list) or len(g) != 2 or not all(isinstance(v, int) for v in g):
            fail(f"gamma must be a pair of integers, got {g!r}")
        if MultiIndex(*g) != expected:
            fail(f"weight order mismatch: got gamma {tuple(g)}, expected {tuple(expected)}")
        v = w.get("value")
        if not isinstance(v, str):
            fail(f"weight {tuple(g)} must be a decimal string, got {type(v).__name__}")
        try:
            mp.mpf(v)
        except (ValueError, TypeError):
            fail(f"weight {tuple(g)} is not a decimal number: {v!r}")
        if "mantissa_only" in w and not isinstance(w["mantissa_only"], bool):
            fail(f"weight {tuple(g)}: mantissa_only must be a boolean")

    return {"kernel": kernel.value, "alpha": alpha, "p": p, "digits": digits, "weights": len(weights)}


def validate(table_path: str) -> Dict[str, Any]:
    """Validate a table file; raises TableFormatError on the first problem."""
    try:
        with open(table_path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise TableFormatError(f"cannot load {table_path}: {e}") from e

    result = validate_table_dict(obj)
    result["table"] = table_path
    result["ok"] = True
    return result


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("table")
    args = ap.parse_args()

    try:
        print(json.dumps(validate(args.table), indent=2))
    except TableFormatError as e:
        print(json.dumps({"table": args.table, "ok": False, "error": str(e)}, indent=2))
        sys.exit(e.exit_code)
