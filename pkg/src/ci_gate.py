"""src/ci_gate.py

Acceptance gate for the weight tables and the matrix certification.

What it does:
- Expands one or more reference-table globs (comma-separated, ** supported).
- Validates each reference table via src/table_validator.py.
- Regenerates every table via `src/cli.py weights` and counts the significant
  digits each computed weight shares with the reference (mantissa only for
  entries flagged mantissa_only, reporting both exponents).
- Checks the cross-table identity  on-diag w[0,2] (p=2) == off-diag w[2,1] (p=3)
  for every alpha that has both tables.
- Runs `src/cli.py verify-matrix` for on-diag p <= 10 and off-diag p <= 12.
- Writes acceptance_summary.json and exits non-zero on any failure.

Defaults:
- Scans tables/reference/**/table*.json
- Regenerated tables go to ci_tables/

Examples:
  python src/ci_gate.py
  python src/ci_gate.py --tables_glob "tables/reference/off_diag/table*.json" --min_digits 18

Exit codes:
  0 = all checks passed
  1 = no reference tables matched
  2 = one or more checks failed
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import subprocess
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from mpmath import mp

SUMMARY_JSON = "acceptance_summary.json"
HERE = os.path.dirname(os.path.abspath(__file__))

mp.dps = 60


def run_cmd(cmd: List[str]) -> Tuple[int, str, str]:
    """Run a subprocess and return (rc, stdout, stderr)."""
    p = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    out, err = p.communicate()
    return p.returncode, out, err


def expand_globs(globs_csv: str) -> List[str]:
    """Expand comma-separated globs into a sorted, de-duplicated list.

    A directory expands to <dir>/**/table*.json.
    """
    patterns = [g.strip() for g in (globs_csv or "").split(",") if g.strip()]
    files: List[str] = []

    for pat in patterns:
        p = Path(pat)
        if p.exists() and p.is_dir():
            pat = str(p / "**" / "table*.json")
        pat = pat.replace("\\\\", os.sep).replace("/", os.sep)
        files.extend(glob.glob(pat, recursive=True))

    return sorted(set(str(Path(f)) for f in files))


def _mantissa_exponent(x: Any) -> Tuple[Any, int]:
    if x == 0:
        return mp.zero, 0
    e = int(mp.floor(mp.log10(abs(x))))
    m = x / mp.mpf(10) ** e
    # log10 may land one short on exact powers of ten
    if abs(m) >= 10:
        m, e = m / 10, e + 1
    return m, e


def matching_digits(reference: str, computed: str, mantissa_only: bool = False) -> Dict[str, Any]:
    """Significant digits `computed` shares with `reference` (relative agreement)."""
    r, c = mp.mpf(reference), mp.mpf(computed)
    out: Dict[str, Any] = {"reference": reference, "computed": computed}
    if mantissa_only:
        (r, er), (c, ec) = _mantissa_exponent(r), _mantissa_exponent(c)
        out.update(reference_exponent=er, computed_exponent=ec, mantissa_only=True)
    if r == c:
        out["digits"] = 60
    elif r == 0:
        out["digits"] = 0
    else:
        out["digits"] = max(0, int(mp.floor(-mp.log10(abs(r - c) / abs(r)))))
    return out


def compare_tables(ref: Dict[str, Any], computed: Dict[str, Any]) -> List[Dict[str, Any]]:
    got = {tuple(w["gamma"]): w["value"] for w in computed["weights"]}
    rows = []
    for w in ref["weights"]:
        g = tuple(w["gamma"])
        row = matching_digits(w["value"], got[g], bool(w.get("mantissa_only", False)))
        row["gamma"] = list(g)
        rows.append(row)
    return rows


def _weight(table: Optional[Dict[str, Any]], gamma: Tuple[int, int]) -> Optional[str]:
    if table is None:
        return None
    for w in table["weights"]:
        if tuple(w["gamma"]) == gamma:
            return w["value"]
    return None


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--tables_glob", default="tables/reference/**/table*.json",
                    help="Comma-separated glob(s) for reference table JSON files.")
    ap.add_argument("--min_digits", type=int, default=15)
    ap.add_argument("--work_dir", default="ci_tables")
    ap.add_argument("--working_digits", type=int, default=50)
    ap.add_argument("--p_max_on", type=int, default=10)
    ap.add_argument("--p_max_off", type=int, default=12)
    ap.add_argument("--summary_out", default=SUMMARY_JSON)
    args = ap.parse_args()

    tables = expand_globs(args.tables_glob)
    if not tables:
        print(f"No reference tables found matching: {args.tables_glob}")
        print("  - Recursive scan: tables/reference/**/table*.json")
        return 1

    print(f"Found {len(tables)} reference table(s).")
    cli = os.path.join(HERE, "cli.py")
    all_failures: List[Dict[str, Any]] = []
    summary: Dict[str, Any] = {"tables": {}, "cross_table": [], "verify_matrix": {}}
    computed_by_key: Dict[Tuple[str, str, int], Dict[str, Any]] = {}

    for t in tables:
        rc, out, err = run_cmd([sys.executable, os.path.join(HERE, "table_validator.py"), t])
        if rc != 0:
            all_failures.append({"table": t, "stage": "validator_failed", "error": (out or err).strip()})
            continue
        with open(t, "r", encoding="utf-8") as f:
            ref = json.load(f)

        dest = os.path.join(args.work_dir, os.path.basename(t))
        rc2, out2, err2 = run_cmd([
            sys.executable, cli, "weights",
            "--kernel", ref["kernel"],
            "--alpha", ref["alpha"],
            "--p", str(ref["p"]),
            "--working-digits", str(args.working_digits),
            "--serial",
            "--out", dest,
        ])
        if rc2 != 0:
            all_failures.append({"table": t, "stage": "weights_failed", "rc": rc2, "error": (err2 or out2).strip()})
            continue

        with open(dest, "r", encoding="utf-8") as f:
            computed = json.load(f)
        computed_by_key[(ref["kernel"], ref["alpha"], int(ref["p"]))] = computed

        rows = compare_tables(ref, computed)
        worst = min(r["digits"] for r in rows)
        summary["tables"][t] = {"claimed_digits": computed["digits"], "worst_digits": worst, "weights": rows}
        status = "OK" if worst >= args.min_digits else "FAIL"
        print(f"[{status}] {t}: worst agreement {worst} digit(s), claimed {computed['digits']}")
        for r in rows:
            if r.get("mantissa_only"):
                print(f"       w{r['gamma']}: mantissa agrees to {r['digits']} digit(s); "
                      f"printed exponent {r['reference_exponent']}, computed exponent {r['computed_exponent']}")
        if worst < args.min_digits:
            all_failures.append({"table": t, "stage": "digits", "worst": worst})

    for alpha in sorted({k[1] for k in computed_by_key}):
        a = _weight(computed_by_key.get(("on_diag_x1", alpha, 2)), (0, 2))
        b = _weight(computed_by_key.get(("off_diag", alpha, 3)), (2, 1))
        if a is None or b is None:
            continue
        row = matching_digits(a, b)
        row["alpha"] = alpha
        summary["cross_table"].append(row)
        ok = row["digits"] >= args.min_digits
        print(f"[{'OK' if ok else 'FAIL'}] cross-table alpha={alpha}: on w[0,2] vs off w[2,1] agree to {row['digits']} digit(s)")
        if not ok:
            all_failures.append({"stage": "cross_table", "alpha": alpha, "digits": row["digits"]})

    for kernel, p_max in (("on-diag-x1", args.p_max_on), ("off-diag", args.p_max_off)):
        rc3, out3, err3 = run_cmd([sys.executable, cli, "verify-matrix", "--kernel", kernel, "--p-max", str(p_max)])
        summary["verify_matrix"][kernel] = {"rc": rc3, "report": out3.strip().splitlines()}
        print(f"[{'OK' if rc3 == 0 else 'FAIL'}] verify-matrix {kernel} p_max={p_max}")
        if rc3 != 0:
            all_failures.append({"stage": f"verify_matrix_{kernel}", "rc": rc3, "error": (err3 or out3).strip()})

    with open(args.summary_out, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)

    if all_failures:
        print("CI GATE FAILURES:")
        for x in all_failures:
            print(" -", x)
        return 2

    print("CI GATE: PASS")
    return 0


if __name__ == "__main__":
    sys.exit(main())
