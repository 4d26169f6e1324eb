"""src/cli.py

Command-line surface for generating, verifying and applying corrected
trapezoidal rules for x_i x_j / |x|^(2+alpha) kernels.

Subcommands:
  weights        generate a limiting weight table (JSON)
  convergence    error-vs-h study of a corrected rule (CSV)
  verify-matrix  exact certification of the coefficient matrices
  integrate      apply one table (or three, for I11/I22/I12) to a built-in integrand

Examples:
  python src/cli.py weights --kernel on-diag-x1 --alpha 0.5 --p 1
  python src/cli.py convergence --kernel off-diag --alpha 1.5 --p 1,2,3 --out off_1.5.csv
  python src/cli.py verify-matrix --kernel on-diag --p-max 10
  python src/cli.py integrate --weights tables/generated/table_off_diag_alpha0.5_p3.json \
      --phi builtin:off-test --h 1/128 --compare-ref

Exit codes:
  0 = success
  2 = argument / input error
  3 = verification failure (including table kernel/alpha mismatch)
  4 = numerical non-convergence
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from mpmath import mp

from coeffmat import structure_certificate
from config import PipelineConfig, load_config, parse_step
from errors import (
    EXIT_OK,
    ArgumentError,
    QuadratureError,
    ReferenceNonConvergence,
    TableMismatchError,
    VerificationError,
)
from kernels import KernelKind, builtin_integrand, builtin_phi, check_alpha, frac_laplacian_constant
from quadrature import QuadratureConfig, corrected_quadrature, error_sweep, fit_slope, integral_triple
from refint import reference_integral
from stencil import stencil_size
from weightgen import WeightTable, alpha_text, load_table, save_table, solve_weights, table_filename
from xprec import format_xreal, parse_xreal, working_precision, xreal

logger = logging.getLogger("cli")

REPORT_SCHEMA = "convergence-report/1"
CSV_HEADER = ["p", "h", "error", "slope_fitted"]


@dataclass
class ConvergenceReport:
    kernel: KernelKind
    alpha: str
    p: int
    rows: List[Tuple[Fraction, float]]
    fitted_slope: float
    fit_range: Tuple[float, float]
    floor_threshold: float
    expected_slope: float = float("nan")
    used: List[int] = field(default_factory=list)


def _csv_list(text: str) -> List[str]:
    return [t.strip() for t in str(text).split(",") if t.strip()]


def _parse_alpha(text: str) -> str:
    a = parse_xreal(text)
    check_alpha(a)
    return alpha_text(text)


def _parse_orders(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(t) for t in _csv_list(text)]
    except ValueError as e:
        raise ArgumentError(f"--orders must be a comma-separated list of integers, got {text!r}") from e


def pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    k = getattr(args, "k", None)
    kernel = getattr(args, "kernel", None)
    overrides: Dict[str, Any] = {
        "working_digits": getattr(args, "working_digits", None),
        "h_base": getattr(args, "h_base", None),
        "levels": getattr(args, "levels", None),
        "richardson_orders": _parse_orders(getattr(args, "orders", None)),
        "digits_target": getattr(args, "digits", None),
        "workers": 1 if getattr(args, "serial", False) else getattr(args, "workers", None),
        "tables_dir": getattr(args, "tables_dir", None),
        "reference_digits": getattr(args, "reference_digits", None),
        "floor_threshold": getattr(args, "floor", None),
    }
    if k is not None and kernel is not None:
        overrides["k_on_diag" if KernelKind.from_name(kernel).is_on_diag else "k_off_diag"] = k
    return cfg.replace(**overrides)


def load_or_generate(kernel: KernelKind, alpha: str, p: int, cfg: PipelineConfig) -> WeightTable:
    path = os.path.join(cfg.tables_dir, table_filename(kernel, alpha, p))
    if os.path.exists(path):
        logger.info("using cached table %s", path)
        return load_table(path)
    logger.info("generating table %s", path)
    table = solve_weights(kernel, p, alpha, cfg)
    save_table(table, path)
    return table


# --- weights ----------------------------------------------------------------

def cmd_weights(args: argparse.Namespace) -> int:
    kernel = KernelKind.from_name(args.kernel)
    alpha = _parse_alpha(args.alpha)
    stencil_size(kernel, args.p)
    cfg = pipeline_config(args)

    table = solve_weights(kernel, args.p, alpha, cfg)
    out = args.out or os.path.join(cfg.tables_dir, table_filename(kernel, alpha, args.p))
    save_table(table, out)

    for g, v in table.weights:
        print(f"  w[{g.a},{g.b}] = {v}")
    print(f"[OK] wrote {out}")
    print(f"digits achieved: {table.digits}")
    return EXIT_OK


# --- convergence ------------------------------------------------------------

def expected_order(kernel: KernelKind, p: int, alpha: float) -> float:
    return (2 * p + 4 - alpha) if kernel.is_on_diag else (2 * p + 2 - alpha)


def convergence_reports(kernel: KernelKind, alpha: str, p_list: Sequence[int], steps: Sequence[Fraction],
                        phi_name: str, cfg: PipelineConfig, arithmetic: str = "double") -> List[ConvergenceReport]:
    phi = builtin_integrand(phi_name, cfg.working_digits) if phi_name else builtin_phi(kernel)
    ref = reference_integral(phi, kernel, alpha, cfg.reference_digits)
    logger.info("reference %s = %s (+- %s)", phi.name, mp.nstr(ref.value, 20), mp.nstr(ref.estimated_error, 3))

    reports = []
    for p in p_list:
        if not kernel.is_on_diag and p == 1:
            table = None
        else:
            table = load_or_generate(kernel, alpha, p, cfg)
        with working_precision(cfg.working_digits):
            rows = error_sweep(phi, kernel, alpha, table, steps, ref.value, arithmetic)
        floor = cfg.floor_threshold if arithmetic == "double" else 0.0
        fit = fit_slope(rows, floor)
        reports.append(ConvergenceReport(
            kernel=kernel, alpha=alpha, p=p, rows=rows, fitted_slope=fit.slope, fit_range=fit.fit_range,
            floor_threshold=floor, expected_slope=expected_order(kernel, p, float(alpha)), used=fit.used,
        ))
    return reports


def write_report_csv(reports: Sequence[ConvergenceReport], path: str, phi_name: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if reports:
            r0 = reports[0]
            f.write(f"# schema={REPORT_SCHEMA} kernel={r0.kernel.value} alpha={r0.alpha} phi={phi_name} "
                    f"floor={r0.floor_threshold!r}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rep in reports:
            for h, err in rep.rows:
                w.writerow([rep.p, repr(float(h)), repr(err), f"{rep.fitted_slope:.6f}"])


def read_report_csv(path: str) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def cmd_convergence(args: argparse.Namespace) -> int:
    kernel = KernelKind.from_name(args.kernel)
    alpha = _parse_alpha(args.alpha)
    cfg = pipeline_config(args)
    p_list = [int(p) for p in _csv_list(args.p)]
    steps = [parse_step(h) for h in _csv_list(args.h_list)] if args.h_list else cfg.h_list
    phi_name = args.phi or builtin_phi(kernel).name

    reports = convergence_reports(kernel, alpha, p_list, steps, phi_name, cfg, args.mode)
    for rep in reports:
        print(f"p={rep.p} slope={rep.fitted_slope:.3f} expected={rep.expected_slope:.3f} "
              f"fit_range=[{rep.fit_range[0]:.3g}, {rep.fit_range[1]:.3g}] points={len(rep.used)}")

    if args.out:
        write_report_csv(reports, args.out, phi_name)
        print(f"[OK] wrote {args.out}")
    return EXIT_OK


# --- verify-matrix ----------------------------------------------------------

def cmd_verify_matrix(args: argparse.Namespace) -> int:
    kernel = KernelKind.from_name(args.kernel)
    p_min = 1 if kernel.is_on_diag else 2
    if args.p_max < p_min:
        raise ArgumentError(f"--p-max must be >= {p_min} for {kernel.cli_name}")

    results = []
    failed = []
    for p in range(p_min, args.p_max + 1):
        r = structure_certificate(kernel, p, trials=args.trials, seed=args.seed)
        results.append(r)
        ok = r["det_nonzero"] and r["structure_ok"] and r["ratio_constant"] is not False
        ratio = "n/a" if r["ratio_constant"] is None else ("constant(" + r["ratio"] + ")" if r["ratio_constant"] else "VARIES")
        print(f"[{'OK' if ok else 'FAIL'}] {kernel.cli_name} p={p} N={r['N']} "
              f"nonsingular={'yes' if r['det_nonzero'] else 'NO'} "
              f"structure={'ok' if r['structure_ok'] else 'BROKEN'} ratio={ratio} cond={r['condition']:.3e}")
        if not ok:
            failed.append(p)

    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump({"schema": "matrix-certificate/1", "kernel": kernel.value, "seed": args.seed,
                       "trials": args.trials, "results": results}, f, indent=2)
            f.write("\n")

    if failed:
        raise VerificationError(f"structure checks failed for p = {failed}")
    print("VERIFY MATRIX: PASS")
    return EXIT_OK


# --- integrate --------------------------------------------------------------

def cmd_integrate(args: argparse.Namespace) -> int:
    tables = [load_table(p) for p in args.weights]
    alpha = tables[0].alpha
    if args.alpha is not None and float(_parse_alpha(args.alpha)) != float(alpha):
        raise TableMismatchError(f"--alpha {args.alpha} does not match table alpha {alpha}")
    h = parse_step(args.h)
    digits = args.working_digits or PipelineConfig().working_digits

    with working_precision(digits):
        if len(tables) == 3:
            phi = builtin_integrand(args.phi, digits) if args.phi else builtin_phi(KernelKind.ON_DIAG_X1)
            cfg = QuadratureConfig.for_integrand(phi, h, args.mode)
            i11, i22, i12 = integral_triple(phi, alpha, tables, cfg)
            print(f"I11 = {_fmt(i11)}")
            print(f"I22 = {_fmt(i22)}")
            print(f"I12 = {_fmt(i12)}")
            print(f"C(2,alpha) = {format_xreal(frac_laplacian_constant(2, parse_xreal(alpha)), 20)}")
            return EXIT_OK
        if len(tables) != 1:
            raise ArgumentError(f"--weights takes one table, or three for the integral triple; got {len(tables)}")

        table = tables[0]
        kernel = table.kernel
        if args.kernel is not None and KernelKind.from_name(args.kernel) is not kernel:
            raise TableMismatchError(f"--kernel {args.kernel} does not match table kernel {kernel.value}")
        phi = builtin_integrand(args.phi, digits) if args.phi else builtin_phi(kernel)
        cfg = QuadratureConfig.for_integrand(phi, h, args.mode)
        q = corrected_quadrature(phi, kernel, alpha, table, cfg)
        print(f"Q = {_fmt(q)}")

    if args.compare_ref:
        ref = reference_integral(phi, kernel, alpha, args.reference_digits)
        print(f"reference = {format_xreal(ref.value, args.reference_digits)}")
        print(f"abs error = {float(abs(xreal(q) - ref.value)):.3e}")
    return EXIT_OK


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return format_xreal(v, 30)


# --- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cli.py", description="Corrected trapezoidal rules for weakly singular integrals")
    ap.add_argument("--config", default=None, help="YAML pipeline config (default configs/pipeline.yml)")
    ap.add_argument("--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def pipeline_flags(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--working-digits", type=int, default=None)
        sp.add_argument("--k", type=int, default=None, help="regularizer exponent (even)")
        sp.add_argument("--serial", action="store_true", help="single process, bit-reproducible")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--tables-dir", default=None)
        sp.add_argument("--out", default=None)

    w = sub.add_parser("weights", help="generate a limiting weight table")
    w.add_argument("--kernel", required=True)
    w.add_argument("--alpha", required=True)
    w.add_argument("--p", type=int, required=True)
    w.add_argument("--h-base", default=None)
    w.add_argument("--levels", type=int, default=None)
    w.add_argument("--orders", default=None, help="comma-separated Richardson orders")
    w.add_argument("--digits", type=int, default=None, help="digits wanted; fewer achieved is warned about")
    pipeline_flags(w)
    w.set_defaults(func=cmd_weights)

    c = sub.add_parser("convergence", help="error-vs-h study")
    c.add_argument("--kernel", required=True)
    c.add_argument("--alpha", required=True)
    c.add_argument("--p", required=True, help="comma-separated orders, e.g. 0,1,2")
    c.add_argument("--h-list", default=None, help="comma-separated steps, e.g. 1/8,1/16")
    c.add_argument("--phi", default=None, help="integrand name (default: built-in test for the kernel)")
    c.add_argument("--mode", choices=("double", "extended"), default="double")
    c.add_argument("--floor", type=float, default=None)
    c.add_argument("--reference-digits", type=int, default=None)
    pipeline_flags(c)
    c.set_defaults(func=cmd_convergence)

    v = sub.add_parser("verify-matrix", help="exact structure certification of K")
    v.add_argument("--kernel", required=True)
    v.add_argument("--p-max", type=int, required=True)
    v.add_argument("--trials", type=int, default=5)
    v.add_argument("--seed", type=int, default=0, help="seed of the random det-factorization trials")
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify_matrix)

    i = sub.add_parser("integrate", help="apply a weight table to an integrand")
    i.add_argument("--weights", action="append", required=True, help="table JSON (give three for the triple)")
    i.add_argument("--phi", default=None)
    i.add_argument("--h", required=True)
    i.add_argument("--mode", choices=("double", "extended"), default="double")
    i.add_argument("--kernel", default=None, help="assert the table kernel")
    i.add_argument("--alpha", default=None, help="assert the table alpha")
    i.add_argument("--compare-ref", action="store_true")
    i.add_argument("--reference-digits", type=int, default=16)
    i.add_argument("--working-digits", type=int, default=None)
    i.set_defaults(func=cmd_integrate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.func(args))
    except QuadratureError as e:
        print(f"[FAIL] {e}", file=sys.stderr)
        if isinstance(e, ReferenceNonConvergence) and e.best is not None:
            print(f"best estimate = {format_xreal(e.best, 20)}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
