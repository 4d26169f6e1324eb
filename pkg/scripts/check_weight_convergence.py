#!/usr/bin/env python3
"""Check that finite-h weights omega(h) approach the limiting table at the expected rate.

omega(h) solves K diag(g(gamma h)) omega = c(h) at one step. With g = exp(-|x|^k),
k = 2p+2 on the diagonal and k = 2p off it, the distance to omega_bar shrinks
like h^k.

Usage:
  python scripts/check_weight_convergence.py --kernel on-diag-x1 --alpha 0.5 --p 1
  python scripts/check_weight_convergence.py --kernel off-diag --alpha 1.5 --p 2 --steps 1/8,1/16,1/32,1/64

Exit codes:
  0 PASS (fitted order within --tol of the expected one)
  1 FAIL
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
REPO_SRC = os.path.join(REPO_ROOT, "src")
if REPO_SRC not in sys.path:
    sys.path.insert(0, REPO_SRC)

from config import PipelineConfig, parse_step  # noqa: E402
from kernels import KernelKind  # noqa: E402
from weightgen import solve_weights, weight_convergence  # noqa: E402
from xprec import working_precision  # noqa: E402


def run_check(kernel: KernelKind, alpha: str, p: int, steps, digits: int, tol: float) -> int:
    k = 2 * p + 2 if kernel.is_on_diag else 2 * p
    expected = k
    cfg = PipelineConfig(working_digits=digits)
    table = solve_weights(kernel, p, alpha, cfg)

    with working_precision(digits):
        wc = weight_convergence(kernel, p, alpha, steps, k, table.values())

    for h, e in zip(wc.steps, wc.errors):
        print(f"h={h}: |omega(h) - omega_bar| = {e:.3e}")
    print(f"fitted order {wc.fitted_order:.3f}, expected {expected}")

    if abs(wc.fitted_order - expected) <= tol:
        print("PASS: weights converge at the expected rate")
        return 0
    print("FAIL: fitted order differs from the expected rate")
    return 1


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--kernel", default="on-diag-x1")
    ap.add_argument("--alpha", default="0.5")
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--steps", default="1/16,1/32,1/64,1/128")
    ap.add_argument("--digits", type=int, default=40)
    ap.add_argument("--tol", type=float, default=0.3)
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    raise SystemExit(run_check(KernelKind.from_name(args.kernel), args.alpha, args.p,
                               [parse_step(s) for s in args.steps.split(",")], args.digits, args.tol))
