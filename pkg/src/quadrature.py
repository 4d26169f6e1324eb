"""src/quadrature.py

Punctured-hole and corrected trapezoidal rules applied to an integrand phi:

  Q_h^p[phi s] = T_h^0[phi s] + h^(2-alpha) * sum_gamma w_gamma * sum_{beta in G_gamma} sign(beta) phi(beta h)

Double arithmetic (default) evaluates the lattice with numpy and accumulates
with math.fsum; extended arithmetic evaluates every point in mpmath and
accumulates with xprec.deterministic_sum. Both traverse the truncated index
box row-major, so serial results are bit-reproducible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath import mp

from errors import ArgumentError, TableMismatchError
from kernels import Integrand, KernelKind, check_alpha, kernel_eval, kernel_eval_np
from stencil import build_stencil
from weightgen import WeightTable, weights_at_h
from xprec import deterministic_sum, xreal

logger = logging.getLogger(__name__)

ARITHMETICS = ("double", "extended")
# log-space deviation below which the coarsest point is never treated as an outlier
OUTLIER_FLOOR = 1e-9


@dataclass(frozen=True)
class QuadratureConfig:
    h: Fraction
    truncation_radius: float
    arithmetic: str = "double"

    def __post_init__(self) -> None:
        h = self.h if isinstance(self.h, Fraction) else Fraction(str(self.h))
        object.__setattr__(self, "h", h)
        if h <= 0:
            raise ArgumentError(f"h must be > 0, got {h}")
        if self.arithmetic not in ARITHMETICS:
            raise ArgumentError(f"arithmetic must be one of {ARITHMETICS}, got {self.arithmetic!r}")
        if h > self.truncation_radius:
            raise ArgumentError(f"h = {h} exceeds truncation radius {self.truncation_radius}")

    @classmethod
    def for_integrand(cls, phi: Integrand, h: Union[Fraction, str, float], arithmetic: str = "double") -> "QuadratureConfig":
        return cls(h=h if isinstance(h, Fraction) else Fraction(str(h)), truncation_radius=phi.support_radius,
                   arithmetic=arithmetic)

    @property
    def extended(self) -> bool:
        return self.arithmetic == "extended"

    def box(self) -> int:
        """Largest |beta|_inf with |beta h|_inf <= truncation_radius."""
        return int(math.floor(Fraction(str(self.truncation_radius)) / self.h))


def punctured_rule(phi: Integrand, kernel: KernelKind, alpha: Any, cfg: QuadratureConfig) -> Any:
    """T_h^0[phi * s]; for the off-diagonal kernel this is the whole rule at p = 1."""
    check_alpha(float(alpha))
    n = cfg.box()
    if cfg.extended:
        hx = xreal(cfg.h)
        a = xreal(alpha)
        terms = []
        for b1 in range(-n, n + 1):
            x1 = b1 * hx
            for b2 in range(-n, n + 1):
                if b1 == 0 and b2 == 0:
                    continue
                x2 = b2 * hx
                v = phi(x1, x2)
                if v:
                    terms.append(v * kernel_eval(kernel, a, (x1, x2)))
        return hx * hx * deterministic_sum(terms)

    h = float(cfg.h)
    b = np.arange(-n, n + 1, dtype=float) * h
    X1, X2 = np.meshgrid(b, b, indexing="ij")
    vals = phi.eval_np(X1, X2) * kernel_eval_np(kernel, float(alpha), X1, X2)
    return h * h * math.fsum(vals.ravel().tolist())


def correction_sum(phi: Integrand, kernel: KernelKind, alpha: Any, p: int, weights: Sequence[Any],
                   cfg: QuadratureConfig) -> Any:
    """A_h^p[phi] = h^(2-alpha) * sum_gamma w_gamma * sum_{beta in G_gamma} sign(beta) phi(beta h)."""
    st = build_stencil(kernel, p)
    if len(weights) != len(st.indices):
        raise ArgumentError(f"{len(weights)} weights for a stencil of size {len(st.indices)}")

    if cfg.extended:
        hx = xreal(cfg.h)
        terms = []
        for w, group in zip(weights, st.groups):
            inner = deterministic_sum(sp.sign * phi(sp.point[0] * hx, sp.point[1] * hx) for sp in group)
            terms.append(xreal(w) * inner)
        return hx ** (2 - xreal(alpha)) * deterministic_sum(terms)

    h = float(cfg.h)
    terms = []
    for w, group in zip(weights, st.groups):
        inner = math.fsum(sp.sign * float(phi(sp.point[0] * h, sp.point[1] * h)) for sp in group)
        terms.append(float(w) * inner)
    return h ** (2.0 - float(alpha)) * math.fsum(terms)


def _check_table(table: WeightTable, kernel: KernelKind, alpha: Any) -> None:
    if table.kernel is not kernel:
        raise TableMismatchError(f"table is for {table.kernel.value}, rule requested for {kernel.value}")
    if float(table.alpha) != float(alpha):
        raise TableMismatchError(f"table alpha {table.alpha} differs from requested alpha {alpha}")


def corrected_quadrature(phi: Integrand, kernel: KernelKind, alpha: Any, table: Optional[WeightTable],
                         cfg: QuadratureConfig) -> Any:
    """Q_h^p[phi s] with the limiting weights of `table` (None: punctured rule only)."""
    T = punctured_rule(phi, kernel, alpha, cfg)
    if table is None:
        return T
    _check_table(table, kernel, alpha)
    weights = table.values() if cfg.extended else table.floats()
    return T + correction_sum(phi, kernel, alpha, table.p, weights, cfg)


def corrected_quadrature_hweights(phi: Integrand, kernel: KernelKind, alpha: Any, p: int, cfg: QuadratureConfig,
                                  k: Optional[int] = None) -> Any:
    """Q_h^p[phi s] with the finite-h weights omega(h) (generated in extended precision)."""
    weights = weights_at_h(kernel, p, alpha, cfg.h, k)
    return punctured_rule(phi, kernel, alpha, cfg) + correction_sum(phi, kernel, alpha, p, weights, cfg)


def integral_triple(phi: Integrand, alpha: Any, tables: Sequence[WeightTable], cfg: QuadratureConfig) -> Tuple[Any, Any, Any]:
    """(I11, I22, I12) from tables for on_diag_x1, on_diag_x2 and off_diag at one alpha."""
    if len(tables) != 3:
        raise ArgumentError(f"integral_triple needs three tables, got {len(tables)}")
    kinds = (KernelKind.ON_DIAG_X1, KernelKind.ON_DIAG_X2, KernelKind.OFF_DIAG)
    by_kind = {t.kernel: t for t in tables}
    if set(by_kind) != set(kinds):
        raise TableMismatchError(f"need one table per kernel, got {[t.kernel.value for t in tables]}")
    return tuple(corrected_quadrature(phi, kind, alpha, by_kind[kind], cfg) for kind in kinds)  # type: ignore[return-value]


# --- convergence studies ----------------------------------------------------

def error_sweep(phi: Integrand, kernel: KernelKind, alpha: Any, table: Optional[WeightTable],
                steps: Sequence[Fraction], reference: Any, arithmetic: str = "double") -> List[Tuple[Fraction, float]]:
    """|Q_h - reference| for each step, sorted by descending h."""
    rows = []
    for h in sorted(steps, reverse=True):
        cfg = QuadratureConfig.for_integrand(phi, h, arithmetic)
        q = corrected_quadrature(phi, kernel, alpha, table, cfg)
        err = float(abs(xreal(q) - xreal(reference)))
        logger.info("%s h=%s error=%.3e", kernel.value, h, err)
        rows.append((h, err))
    return rows


@dataclass
class SlopeFit:
    slope: float
    fit_range: Tuple[float, float]
    used: List[int]


def fit_slope(rows: Sequence[Tuple[Any, float]], floor: float) -> SlopeFit:
    """Least-squares slope of log(error) against log(h) over rows above `floor`.

    The coarsest row is dropped when it sits more than three standard
    deviations (of the remaining residuals) off the line through the other rows.
    """
    used = [i for i, (_, e) in enumerate(rows) if e > floor]
    if len(used) < 2:
        return SlopeFit(slope=float("nan"), fit_range=(float("nan"), float("nan")), used=used)

    def xy(ix: List[int]) -> Tuple[np.ndarray, np.ndarray]:
        return np.log([float(rows[i][0]) for i in ix]), np.log([rows[i][1] for i in ix])

    coef = np.polyfit(*xy(used), 1)
    if len(used) >= 4:
        coarsest = max(used, key=lambda i: float(rows[i][0]))
        rest = [u for u in used if u != coarsest]
        x, y = xy(rest)
        coef_rest = np.polyfit(x, y, 1)
        sigma = float(np.std(y - np.polyval(coef_rest, x), ddof=1))
        xc, yc = xy([coarsest])
        dev = float(abs(yc[0] - np.polyval(coef_rest, xc[0])))
        if dev > max(3 * sigma, OUTLIER_FLOOR):
            logger.debug("dropping coarsest point h=%s from the fit", rows[coarsest][0])
            used, coef = rest, coef_rest

    hs = [float(rows[i][0]) for i in used]
    return SlopeFit(slope=float(coef[0]), fit_range=(min(hs), max(hs)), used=used)
