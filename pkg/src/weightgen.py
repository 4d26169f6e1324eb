"""src/weightgen.py

Limiting correction weights of the corrected trapezoidal rules.

Pipeline (per kernel, order p, alpha):
  1. moment residuals c(h) at h_base, h_base/2, ... (one value per index xi)
       c_i(h) = (I[g s x^(2 xi)] - T_h^0[g s x^(2 xi)]) / h^(2|xi|+2-alpha)     on-diagonal
       c_i(h) = (I[g s12 x^(2 xi-e1-e2)] - T_h^0[...]) / h^(2|xi|-alpha)        off-diagonal
     with g = exp(-|x|^k) and I the closed-form moment
  2. Richardson extrapolation of c(h) to h -> 0
  3. K omega_bar = c_bar solved in extended precision

The lattice sums of step 1 are evaluated in scaled integer form:
  T_h^0[g s x^(2 xi)] = h^(|e|-alpha) * sum_{beta != 0} g(beta h) beta^e / |beta|^(2+alpha)
where e is the even monomial exponent of the row, so each point needs one
exp/log pair however many indices there are.
"""

from __future__ import annotations

import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath import mp

from coeffmat import build_K
from config import PipelineConfig
from errors import ArgumentError, TableFormatError, TruncationWarning
from kernels import (
    Integrand,
    KernelKind,
    check_alpha,
    check_k,
    kernel_eval,
    moment_integral,
    regularizer_g,
    truncation_radius,
)
from stencil import MultiIndex, build_stencil, stencil_size
from xprec import (
    XReal,
    current_digits,
    deterministic_sum,
    format_xreal,
    lu_solve,
    parse_xreal,
    working_precision,
    xreal,
)

logger = logging.getLogger(__name__)

TABLE_SCHEMA = "weight-table/1"
CHUNK_ROWS = 16

Step = Union[Fraction, XReal, float]


def alpha_text(alpha: Any) -> str:
    """Decimal string for alpha as it is stored in tables."""
    if isinstance(alpha, str):
        parse_xreal(alpha)
        return alpha.strip()
    if isinstance(alpha, float):
        return repr(alpha)
    return mp.nstr(xreal(alpha), 30)


def _step(h: Step) -> Fraction:
    if isinstance(h, Fraction):
        return h
    return Fraction(str(h)) if isinstance(h, str) else Fraction(float(h))


@dataclass
class MomentResidual:
    kernel: KernelKind
    alpha: XReal
    p: int
    h: Fraction
    values: List[XReal]

    def __post_init__(self) -> None:
        n = stencil_size(self.kernel, self.p)
        if len(self.values) != n:
            raise ArgumentError(f"moment residual has {len(self.values)} values, expected {n}")


@dataclass
class WeightTable:
    kernel: KernelKind
    alpha: str
    p: int
    digits: int
    weights: List[Tuple[MultiIndex, str]]
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        idx = build_stencil(self.kernel, self.p).indices
        got = [MultiIndex(*g) for g, _ in self.weights]
        if got != list(idx):
            raise TableFormatError(f"table indices {got} do not match index set {list(idx)}")
        wp = self.provenance.get("working_precision")
        if wp is not None and self.digits > int(wp) - 10:
            raise TableFormatError(f"claimed digits {self.digits} exceed working precision {wp} - 10")

    def values(self) -> List[XReal]:
        return [parse_xreal(v) for _, v in self.weights]

    def floats(self) -> List[float]:
        return [float(v) for _, v in self.weights]

    def weight_map(self) -> Dict[MultiIndex, str]:
        return {g: v for g, v in self.weights}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": TABLE_SCHEMA,
            "kernel": self.kernel.value,
            "alpha": self.alpha,
            "p": self.p,
            "digits": self.digits,
            "weights": [{"gamma": [g.a, g.b], "value": v} for g, v in self.weights],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, obj: Dict[str, Any]) -> "WeightTable":
        from table_validator import validate_table_dict

        validate_table_dict(obj)
        return cls(
            kernel=KernelKind.from_name(obj["kernel"]),
            alpha=str(obj["alpha"]),
            p=int(obj["p"]),
            digits=int(obj["digits"]),
            weights=[(MultiIndex(*w["gamma"]), str(w["value"])) for w in obj["weights"]],
            provenance=dict(obj.get("provenance", {})),
        )


def save_table(table: WeightTable, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(table.to_dict(), f, indent=2)
        f.write("\n")


def load_table(path: str) -> WeightTable:
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except OSError as e:
        raise TableFormatError(f"cannot read weight table {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise TableFormatError(f"weight table {path} is not JSON: {e}") from e
    return WeightTable.from_dict(obj)


def table_filename(kernel: KernelKind, alpha: Any, p: int) -> str:
    return f"table_{kernel.value}_alpha{alpha_text(alpha)}_p{p}.json"


# --- punctured-hole trapezoidal rule ----------------------------------------

def punctured_trapz(f: Integrand, h: Step, radius: Any) -> XReal:
    """T_h^0[f] = h^2 * sum of f(beta h) over 0 < |beta h|_inf <= radius, in row-major order."""
    hx = xreal(_step(h))
    if hx <= 0:
        raise ArgumentError(f"step must be > 0, got {h}")
    if float(radius) < f.support_radius:
        warnings.warn(
            f"truncation radius {float(radius):.4g} is inside the support of {f.name} ({f.support_radius:.4g})",
            TruncationWarning,
            stacklevel=2,
        )
    n = int(mp.floor(xreal(radius) / hx))
    terms = []
    for b1 in range(-n, n + 1):
        x1 = b1 * hx
        for b2 in range(-n, n + 1):
            if b1 == 0 and b2 == 0:
                continue
            terms.append(f(x1, b2 * hx))
    return hx * hx * deterministic_sum(terms)


def row_monomial(kernel: KernelKind, xi: MultiIndex) -> Tuple[int, int]:
    """Exponent e with s(x) x^(2 xi) = x^e / |x|^(2+alpha) (s12 x^(2 xi - e1 - e2) off-diagonal)."""
    a, b = 2 * xi[0], 2 * xi[1]
    if kernel is KernelKind.ON_DIAG_X1:
        return a + 2, b
    if kernel is KernelKind.ON_DIAG_X2:
        return a, b + 2
    return a, b


def moment_integrand(kernel: KernelKind, xi: MultiIndex, alpha: Any, k: int) -> Integrand:
    """g * s * x^(2 xi) (on-diagonal) or g * s12 * x^(2 xi - e1 - e2) (off-diagonal)."""
    alpha = xreal(alpha)
    e1, e2 = (2 * xi[0], 2 * xi[1]) if kernel.is_on_diag else (2 * xi[0] - 1, 2 * xi[1] - 1)

    def f(x1: Any, x2: Any) -> Any:
        return regularizer_g(k, (x1, x2)) * kernel_eval(kernel, alpha, (x1, x2)) * x1 ** e1 * x2 ** e2

    def f_np(X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
        raise NotImplementedError("moment integrands are evaluated in extended precision only")

    return Integrand(
        name=f"g{k}*{kernel.value}*x^{(e1, e2)}",
        eval_scalar=f,
        eval_np=f_np,
        support_radius=truncation_radius(k, current_digits()),
        smoothness_note="singular at 0",
        support_shape="disc",
    )


def _chunk_sums(job: Tuple[int, int, Tuple[Tuple[int, int], ...], str, int, Fraction, int]) -> List[tuple]:
    """Partial lattice sums over rows u in [u_lo, u_hi) of the octant u >= v >= 0.

    Each octant point stands for its orbit under sign flips and x1 <-> x2; the
    exponents are even, so the orbit sum is a multiplicity times monomials.
    Returns raw mpf tuples so the result pickles across processes.
    """
    u_lo, u_hi, exps, alpha_str, k, h, dps = job
    with mp.workdps(dps):
        alpha = mp.mpf(alpha_str)
        s = 1 + alpha / 2
        kh = k // 2
        hk = mp.mpf(h.numerator) ** k / mp.mpf(h.denominator) ** k
        cutoff = Fraction(math.ceil((dps + 5) * math.log(10.0) * 1e6), 10 ** 6) / (h ** k)
        emax = max(max(e) for e in exps)
        acc: List[List[Any]] = [[] for _ in exps]
        for u in range(u_lo, u_hi):
            pu = [u ** j for j in range(emax + 1)]
            for v in range(0, u + 1):
                if u == 0:
                    break
                n = u * u + v * v
                nk = n ** kh
                if nk > cutoff:
                    break
                w = mp.exp(-hk * nk - s * mp.log(n))
                pv = [v ** j for j in range(emax + 1)]
                mult = (2 if u else 1) * (2 if v else 1)
                for i, (e1, e2) in enumerate(exps):
                    mono = pu[e1] * pv[e2]
                    if u != v:
                        mono += pv[e1] * pu[e2]
                    if mono:
                        acc[i].append(w * (mult * mono))
        return [mp.fsum(a)._mpf_ for a in acc]


def _lattice_sums(exps: Sequence[Tuple[int, int]], alpha: XReal, k: int, h: Fraction, workers: int = 1) -> List[XReal]:
    """S_i = sum over beta != 0 of g(beta h) beta^(e_i) / |beta|^(2+alpha), truncated where g < 10^-(d+5)."""
    dps = current_digits()
    umax = int(truncation_radius(k, dps) / h) + 1
    alpha_str = mp.nstr(alpha, dps + 5)
    jobs = [
        (lo, min(lo + CHUNK_ROWS, umax + 1), tuple(exps), alpha_str, k, h, dps)
        for lo in range(0, umax + 1, CHUNK_ROWS)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_sums, jobs))
    else:
        parts = [_chunk_sums(j) for j in jobs]

    return [deterministic_sum(mp.make_mpf(part[i]) for part in parts) for i in range(len(exps))]


def c_vector(kernel: KernelKind, p: int, alpha: Any, h: Step, k: int, workers: int = 1,
             method: str = "lattice") -> MomentResidual:
    """Moment residuals c(h) for every index of I_p.

    method="lattice" uses the scaled integer lattice sums; method="direct"
    evaluates the punctured rule on g * s * x^(2 xi) point by point.
    """
    alpha = xreal(alpha)
    check_alpha(alpha)
    k = check_k(k)
    hf = _step(h)
    st = build_stencil(kernel, p)
    exps = [row_monomial(kernel, xi) for xi in st.indices]
    hx = xreal(hf)

    if method == "lattice":
        sums = _lattice_sums(exps, alpha, k, hf, workers)
        values = [
            moment_integral(kernel, xi, alpha, k) / hx ** (e[0] + e[1] - alpha) - S
            for xi, e, S in zip(st.indices, exps, sums)
        ]
    elif method == "direct":
        radius = truncation_radius(k, current_digits())
        values = []
        for xi, e in zip(st.indices, exps):
            scale = hx ** (e[0] + e[1] - alpha)
            T = punctured_trapz(moment_integrand(kernel, xi, alpha, k), hf, radius)
            values.append((moment_integral(kernel, xi, alpha, k) - T) / scale)
    else:
        raise ArgumentError(f"unknown c_vector method {method!r}")

    logger.debug("c(h=%s) for %s p=%d: %s", hf, kernel.value, p, [mp.nstr(v, 12) for v in values])
    return MomentResidual(kernel=kernel, alpha=alpha, p=st.p, h=hf, values=values)


# --- Richardson extrapolation -----------------------------------------------

Vector = Sequence[XReal]


def _as_vector(level: Union[MomentResidual, Vector]) -> List[XReal]:
    return list(level.values) if isinstance(level, MomentResidual) else [xreal(v) for v in level]


def richardson_columns(levels: Sequence[Union[MomentResidual, Vector]], orders: Sequence[int]) -> List[List[List[XReal]]]:
    """Full Richardson tableau; column j has len(levels) - j entries, the last being the finest."""
    if len(levels) < len(orders) + 1:
        raise ArgumentError(f"{len(orders)} order(s) need at least {len(orders) + 1} levels, got {len(levels)}")
    vals = [_as_vector(l) for l in levels]
    if len({len(v) for v in vals}) != 1:
        raise ArgumentError("Richardson levels have mismatched lengths")
    steps = [l.h for l in levels if isinstance(l, MomentResidual)]
    if len(steps) == len(levels) and any(a != 2 * b for a, b in zip(steps, steps[1:])):
        raise ArgumentError(f"Richardson levels must halve h each time, got {[str(s) for s in steps]}")

    cols = [vals]
    for order in orders:
        f = mp.mpf(2) ** int(order) - 1
        prev = cols[-1]
        cols.append([[b + (b - a) / f for a, b in zip(prev[i], prev[i + 1])] for i in range(len(prev) - 1)])
    return cols


def richardson(levels: Sequence[Union[MomentResidual, Vector]], orders: Sequence[int]) -> List[XReal]:
    """Eliminate h^o for each o in orders; extrapolant at the finest level."""
    return richardson_columns(levels, orders)[-1][-1]


# --- weights ----------------------------------------------------------------

def solve_limit_system(kernel: KernelKind, p: int, c: Vector) -> List[XReal]:
    K = build_K(kernel, p)
    return lu_solve(K.rows(), list(c))


def _claimed_digits(omega: Vector, other: Vector, ceiling: int) -> int:
    scale = max(abs(w) for w in omega)
    diff = max(abs(a - b) for a, b in zip(omega, other))
    if diff == 0 or scale == 0:
        return ceiling
    return max(0, min(ceiling, int(mp.floor(-mp.log10(diff / scale))) - 1))


def solve_weights(kernel: KernelKind, p: int, alpha: Any, config: Optional[PipelineConfig] = None) -> WeightTable:
    """Limiting weights omega_bar with K omega_bar = lim c(h)."""
    config = config or PipelineConfig()
    a_text = alpha_text(alpha)

    if kernel is KernelKind.ON_DIAG_X2:
        t1 = solve_weights(KernelKind.ON_DIAG_X1, p, a_text, config)
        by_index = t1.weight_map()
        idx = build_stencil(kernel, p).indices
        return WeightTable(
            kernel=kernel, alpha=t1.alpha, p=t1.p, digits=t1.digits,
            weights=[(g, by_index[g.swapped()]) for g in idx],
            provenance=dict(t1.provenance, derived_from=KernelKind.ON_DIAG_X1.value),
        )

    d = config.working_digits
    k = config.regularizer_k(kernel.is_on_diag)
    orders = config.orders_for(k)
    steps = [config.h_base / 2 ** i for i in range(config.levels)]

    with working_precision(d):
        a = parse_xreal(a_text)
        check_alpha(a)
        levels = []
        for h in steps:
            logger.info("c(h) %s p=%d alpha=%s h=%s", kernel.value, p, a_text, h)
            levels.append(c_vector(kernel, p, a, h, k, workers=config.workers))

        cols = richardson_columns(levels, orders)
        final = cols[-1][-1]
        other = cols[-1][-2] if len(cols[-1]) >= 2 else cols[-2][-1]

        omega = solve_limit_system(kernel, p, final)
        omega_other = solve_limit_system(kernel, p, other)
        digits = _claimed_digits(omega, omega_other, d - 10)
        if digits < config.digits_target:
            logger.warning(
                "%s p=%d alpha=%s: extrapolation agrees to %d digits only (wanted %d)",
                kernel.value, p, a_text, digits, config.digits_target,
            )

        st = build_stencil(kernel, p)
        weights = [(g, format_xreal(w, d - 10)) for g, w in zip(st.indices, omega)]

    return WeightTable(
        kernel=kernel,
        alpha=a_text,
        p=st.p,
        digits=digits,
        weights=weights,
        provenance={
            "h_base": str(config.h_base),
            "levels": config.levels,
            "richardson_orders": list(orders),
            "richardson_stages": len(orders),
            "working_precision": d,
            "k": k,
        },
    )


def weights_at_h(kernel: KernelKind, p: int, alpha: Any, h: Step, k: Optional[int] = None,
                 workers: int = 1) -> List[XReal]:
    """Finite-h weights: K G(h) omega(h) = c(h), G(h) = diag(g(gamma_j h))."""
    if k is None:
        k = PipelineConfig().regularizer_k(kernel.is_on_diag)
    alpha = xreal(alpha)
    c = c_vector(kernel, p, alpha, h, k, workers=workers)
    K = build_K(kernel, p)
    hx = xreal(c.h)
    gs = [regularizer_g(k, (g.a * hx, g.b * hx)) for g in K.stencil.indices]
    KG = [[K.entries[i][j] * gs[j] for j in range(K.size)] for i in range(K.size)]
    return lu_solve(KG, c.values)


@dataclass
class WeightConvergence:
    kernel: KernelKind
    p: int
    k: int
    steps: List[Fraction]
    errors: List[float]
    fitted_order: float


def weight_convergence(kernel: KernelKind, p: int, alpha: Any, steps: Sequence[Step], k: int,
                       omega_bar: Vector) -> WeightConvergence:
    """Fitted order of |omega(h) - omega_bar|_2 over the given steps."""
    hs = [_step(h) for h in steps]
    errs = []
    for h in hs:
        w = weights_at_h(kernel, p, alpha, h, k)
        errs.append(float(mp.sqrt(deterministic_sum((a - xreal(b)) ** 2 for a, b in zip(w, omega_bar)))))
        logger.info("|omega(h) - omega_bar| at h=%s: %.3e", h, errs[-1])
    slope = np.polyfit(np.log([float(h) for h in hs]), np.log(errs), 1)[0]
    return WeightConvergence(kernel=kernel, p=p, k=k, steps=hs, errors=errs, fitted_order=float(slope))
