"""src/refint.py

Reference values of  I = int phi(x) s(x) dx  in polar coordinates.

With x = r (cos t, sin t) the integrand becomes phi * r^(1-alpha) * a(t), where
a(t) = cos^2 t, sin^2 t or cos t sin t. The substitution u = r^(2-alpha) turns
r^(1-alpha) dr into du / (2-alpha), so the radial integrand is bounded at 0.

  radial  : mpmath tanh-sinh on [0, R(t)^(2-alpha)]
  angular : Gauss-Legendre panels split at the support corners, halved until
            the panel estimate meets the tolerance
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Tuple

from mpmath import mp

from errors import ReferenceNonConvergence
from kernels import Integrand, KernelKind, check_alpha, monomial_integrand, regularizer_integrand
from stencil import MultiIndex
from xprec import XReal, working_precision, xreal

logger = logging.getLogger(__name__)

GUARD_DIGITS = 8
MAX_SUBDIVISIONS = 5


@dataclass
class ReferenceResult:
    value: XReal
    estimated_error: XReal
    subdivisions: int


def angular_factor(kernel: KernelKind) -> Callable[[XReal], XReal]:
    if kernel is KernelKind.ON_DIAG_X1:
        return lambda t: mp.cos(t) ** 2
    if kernel is KernelKind.ON_DIAG_X2:
        return lambda t: mp.sin(t) ** 2
    return lambda t: mp.cos(t) * mp.sin(t)


def _breaks(phi: Integrand) -> List[XReal]:
    """Panel ends over one turn; square supports break at their corners."""
    q = mp.pi / 4
    if phi.support_shape == "square":
        return [q * j for j in (-1, 1, 3, 5, 7)]
    return [2 * q * j for j in range(5)]


def _refine(points: List[XReal], times: int) -> List[XReal]:
    out = [points[0]]
    for a, b in zip(points, points[1:]):
        out += [a + (b - a) * i / times for i in range(1, times + 1)]
    return out


def _outer_radius(phi: Integrand, c: XReal, s: XReal) -> XReal:
    R = xreal(phi.support_radius)
    if phi.support_shape == "square":
        return R / max(abs(c), abs(s))
    return R


def reference_integral(phi: Integrand, kernel: KernelKind, alpha: Any, target_digits: int,
                       max_subdivisions: int = MAX_SUBDIVISIONS) -> ReferenceResult:
    """int phi * s over the plane to about `target_digits` digits."""
    dps = int(target_digits) + GUARD_DIGITS
    with working_precision(dps):
        a = xreal(alpha)
        check_alpha(a)
        sub = 2 - a
        expo = 1 / sub
        ang = angular_factor(kernel)
        inner_cache: Dict[XReal, Tuple[XReal, XReal]] = {}

        def inner(t: XReal) -> XReal:
            if t not in inner_cache:
                c, s = mp.cos(t), mp.sin(t)
                umax = _outer_radius(phi, c, s) ** sub

                def radial(u: XReal) -> XReal:
                    r = u ** expo
                    return phi(r * c, r * s)

                v, e = mp.quad(radial, [0, umax], error=True)
                inner_cache[t] = (v / sub, e / sub)
            return inner_cache[t][0]

        def outer(t: XReal) -> XReal:
            return ang(t) * inner(t)

        def outer_abs(t: XReal) -> XReal:
            return abs(ang(t) * inner(t))

        tol = mp.mpf(10) ** (-int(target_digits))
        base = _breaks(phi)
        best = None
        for level in range(max_subdivisions + 1):
            pts = _refine(base, 2 ** level)
            value, err = mp.quad(outer, pts, method="gauss-legendre", error=True)
            scale = mp.quad(outer_abs, pts, method="gauss-legendre")
            inner_err = max((e for _, e in inner_cache.values()), default=mp.zero)
            est = abs(err) + 2 * mp.pi * inner_err
            panels = len(pts) - 1
            logger.debug("reference %s level=%d panels=%d value=%s est=%s", kernel.value, level, panels,
                         mp.nstr(value, 15), mp.nstr(est, 3))
            best = ReferenceResult(value=+value, estimated_error=+est, subdivisions=panels)
            if est <= tol * max(scale, tol):
                return best

    raise ReferenceNonConvergence(
        f"reference integral of {phi.name} did not reach {target_digits} digits "
        f"after {best.subdivisions} panels (estimate {mp.nstr(best.estimated_error, 3)})",
        best=best.value,
        estimated_error=best.estimated_error,
    )


def moment_reference(kernel: KernelKind, xi: MultiIndex, alpha: Any, k: int, target_digits: int) -> ReferenceResult:
    """Reference value of the closed-form moment integral of kernels.moment_integral."""
    e = (2 * xi[0], 2 * xi[1]) if kernel.is_on_diag else (2 * xi[0] - 1, 2 * xi[1] - 1)
    g = regularizer_integrand(k, int(target_digits) + GUARD_DIGITS)
    return reference_integral(monomial_integrand(g, e), kernel, alpha, target_digits)
