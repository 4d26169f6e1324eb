"""src/kernels.py

Singular kernels, the regularizer g, built-in integrands, closed-form moment
integrals and the fractional-Laplacian constant.

Kernels (0 < alpha < 2):
  on_diag_x1   s(x)   = x1^2    / |x|^(2+alpha)
  on_diag_x2   s(x)   = x2^2    / |x|^(2+alpha)
  off_diag     s12(x) = x1 * x2 / |x|^(2+alpha)

Scalar functions accept floats or mpmath mpf values and return the same kind;
the *_np variants evaluate on numpy arrays for the double-precision lattice sums.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, Sequence, Tuple

import mpmath
import numpy as np
from mpmath import mp

from errors import ArgumentError, KernelDomainError
from xprec import gamma, xreal

if TYPE_CHECKING:
    from stencil import MultiIndex

logger = logging.getLogger(__name__)


class KernelKind(enum.Enum):
    ON_DIAG_X1 = "on_diag_x1"
    ON_DIAG_X2 = "on_diag_x2"
    OFF_DIAG = "off_diag"

    @property
    def is_on_diag(self) -> bool:
        return self is not KernelKind.OFF_DIAG

    @property
    def axis(self) -> int:
        """1 or 2 for the on-diagonal kernels, 0 for the off-diagonal one."""
        return {KernelKind.ON_DIAG_X1: 1, KernelKind.ON_DIAG_X2: 2}.get(self, 0)

    @property
    def cli_name(self) -> str:
        return self.value.replace("_", "-")

    def swapped(self) -> "KernelKind":
        """Kernel seen after exchanging x1 and x2."""
        return {
            KernelKind.ON_DIAG_X1: KernelKind.ON_DIAG_X2,
            KernelKind.ON_DIAG_X2: KernelKind.ON_DIAG_X1,
        }.get(self, self)

    @classmethod
    def from_name(cls, name: str) -> "KernelKind":
        key = str(name).strip().lower().replace("-", "_")
        if key == "on_diag":
            key = "on_diag_x1"
        for kind in cls:
            if kind.value == key:
                return kind
        raise ArgumentError(f"unknown kernel {name!r} (expected on-diag-x1, on-diag-x2 or off-diag)")


def check_alpha(alpha: Any) -> None:
    if not 0 < alpha < 2:
        raise KernelDomainError(f"alpha must lie in (0, 2), got {alpha}")


def _is_mp(*values: Any) -> bool:
    return any(isinstance(v, (mpmath.mpf, mpmath.mpc)) for v in values)


def kernel_eval(kernel: KernelKind, alpha: Any, x: Sequence[Any]) -> Any:
    check_alpha(alpha)
    x1, x2 = x
    r2 = x1 * x1 + x2 * x2
    if r2 == 0:
        raise KernelDomainError("kernel is singular at the origin")
    if kernel is KernelKind.ON_DIAG_X1:
        num = x1 * x1
    elif kernel is KernelKind.ON_DIAG_X2:
        num = x2 * x2
    else:
        num = x1 * x2
    return num / r2 ** ((2 + alpha) / 2)


def kernel_eval_np(kernel: KernelKind, alpha: float, X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Vectorized kernel; the origin (if present) evaluates to 0."""
    r2 = X1 * X1 + X2 * X2
    if kernel is KernelKind.ON_DIAG_X1:
        num = X1 * X1
    elif kernel is KernelKind.ON_DIAG_X2:
        num = X2 * X2
    else:
        num = X1 * X2
    out = np.zeros_like(r2, dtype=float)
    nz = r2 > 0
    out[nz] = num[nz] / r2[nz] ** ((2.0 + alpha) / 2.0)
    return out


def check_k(k: int) -> int:
    """Validate the regularizer exponent: any even k >= 2.

    k = 2 stays legal: the on-diagonal p = 0 weights converge like h^k, and
    the weight-convergence study at p = 0 runs with k = 2p + 2 = 2.
    """
    k = int(k)
    if k < 2 or k % 2:
        raise ArgumentError(f"regularizer exponent k must be even and >= 2, got {k}")
    return k


def regularizer_g(k: int, x: Sequence[Any]) -> Any:
    """g(x) = exp(-|x|^k); k even, so |x|^k = (x1^2 + x2^2)^(k/2) exactly."""
    k = check_k(k)
    x1, x2 = x
    if _is_mp(x1, x2):
        return mp.exp(-((x1 * x1 + x2 * x2) ** (k // 2)))
    try:
        return math.exp(-((x1 * x1 + x2 * x2) ** (k // 2)))
    except OverflowError:
        # |x|^k past the float range; exp(-|x|^k) has long underflowed
        return 0.0


def truncation_radius(k: int, digits: int) -> float:
    """Smallest R with exp(-R^k) < 10^-(digits+5)."""
    k = check_k(k)
    return float(((digits + 5) * math.log(10.0)) ** (1.0 / k))


def moment_integral(kernel: KernelKind, xi: "MultiIndex", alpha: Any, k: int) -> Any:
    """Closed form of the moment of g * s * x^(2 xi) (on-diagonal) or
    g * s12 * x^(2 xi - e1 - e2) (off-diagonal) over the plane."""
    alpha = xreal(alpha)
    check_alpha(alpha)
    k = check_k(k)
    a, b = int(xi[0]), int(xi[1])
    if a < 0 or b < 0:
        raise KernelDomainError(f"multi-index must be non-negative, got {(a, b)}")

    if kernel.is_on_diag:
        if kernel is KernelKind.ON_DIAG_X2:
            a, b = b, a
        arg = (2 - alpha + 2 * a + 2 * b) / k
        if arg <= 0:
            raise KernelDomainError(f"nonpositive Gamma argument {arg}")
        return 2 * gamma(mp.mpf(3) / 2 + a) * gamma(mp.mpf(1) / 2 + b) * gamma(arg) / (k * gamma(2 + a + b))

    if a < 1 or b < 1:
        raise KernelDomainError(f"off-diagonal moments need xi >= (1, 1), got {(a, b)}")
    arg = (2 * a + 2 * b - alpha) / k
    if arg <= 0:
        raise KernelDomainError(f"nonpositive Gamma argument {arg}")
    return 2 * gamma(mp.mpf(1) / 2 + a) * gamma(mp.mpf(1) / 2 + b) * gamma(arg) / (k * gamma(1 + a + b))


def frac_laplacian_constant(d: int, alpha: Any) -> Any:
    """C_{d,alpha} = 2^alpha Gamma((alpha+d)/2) / (pi^(d/2) |Gamma(-alpha/2)|)."""
    alpha = xreal(alpha)
    check_alpha(alpha)
    if d < 1:
        raise ArgumentError(f"dimension must be >= 1, got {d}")
    return mp.power(2, alpha) * gamma((alpha + d) / 2) / (mp.pi ** (mp.mpf(d) / 2) * abs(gamma(-alpha / 2)))


# --- integrands -------------------------------------------------------------

ScalarFn = Callable[[Any, Any], Any]
ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Integrand:
    """A test function phi with its scalar (float or mpf) and numpy evaluators.

    support_shape is "square" (|x|_inf <= support_radius) or "disc"
    (|x|_2 <= support_radius); phi vanishes outside, exactly or below the
    working epsilon for the practically compact regularizers.
    """

    name: str
    eval_scalar: ScalarFn
    eval_np: ArrayFn
    support_radius: float
    smoothness_note: str = ""
    support_shape: str = "square"
    radial: bool = False

    def __call__(self, x1: Any, x2: Any) -> Any:
        return self.eval_scalar(x1, x2)

    def swapped(self) -> "Integrand":
        f, g = self.eval_scalar, self.eval_np
        return Integrand(
            name=f"{self.name}[x1<->x2]",
            eval_scalar=lambda x1, x2: f(x2, x1),
            eval_np=lambda X1, X2: g(X2, X1),
            support_radius=self.support_radius,
            smoothness_note=self.smoothness_note,
            support_shape=self.support_shape,
            radial=self.radial,
        )

    def mirrored(self) -> "Integrand":
        """phi(-x1, x2)."""
        f, g = self.eval_scalar, self.eval_np
        return Integrand(
            name=f"{self.name}[-x1]",
            eval_scalar=lambda x1, x2: f(-x1, x2),
            eval_np=lambda X1, X2: g(-X1, X2),
            support_radius=self.support_radius,
            smoothness_note=self.smoothness_note,
            support_shape=self.support_shape,
            radial=self.radial,
        )

    def scaled(self, c: Any) -> "Integrand":
        f, g = self.eval_scalar, self.eval_np
        return Integrand(
            name=f"{c}*{self.name}",
            eval_scalar=lambda x1, x2: c * f(x1, x2),
            eval_np=lambda X1, X2: float(c) * g(X1, X2),
            support_radius=self.support_radius,
            smoothness_note=self.smoothness_note,
            support_shape=self.support_shape,
            radial=self.radial,
        )


def _plus(t: Any) -> Any:
    return t if t > 0 else 0 * t


def _box7(x1: Any, x2: Any) -> Any:
    return (_plus(1 - x1 * x1) * _plus(1 - x2 * x2)) ** 7


def _box7_np(X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    return (np.clip(1.0 - X1 * X1, 0.0, None) * np.clip(1.0 - X2 * X2, 0.0, None)) ** 7


def on_test_integrand() -> Integrand:
    return Integrand(
        name="builtin:on-test",
        eval_scalar=lambda x1, x2: (1 + x1 + x1 * x1) * (1 + x2 + x2 * x2) * _box7(x1, x2),
        eval_np=lambda X1, X2: (1.0 + X1 + X1 * X1) * (1.0 + X2 + X2 * X2) * _box7_np(X1, X2),
        support_radius=1.0,
        smoothness_note="C6",
    )


def off_test_integrand() -> Integrand:
    return Integrand(
        name="builtin:off-test",
        eval_scalar=lambda x1, x2: (1 + x1) * (1 + x2) * _box7(x1, x2),
        eval_np=lambda X1, X2: (1.0 + X1) * (1.0 + X2) * _box7_np(X1, X2),
        support_radius=1.0,
        smoothness_note="C6",
    )


def regularizer_integrand(k: int, digits: int = 0) -> Integrand:
    """g = exp(-|x|^k) as an integrand, practically compact at `digits` digits."""
    k = check_k(k)
    digits = digits or int(mp.dps)
    return Integrand(
        name=f"builtin:g{k}",
        eval_scalar=lambda x1, x2: regularizer_g(k, (x1, x2)),
        eval_np=lambda X1, X2: np.exp(-((X1 * X1 + X2 * X2) ** (k // 2))),
        support_radius=truncation_radius(k, digits),
        smoothness_note="analytic",
        support_shape="disc",
        radial=True,
    )


def radial_bump_integrand() -> Integrand:
    """((1 - |x|^2)_+)^8."""
    return Integrand(
        name="builtin:radial",
        eval_scalar=lambda x1, x2: _plus(1 - x1 * x1 - x2 * x2) ** 8,
        eval_np=lambda X1, X2: np.clip(1.0 - X1 * X1 - X2 * X2, 0.0, None) ** 8,
        support_radius=1.0,
        smoothness_note="C7",
        support_shape="disc",
        radial=True,
    )


def zero_integrand() -> Integrand:
    return Integrand(
        name="builtin:zero",
        eval_scalar=lambda x1, x2: 0 * x1,
        eval_np=lambda X1, X2: np.zeros(np.broadcast(X1, X2).shape),
        support_radius=1.0,
        smoothness_note="analytic",
        radial=True,
    )


def monomial_integrand(base: Integrand, e: Tuple[int, int]) -> Integrand:
    """base(x) * x1^e1 * x2^e2 (0^0 = 1)."""
    e1, e2 = int(e[0]), int(e[1])
    f, g = base.eval_scalar, base.eval_np
    return Integrand(
        name=f"{base.name}*x^{(e1, e2)}",
        eval_scalar=lambda x1, x2: f(x1, x2) * x1 ** e1 * x2 ** e2,
        eval_np=lambda X1, X2: g(X1, X2) * X1 ** e1 * X2 ** e2,
        support_radius=base.support_radius,
        smoothness_note=base.smoothness_note,
        support_shape=base.support_shape,
        radial=base.radial and e1 == 0 and e2 == 0,
    )


def builtin_phi(kernel: KernelKind) -> Integrand:
    return on_test_integrand() if kernel.is_on_diag else off_test_integrand()


def builtin_integrand(name: str, digits: int = 0) -> Integrand:
    """Resolve a CLI integrand name (builtin:on-test, builtin:g6, ...)."""
    key = str(name).strip().lower()
    if not key.startswith("builtin:"):
        key = "builtin:" + key
    tail = key.split(":", 1)[1]
    if tail == "on-test":
        return on_test_integrand()
    if tail == "off-test":
        return off_test_integrand()
    if tail == "radial":
        return radial_bump_integrand()
    if tail == "zero":
        return zero_integrand()
    if tail.startswith("g") and tail[1:].isdigit():
        return regularizer_integrand(int(tail[1:]), digits)
    raise ArgumentError(
        f"unknown integrand {name!r} (expected builtin:on-test, builtin:off-test, builtin:g6, builtin:g8, "
        "builtin:radial or builtin:zero)"
    )
