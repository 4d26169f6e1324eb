"""src/coeffmat.py

Coefficient matrices K of the weight systems and exact checks of their structure.

  on-diagonal   K[i][j] = sum_{beta in G_j} beta^(2 xi_i)
  off-diagonal  K[i][j] = sum_{beta in G_j} sgn(beta1 beta2) beta^(2 xi_i - e1 - e2)

Entries are Python ints (0^0 = 1). All checks in this module are exact: integer
Bareiss elimination for determinants, Fractions for the diagonal factor H.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import ArgumentError, StencilError
from kernels import KernelKind
from stencil import MultiIndex, Stencil, build_stencil

logger = logging.getLogger(__name__)

IntMatrix = List[List[int]]


@dataclass(frozen=True)
class CoeffMatrix:
    kernel: KernelKind
    p: int
    entries: Tuple[Tuple[int, ...], ...]
    stencil: Stencil

    @property
    def size(self) -> int:
        return len(self.entries)

    def rows(self) -> IntMatrix:
        return [list(r) for r in self.entries]


def row_exponent(kernel: KernelKind, xi: MultiIndex) -> Tuple[int, int]:
    """Monomial exponent attached to a row index."""
    if kernel.is_on_diag:
        return 2 * xi[0], 2 * xi[1]
    return 2 * xi[0] - 1, 2 * xi[1] - 1


def build_K(kernel: KernelKind, p: int) -> CoeffMatrix:
    st = build_stencil(kernel, p)
    rows = []
    for xi in st.indices:
        e1, e2 = row_exponent(kernel, xi)
        rows.append(tuple(
            sum(sp.sign * sp.point[0] ** e1 * sp.point[1] ** e2 for sp in group)
            for group in st.groups
        ))
    return CoeffMatrix(kernel=kernel, p=st.p, entries=tuple(rows), stencil=st)


def _exact_div(x: Any, y: Any) -> Any:
    if isinstance(x, int) and isinstance(y, int):
        q, r = divmod(x, y)
        if r:
            raise ArithmeticError("Bareiss step is not exact; matrix entries must be integers")
        return q
    return Fraction(x) / y


def bareiss_det(M: Sequence[Sequence[Any]]) -> Any:
    """Exact determinant by fraction-free elimination (ints or Fractions)."""
    A = [list(r) for r in M]
    n = len(A)
    if n == 0:
        return 1
    if any(len(r) != n for r in A):
        raise ArgumentError("bareiss_det needs a square matrix")

    sign = 1
    prev: Any = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        piv = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            for j in range(k + 1, n):
                A[i][j] = _exact_div(A[i][j] * piv - aik * A[k][j], prev)
        prev = piv
    return sign * A[n - 1][n - 1]


def condition_estimate(K: CoeffMatrix) -> float:
    """2-norm condition number in doubles; reported, never judged."""
    return float(np.linalg.cond(np.array(K.entries, dtype=float)))


def _sub(M: Sequence[Sequence[Any]], r0: int, r1: int, c0: int, c1: int) -> IntMatrix:
    return [list(M[i][c0:c1]) for i in range(r0, r1)]


def _all_zero(M: Sequence[Sequence[Any]]) -> bool:
    return all(v == 0 for row in M for v in row)


def _matmul(A: Sequence[Sequence[Any]], B: Sequence[Sequence[Any]]) -> List[List[Any]]:
    return [[sum(A[i][t] * B[t][j] for t in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


# --- on-diagonal block structure --------------------------------------------

def on_diag_E(xs: Sequence[Any], indices: Sequence[MultiIndex]) -> List[List[Any]]:
    """E[i][j] = x_{xi_j1}^{xi_i1} * x_{xi_j2}^{xi_i2} over the anti-diagonal block (1-based x)."""
    return [[xs[c[0] - 1] ** r[0] * xs[c[1] - 1] ** r[1] for c in indices] for r in indices]


@dataclass
class BlockReport:
    A: IntMatrix
    B: IntMatrix
    C: IntMatrix
    D: IntMatrix
    C_is_zero: bool
    A1_A4_vandermonde: bool
    A2_A3_zero: bool
    first_column_ok: bool
    D_equals_4E: bool
    det_K_equals_det_A_det_D: bool

    @property
    def ok(self) -> bool:
        return (self.C_is_zero and self.A1_A4_vandermonde and self.A2_A3_zero and self.first_column_ok
                and self.D_equals_4E and self.det_K_equals_det_A_det_D)


def block_structure(K: CoeffMatrix) -> BlockReport:
    if not K.kernel.is_on_diag:
        raise ArgumentError("block structure applies to on-diagonal matrices; use off_diag_factorization")
    p = K.p
    if p < 1:
        raise ArgumentError("block structure needs p >= 1")

    M = K.rows()
    N = K.size
    n = 2 * p + 1
    A = _sub(M, 0, n, 0, n)
    B = _sub(M, 0, n, n, N)
    C = _sub(M, n, N, 0, n)
    D = _sub(M, n, N, n, N)

    vander = all(
        A[r][s] == 2 * (s * s) ** r and A[p + r][p + s] == 2 * (s * s) ** r
        for r in range(1, p + 1) for s in range(1, p + 1)
    )
    a2_a3 = _all_zero(_sub(A, 1, p + 1, p + 1, n)) and _all_zero(_sub(A, p + 1, n, 1, p + 1))
    first_col = M[0][0] == 1 and all(M[i][0] == 0 for i in range(1, N))

    c3 = list(K.stencil.indices[n:])
    xs = [i * i for i in range(1, p + 1)]
    E = on_diag_E(xs, c3)
    d_is_4e = all(D[i][j] == 4 * E[i][j] for i in range(len(c3)) for j in range(len(c3)))

    det_identity = bareiss_det(M) == bareiss_det(A) * bareiss_det(D)

    return BlockReport(
        A=A, B=B, C=C, D=D,
        C_is_zero=_all_zero(C),
        A1_A4_vandermonde=vander,
        A2_A3_zero=a2_a3,
        first_column_ok=first_col,
        D_equals_4E=d_is_4e,
        det_K_equals_det_A_det_D=det_identity,
    )


# --- off-diagonal factorization ---------------------------------------------

def off_diag_T(xs: Sequence[Any], indices: Sequence[MultiIndex]) -> List[List[Any]]:
    """T[i][j] = x_{c1}^{r1} x_{c2}^{r2} + x_{c1}^{r2} x_{c2}^{r1}, c = xi_j, r = xi_i (1-based x)."""
    out = []
    for r in indices:
        row = []
        for c in indices:
            u, v = xs[c[0] - 1], xs[c[1] - 1]
            row.append(u ** r[0] * v ** r[1] + u ** r[1] * v ** r[0])
        out.append(row)
    return out


@dataclass
class FactorizationReport:
    E: IntMatrix
    H: List[Fraction]
    K_equals_EH: bool
    det_K_equals_det_E_det_H: bool

    @property
    def ok(self) -> bool:
        return self.K_equals_EH and self.det_K_equals_det_E_det_H


def off_diag_factorization(K: CoeffMatrix) -> FactorizationReport:
    if K.kernel.is_on_diag:
        raise ArgumentError("K = E H factorization applies to the off-diagonal matrix; use block_structure")
    idx = K.stencil.indices
    H = [Fraction(2 if c[0] == c[1] else 4, c[0] * c[1]) for c in idx]
    E = [[c[0] ** (2 * r[0]) * c[1] ** (2 * r[1]) + c[1] ** (2 * r[0]) * c[0] ** (2 * r[1]) for c in idx] for r in idx]
    EH = [[E[i][j] * H[j] for j in range(len(idx))] for i in range(len(idx))]

    det_H = Fraction(1)
    for h in H:
        det_H *= h

    return FactorizationReport(
        E=E,
        H=H,
        K_equals_EH=all(EH[i][j] == K.entries[i][j] for i in range(len(idx)) for j in range(len(idx))),
        det_K_equals_det_E_det_H=bareiss_det(K.rows()) == bareiss_det(E) * det_H,
    )


# --- determinant factorization ----------------------------------------------

def predicted_det_factor(kernel: KernelKind, p: int, xs: Sequence[int]) -> int:
    """Product formula H(x) that det E (on) / det T (off) equals up to a constant."""
    m = p - 1
    out = 1
    if kernel.is_on_diag:
        for j in range(1, m + 1):
            out *= xs[j - 1] ** (2 * (p - j))
            for i in range(1, j):
                out *= (xs[j - 1] - xs[i - 1]) ** (2 * (p - j))
        return out

    half = p // 2
    for j in range(1, m + 1):
        e = p + 1 - j if j <= half else p - j
        out *= xs[j - 1] ** e
        for i in range(1, j):
            out *= (xs[j - 1] - xs[i - 1]) ** e
    return out


@dataclass
class RatioReport:
    kernel: KernelKind
    p: int
    constant_ratio: bool
    ratio: Optional[Fraction]
    samples: List[Tuple[int, ...]] = field(default_factory=list)
    ratios: List[Fraction] = field(default_factory=list)


def _symbolic_matrix(kernel: KernelKind, p: int, xs: Sequence[int]) -> List[List[int]]:
    st = build_stencil(kernel, p)
    if kernel.is_on_diag:
        return on_diag_E(xs, st.indices[2 * p + 1:])
    return off_diag_T(xs, st.indices)


def det_factorization_check(kernel: KernelKind, p: int, trials: int = 5, seed: int = 0,
                            max_value: int = 60) -> RatioReport:
    """Evaluate E (on) / T (off) at random distinct positive integers and test det/H for constancy."""
    if p < 2:
        raise StencilError(f"determinant factorization needs p >= 2, got {p}")
    if trials < 2:
        raise ArgumentError(f"need at least 2 trials, got {trials}")

    rng = random.Random(seed)
    nvar = p - 1
    hi = max(max_value, 2 * nvar + 2)
    seen = set()
    samples: List[Tuple[int, ...]] = []
    while len(samples) < trials:
        xs = tuple(rng.randint(1, hi) for _ in range(nvar))
        if len(set(xs)) < nvar or xs in seen:
            continue
        seen.add(xs)
        samples.append(xs)

    ratios = []
    for xs in samples:
        d = bareiss_det(_symbolic_matrix(kernel, p, xs))
        ratios.append(Fraction(d, predicted_det_factor(kernel, p, xs)))

    constant = ratios[0] != 0 and all(r == ratios[0] for r in ratios)
    logger.debug("det/H for %s p=%d: %s", kernel.value, p, ratios)
    return RatioReport(kernel=kernel, p=p, constant_ratio=constant, ratio=ratios[0] if constant else None,
                       samples=samples, ratios=ratios)


def certify_nonsingular(kernel: KernelKind, p_max: int) -> List[Tuple[int, int, bool]]:
    """Exact det K for every p up to p_max: (p, det, det != 0)."""
    p_min = 1 if kernel.is_on_diag else 2
    if p_max < p_min:
        raise StencilError(f"p_max must be >= {p_min} for {kernel.value}, got {p_max}")
    out = []
    for p in range(p_min, p_max + 1):
        d = bareiss_det(build_K(kernel, p).rows())
        out.append((p, d, d != 0))
    return out


def structure_certificate(kernel: KernelKind, p: int, trials: int = 5, seed: int = 0) -> Dict[str, Any]:
    """Everything verify-matrix reports for one order p."""
    K = build_K(kernel, p)
    d = bareiss_det(K.rows())
    if kernel.is_on_diag:
        structure_ok = block_structure(K).ok
    else:
        structure_ok = off_diag_factorization(K).ok

    ratio_ok: Optional[bool] = None
    ratio: Optional[Fraction] = None
    if p >= 2:
        rr = det_factorization_check(kernel, p, trials=trials, seed=seed)
        ratio_ok, ratio = rr.constant_ratio, rr.ratio

    return {
        "p": p,
        "N": K.size,
        "det_nonzero": d != 0,
        "structure_ok": structure_ok,
        "ratio_constant": ratio_ok,
        "ratio": None if ratio is None else str(ratio),
        "condition": condition_estimate(K),
    }
