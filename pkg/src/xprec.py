"""src/xprec.py

Extended-precision scalars and dense linear algebra on top of mpmath.

XReal is mpmath's mpf; XMatrix is mpmath's matrix. The working precision is
mpmath's global decimal precision (mp.dps). Set it for a block with
working_precision(d); the default is DEFAULT_DIGITS.

Everything precision-critical in the weight pipeline goes through here:
  - gamma() with an explicit pole check
  - lu_solve() with a pivot threshold tied to the working precision
  - det() through the same LU factorization
  - deterministic_sum() which does not depend on how a sum was split
  - format_xreal()/parse_xreal() for the decimal strings stored in tables
"""

from __future__ import annotations

import contextlib
import logging
from fractions import Fraction
from typing import Iterable, Iterator, List, Sequence, Union

import mpmath
from mpmath import mp

from errors import ArgumentError, PoleError, SingularMatrixError

logger = logging.getLogger(__name__)

XReal = mpmath.mpf
XMatrix = mpmath.matrix

DEFAULT_DIGITS = 50

mp.dps = DEFAULT_DIGITS

Number = Union[int, float, str, Fraction, "mpmath.mpf"]


@contextlib.contextmanager
def working_precision(digits: int) -> Iterator[int]:
    """Run a block at `digits` significant decimal digits."""
    with mp.workdps(int(digits)):
        yield int(digits)


def current_digits() -> int:
    return int(mp.dps)


def xreal(value: Number) -> XReal:
    """Convert to XReal at the current precision. Fractions are divided exactly."""
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / value.denominator
    return mp.mpf(value)


def gamma(x: Number) -> XReal:
    x = xreal(x)
    if x <= 0 and x == mp.floor(x):
        raise PoleError(f"gamma has a pole at {mp.nstr(x, 10)}")
    return mp.gamma(x)


def as_matrix(rows: Union[XMatrix, Sequence[Sequence[Number]]]) -> XMatrix:
    if isinstance(rows, mpmath.matrix):
        return rows.copy()
    return mp.matrix([[xreal(v) for v in row] for row in rows])


def _max_abs(A: XMatrix) -> XReal:
    return max((abs(A[i, j]) for i in range(A.rows) for j in range(A.cols)), default=mp.zero)


def lu_solve(A: Union[XMatrix, Sequence[Sequence[Number]]], b: Sequence[Number]) -> List[XReal]:
    """Solve A x = b by LU with partial pivoting.

    Raises SingularMatrixError when a pivot magnitude drops below
    10^-(d-5) * max|A| at working precision d.
    """
    A = as_matrix(A)
    n = A.rows
    if A.cols != n:
        raise ArgumentError(f"lu_solve needs a square matrix, got {A.rows}x{A.cols}")
    if len(b) != n:
        raise ArgumentError(f"right-hand side has length {len(b)}, matrix has {n} rows")

    threshold = mp.mpf(10) ** (-(mp.dps - 5)) * _max_abs(A)
    if threshold == 0:
        raise SingularMatrixError("matrix is zero")

    with mp.extraprec(10):
        rhs = mp.matrix([xreal(v) for v in b])
        try:
            LU, perm = mp.LU_decomp(A)
        except ZeroDivisionError as e:
            raise SingularMatrixError(str(e)) from e

        for i in range(n):
            if abs(LU[i, i]) < threshold:
                raise SingularMatrixError(
                    f"pivot {i} = {mp.nstr(LU[i, i], 5)} below threshold {mp.nstr(threshold, 5)}"
                )

        y = mp.L_solve(LU, rhs, perm)
        x = mp.U_solve(LU, y)

    return [+x[i] for i in range(n)]


def det(A: Union[XMatrix, Sequence[Sequence[Number]]]) -> XReal:
    """Determinant through the LU factorization; a singular matrix gives 0."""
    A = as_matrix(A)
    if A.rows != A.cols:
        raise ArgumentError(f"det needs a square matrix, got {A.rows}x{A.cols}")
    with mp.extraprec(10):
        d = mp.det(A)
    return +d


def matvec(A: Union[XMatrix, Sequence[Sequence[Number]]], x: Sequence[Number]) -> List[XReal]:
    A = as_matrix(A)
    return [deterministic_sum(A[i, j] * xreal(x[j]) for j in range(A.cols)) for i in range(A.rows)]


def deterministic_sum(terms: Iterable[Number]) -> XReal:
    """Sum without intermediate rounding (mpmath fsum keeps an exact mantissa).

    The result does not depend on the order of the terms, so any split of a
    long sum into chunks combines to the same value.
    """
    return mp.fsum(xreal(t) if not isinstance(t, mpmath.mpf) else t for t in terms)


def format_xreal(x: Number, digits: int) -> str:
    """Scientific notation with exactly `digits` significant digits."""
    return mp.nstr(xreal(x), int(digits), strip_zeros=False, min_fixed=0, max_fixed=0, show_zero_exponent=True)


def parse_xreal(text: str) -> XReal:
    try:
        return mp.mpf(str(text).strip())
    except (ValueError, TypeError) as e:
        raise ArgumentError(f"not a decimal number: {text!r}") from e
