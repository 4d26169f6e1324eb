"""src/errors.py

Exception types shared by the library modules and the CLI.

Every error the CLI can surface carries the process exit code it maps to:
  2 = argument / input error
  3 = verification failure
  4 = numerical non-convergence
"""

from __future__ import annotations

from typing import Any, Optional

EXIT_OK = 0
EXIT_ARGUMENT = 2
EXIT_VERIFICATION = 3
EXIT_NONCONVERGENCE = 4


class QuadratureError(Exception):
    exit_code = EXIT_ARGUMENT


class ArgumentError(QuadratureError, ValueError):
    """Invalid kernel/p/alpha combination or malformed flag."""


class StencilError(ArgumentError):
    """Index set or symmetry group requested outside its domain."""


class KernelDomainError(ArgumentError):
    """Kernel evaluated at the origin, alpha outside (0, 2), bad Gamma argument."""


class PoleError(KernelDomainError):
    """Gamma evaluated at a non-positive integer."""


class SingularMatrixError(QuadratureError, ValueError):
    """Pivot fell below the working-precision threshold."""


class TableFormatError(ArgumentError):
    """Weight table file does not parse or violates the table schema."""


class TableMismatchError(QuadratureError, ValueError):
    exit_code = EXIT_VERIFICATION


class VerificationError(QuadratureError):
    exit_code = EXIT_VERIFICATION


class NonConvergenceError(QuadratureError, ArithmeticError):
    exit_code = EXIT_NONCONVERGENCE


class ReferenceNonConvergence(NonConvergenceError):
    """Reference integral hit its subdivision cap; keeps the best estimate."""

    def __init__(self, message: str, best: Optional[Any] = None, estimated_error: Optional[Any] = None):
        super().__init__(message)
        self.best = best
        self.estimated_error = estimated_error


class TruncationWarning(UserWarning):
    """Lattice sum truncated inside the integrand's support."""
