"""src/stencil.py

Index sets, symmetry groups and correction layers of the corrected rules.

On-diagonal kernel, order p >= 0:
  I_p = {xi : |xi|_1 <= p}, ordered as
    C1 = (0,0), (0,1), ..., (0,p)
    C2 = (1,0), (2,0), ..., (p,0)
    C3 = anti-diagonals (1,1); (2,1), (1,2); ...; (p-1,1), ..., (1,p-1)
  G_(a,b) = {(+-a, +-b)}, every sign +1.

Off-diagonal kernel, order p >= 2:
  I_p = {(q-m, m) : 2 <= q <= p, 1 <= m <= q//2}, 1-norm ascending and
  reverse-dictionary inside a norm: (1,1), (2,1), (3,1), (2,2), ...
  G_(a,b) = {(+-a, +-b), (+-b, +-a)}, sign sgn(b1*b2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Tuple

from errors import StencilError
from kernels import KernelKind

Point = Tuple[int, int]


class MultiIndex(NamedTuple):
    a: int
    b: int

    def swapped(self) -> "MultiIndex":
        return MultiIndex(self.b, self.a)


class SignedPoint(NamedTuple):
    point: Point
    sign: int


@dataclass(frozen=True)
class Stencil:
    kernel: KernelKind
    p: int
    indices: Tuple[MultiIndex, ...]
    groups: Tuple[Tuple[SignedPoint, ...], ...]

    def __len__(self) -> int:
        return len(self.indices)

    def group_of(self, gamma: MultiIndex) -> Tuple[SignedPoint, ...]:
        return self.groups[self.indices.index(MultiIndex(*gamma))]

    def points(self) -> List[Point]:
        return [sp.point for g in self.groups for sp in g]


def _check_p(kernel: KernelKind, p: int) -> int:
    p = int(p)
    if kernel.is_on_diag and p < 0:
        raise StencilError(f"on-diagonal order must be >= 0, got {p}")
    if not kernel.is_on_diag and p < 2:
        raise StencilError(
            f"off-diagonal order must be >= 2, got {p}: the punctured rule is already corrected below p = 2"
        )
    return p


def index_set(kernel: KernelKind, p: int) -> List[MultiIndex]:
    p = _check_p(kernel, p)
    if kernel.is_on_diag:
        out = [MultiIndex(0, r) for r in range(p + 1)]
        out += [MultiIndex(s, 0) for s in range(1, p + 1)]
        for q in range(2, p + 1):
            out += [MultiIndex(q - m, m) for m in range(1, q)]
        return out

    return [MultiIndex(q - m, m) for q in range(2, p + 1) for m in range(1, q // 2 + 1)]


def stencil_size(kernel: KernelKind, p: int) -> int:
    """N_p: (p+1)(p+2)/2 on-diagonal, p^2/4 or (p^2-1)/4 off-diagonal."""
    p = _check_p(kernel, p)
    if kernel.is_on_diag:
        return (p + 1) * (p + 2) // 2
    return p * p // 4


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


def symmetry_group(kernel: KernelKind, gamma: MultiIndex) -> List[SignedPoint]:
    a, b = int(gamma[0]), int(gamma[1])
    if a < 0 or b < 0:
        raise StencilError(f"multi-index must be non-negative, got {(a, b)}")

    if kernel.is_on_diag:
        pts = {(s1 * a, s2 * b) for s1 in (1, -1) for s2 in (1, -1)}
        return [SignedPoint(pt, 1) for pt in sorted(pts, reverse=True)]

    if a == 0 or b == 0:
        raise StencilError(f"off-diagonal group needs both components nonzero, got {(a, b)}")
    pts = {(s1 * u, s2 * v) for (u, v) in ((a, b), (b, a)) for s1 in (1, -1) for s2 in (1, -1)}
    return [SignedPoint(pt, _sign(pt[0] * pt[1])) for pt in sorted(pts, reverse=True)]


def layer_count(kernel: KernelKind, p: int) -> int:
    p = _check_p(kernel, p)
    return p + 1 if kernel.is_on_diag else p - 1


_CACHE: Dict[Tuple[KernelKind, int], Stencil] = {}


def build_stencil(kernel: KernelKind, p: int) -> Stencil:
    key = (kernel, int(p))
    if key not in _CACHE:
        idx = index_set(kernel, p)
        _CACHE[key] = Stencil(
            kernel=kernel,
            p=int(p),
            indices=tuple(idx),
            groups=tuple(tuple(symmetry_group(kernel, g)) for g in idx),
        )
    return _CACHE[key]
