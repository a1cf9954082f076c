"""Grids, piecewise-constant fields, region masks, and the discrete L2 product.

Everything downstream works on a uniform finite-volume partition of the
interval (-L, L) into J cells and of [0, T] into N time steps.  Fields are
piecewise constant per cell and per step:

* a *cell field* is a ``(J,)`` float array, one value per cell;
* a *space-time field* is an ``(N, J)`` float array, entry ``(n, j)`` being
  the constant value on time slab ``n+1`` and cell ``j+1``;
* a *boundary signal* is an ``(N, 2)`` float array, columns ordered
  (left endpoint, right endpoint).

Plain ``numpy`` arrays are used for fields; the grid and mask containers
below carry the geometric data needed to interpret them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ValidationError

__all__ = [
    "SpatialGrid",
    "TimeGrid",
    "RegionMask",
    "BoundaryMask",
    "build_grids",
    "cell_averages",
    "interval_to_mask",
    "inner_product",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform partition of (-L, L) into J cells of width dx = 2L/J.

    Cell ``j`` (1-based) covers ``[-L + (j-1) dx, -L + j dx]`` with center
    ``-L + (j - 1/2) dx``.  Instances are immutable and safe to share.
    """

    L: float
    J: int
    dx: float
    cell_centers: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.L <= 0.0 or self.J < 2:
            raise ValidationError("spatial grid requires L > 0 and J >= 2")
        if abs(self.dx * self.J - 2.0 * self.L) > 4.0 * np.finfo(float).eps * self.L:
            raise ValidationError("inconsistent cell width: dx * J must equal 2L")
        object.__setattr__(self, "cell_centers", _frozen(self.cell_centers))

    @property
    def length(self) -> float:
        """Measure of the full domain, 2L."""
        return 2.0 * self.L


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, T] into N steps of size dt = T/N."""

    T: float
    N: int
    dt: float

    def __post_init__(self) -> None:
        if self.T <= 0.0 or self.N < 1:
            raise ValidationError("time grid requires T > 0 and N >= 1")
        if abs(self.dt * self.N - self.T) > 4.0 * np.finfo(float).eps * self.T:
            raise ValidationError("inconsistent step size: dt * N must equal T")


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Subset of cells (a control or observation region) with its measure.

    ``member[j]`` is True when cell ``j+1`` belongs to the region;
    ``measure`` is ``dx * count`` of member cells.
    """

    member: np.ndarray = field(repr=False)
    measure: float

    def __post_init__(self) -> None:
        m = np.ascontiguousarray(self.member, dtype=bool)
        m.flags.writeable = False
        object.__setattr__(self, "member", m)

    @classmethod
    def from_bools(cls, member: np.ndarray, grid: SpatialGrid) -> "RegionMask":
        member = np.asarray(member, dtype=bool)
        if member.shape != (grid.J,):
            raise ValidationError("mask length must equal the cell count")
        return cls(member=member, measure=grid.dx * float(np.count_nonzero(member)))

    @classmethod
    def empty(cls, grid: SpatialGrid) -> "RegionMask":
        return cls(member=np.zeros(grid.J, dtype=bool), measure=0.0)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.member))


@dataclass(frozen=True)
class BoundaryMask:
    """Which of the two domain endpoints carry boundary control."""

    left: bool = False
    right: bool = False

    @property
    def count(self) -> int:
        return int(self.left) + int(self.right)


def build_grids(L: float, J: int, T: float, N: int) -> tuple[SpatialGrid, TimeGrid]:
    """Construct matching spatial and temporal grids.

    Parameters
    ----------
    L : half-length of the spatial domain (-L, L); must be positive.
    J : number of cells, at least 2.
    T : time horizon; must be positive.
    N : number of time steps, at least 1.

    Returns
    -------
    (SpatialGrid, TimeGrid) with ``dx = 2L/J`` and ``dt = T/N``.
    """
    for name, val in (("J", J), ("N", N)):
        if isinstance(val, bool) or not isinstance(val, (int, np.integer)):
            raise ValidationError(f"{name} must be an integer, got {val!r}")
    if not (np.isfinite(L) and L > 0.0):
        raise ValidationError(f"L must be positive and finite, got {L!r}")
    if not (np.isfinite(T) and T > 0.0):
        raise ValidationError(f"T must be positive and finite, got {T!r}")
    if J < 2:
        raise ValidationError(f"J must be at least 2, got {J}")
    if N < 1:
        raise ValidationError(f"N must be at least 1, got {N}")
    dx = 2.0 * L / J
    centers = -L + dx * (np.arange(J, dtype=np.float64) + 0.5)
    return SpatialGrid(L=float(L), J=int(J), dx=dx, cell_centers=centers), TimeGrid(
        T=float(T), N=int(N), dt=float(T) / int(N)
    )


def cell_averages(sampler: Callable[[float], float], grid: SpatialGrid) -> np.ndarray:
    """Project a function of x onto cell constants by midpoint quadrature.

    One sample per cell center; exact for constants and linear profiles and
    second-order accurate otherwise, which matches the piecewise-constant
    field space.
    """
    values = np.asarray([float(sampler(x)) for x in grid.cell_centers], dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        j = int(bad[0])
        raise ValidationError(
            f"sampler returned a non-finite value in cell {j + 1} "
            f"(center x={grid.cell_centers[j]:.6g})"
        )
    return values


def interval_to_mask(a: float, b: float, grid: SpatialGrid) -> RegionMask:
    """Mark the cells whose centers lie in the closed interval [a, b].

    Membership is decided by the cell center, which is unambiguous when the
    interval endpoints coincide with cell faces.
    """
    if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
        raise ValidationError(f"interval bounds must satisfy a < b, got [{a}, {b}]")
    member = (grid.cell_centers >= a) & (grid.cell_centers <= b)
    if not member.any():
        raise ValidationError(
            f"interval [{a}, {b}] contains no cell centers of the grid on "
            f"[{-grid.L}, {grid.L}]"
        )
    return RegionMask.from_bools(member, grid)


def inner_product(a: np.ndarray, b: np.ndarray, tg: TimeGrid, sg: SpatialGrid) -> float:
    """Discrete L2 scalar product of two space-time fields.

    Returns ``sum_{n,j} dt * dx * a[n,j] * b[n,j]``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    expected = (tg.N, sg.J)
    if a.shape != expected or b.shape != expected:
        raise ValidationError(
            f"space-time fields must have shape {expected}, got {a.shape} and {b.shape}"
        )
    return float(tg.dt * sg.dx * np.sum(a * b))
