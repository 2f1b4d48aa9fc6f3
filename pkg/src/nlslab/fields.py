"""Periodic rectangular grids and complex lattice fields.

The grid covers the box [-L, L)^n with N points per axis, so dx = 2L/N and
the sample points are x_j = -L + j*dx.  Wavenumbers are k_m = (pi/L)*m with
m in {-N/2, ..., N/2 - 1} per axis (FFT layout).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

MAX_TOTAL_POINTS = 2 ** 24


class GridError(ValueError):
    pass


def _is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Spatial dimension n, points per axis N (power of two), half-length L."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if not 1 <= self.n <= 3:
            raise GridError(f"dimension must be 1..3, got {self.n}")
        if self.N < 8 or not _is_power_of_two(self.N):
            raise GridError(f"N must be a power of two >= 8, got {self.N}")
        if not self.L > 0:
            raise GridError(f"L must be positive, got {self.L}")
        if self.N ** self.n > MAX_TOTAL_POINTS:
            raise GridError(
                f"total points {self.N ** self.n} exceed cap {MAX_TOTAL_POINTS}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.n

    @cached_property
    def axis(self) -> np.ndarray:
        """Sample points along one axis, x_j = -L + j*dx."""
        return -self.L + self.dx * np.arange(self.N)

    @cached_property
    def x(self) -> list[np.ndarray]:
        """Coordinate arrays, one per axis, broadcastable to grid shape."""
        return list(np.meshgrid(*([self.axis] * self.n), indexing="ij",
                                sparse=True))

    @cached_property
    def k(self) -> list[np.ndarray]:
        """Wavenumber arrays in FFT layout, one per axis, broadcastable."""
        m = np.fft.fftfreq(self.N, d=1.0 / self.N)
        kax = (np.pi / self.L) * m
        return list(np.meshgrid(*([kax] * self.n), indexing="ij", sparse=True))

    @cached_property
    def k_sq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for ka in self.k:
            out = out + ka ** 2
        return out

    @cached_property
    def k_abs(self) -> np.ndarray:
        return np.sqrt(self.k_sq)

    @cached_property
    def r_abs(self) -> np.ndarray:
        """|x| on the grid."""
        out = np.zeros(self.shape)
        for xa in self.x:
            out = out + xa ** 2
        return np.sqrt(out)


@dataclass(frozen=True)
class Field:
    """A complex-valued lattice function on a periodic grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise GridError(
                f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite values")
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    @property
    def rho(self) -> np.ndarray:
        """Pointwise density |u|^2 (real array)."""
        return np.abs(self.values) ** 2


def ensure_same_grid(*fields: Field) -> GridSpec:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridError("fields live on different grids")
    return grid


def boundary_mass_fraction(f: Field) -> float:
    """Fraction of the squared L2 mass in the outer 10% shell of the box."""
    grid = f.grid
    outer = np.zeros(grid.shape, dtype=bool)
    for xa in grid.x:
        outer = outer | (np.abs(xa) >= 0.9 * grid.L)
    rho = f.rho
    total = float(rho.sum())
    if total == 0.0:
        return 0.0
    return float(rho[outer].sum()) / total
