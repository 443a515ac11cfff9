"""Half-strip grid, nodal fields and the finite-difference / quadrature kernels.

The physical domain ``x > 0, y in R`` is truncated to ``[0, lx]`` and made
periodic in ``y`` with period ``ly``.  Fields live on the nodes
``x_i = i*dx`` (``i = 0..nx``, wall node included) and ``y_j = j*dy``
(``j = 0..ny-1``); arrays are indexed ``[i, j]``.

All stencils are second order, with one-sided second-order closures at the
two x-ends and periodic wrap-around in y.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridError, GridMismatch

MIN_NX = 8
MIN_NY = 4


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise GridError("nx and ny must be integers")
        if self.nx < MIN_NX:
            raise GridError(f"nx={self.nx} is below the minimum {MIN_NX}")
        if self.ny < MIN_NY:
            raise GridError(f"ny={self.ny} is below the minimum {MIN_NY}")
        if not (self.lx > 0 and self.ly > 0) or not np.isfinite([self.lx, self.ly]).all():
            raise GridError("lx and ly must be positive and finite")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.nx + 1) * self.dx
        x[-1] = self.lx
        return x

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.dy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def trapezoid_x(self) -> np.ndarray:
        w = np.full(self.nx + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.shape))

    def field(self, func) -> "ScalarField":
        """Sample ``func(X, Y)`` on the nodes."""
        X, Y = self.mesh()
        return ScalarField(self, np.broadcast_to(np.asarray(func(X, Y), float), self.shape).copy())


def make_grid(nx: int, ny: int, lx: float, ly: float) -> Grid:
    return Grid(int(nx), int(ny), float(lx), float(ly))


@dataclass(frozen=True)
class Torus:
    """Doubly periodic grid, used only by the spectral oracle and the
    conservation check.  Nodes are ``i*dx`` for ``i < nx`` (no duplicate end)."""

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise GridError("torus needs at least 4 nodes per direction")
        if not (self.lx > 0 and self.ly > 0):
            raise GridError("torus lengths must be positive")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.nx) * self.dx
        y = np.arange(self.ny) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def field(self, func) -> "ScalarField":
        X, Y = self.mesh()
        return ScalarField(self, np.broadcast_to(np.asarray(func(X, Y), float), self.shape).copy())


@dataclass(frozen=True)
class ScalarField:
    grid: Grid | Torus
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GridMismatch(f"values have shape {v.shape}, grid expects {self.grid.shape}")
        if not np.isfinite(v).all():
            raise GridError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _vals(other, self.grid))

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * _vals(other, self.grid))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True)
class VectorField:
    grid: Grid | Torus
    comp1: np.ndarray
    comp2: np.ndarray

    def __post_init__(self):
        for name in ("comp1", "comp2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != self.grid.shape:
                raise GridMismatch(f"{name} has shape {v.shape}, grid expects {self.grid.shape}")
            if not np.isfinite(v).all():
                raise GridError(f"{name} contains non-finite values")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class BoundaryTrace:
    """Values sampled along the wall ``x = 0``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.isfinite(v).all():
            raise GridError("trace contains non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def of(cls, field: ScalarField) -> "BoundaryTrace":
        return cls(field.values[0].copy())


def _vals(other, grid):
    if isinstance(other, ScalarField):
        if other.grid != grid:
            raise GridMismatch("fields live on different grids")
        return other.values
    return other


def same_grid(*fields) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch("fields live on different grids")
    return grid


# -- raw array kernels -------------------------------------------------------

def d1x(a: np.ndarray, dx: float) -> np.ndarray:
    """Second-order first derivative along axis 0, one-sided at both ends."""
    out = np.empty_like(a, dtype=float)
    out[1:-1] = (a[2:] - a[:-2]) / (2 * dx)
    out[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * dx)
    out[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * dx)
    return out


def d2x(a: np.ndarray, dx: float) -> np.ndarray:
    """Second-order second derivative along axis 0, one-sided at both ends."""
    out = np.empty_like(a, dtype=float)
    out[1:-1] = (a[2:] - 2 * a[1:-1] + a[:-2]) / dx**2
    out[0] = (2 * a[0] - 5 * a[1] + 4 * a[2] - a[3]) / dx**2
    out[-1] = (2 * a[-1] - 5 * a[-2] + 4 * a[-3] - a[-4]) / dx**2
    return out


def d1y(a: np.ndarray, dy: float) -> np.ndarray:
    return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2 * dy)


def d2y(a: np.ndarray, dy: float) -> np.ndarray:
    return (np.roll(a, -1, axis=1) - 2 * a + np.roll(a, 1, axis=1)) / dy**2


# -- field operations ----------------------------------------------------------

def ddx(f: ScalarField) -> ScalarField:
    if isinstance(f.grid, Torus):
        a = f.values
        return ScalarField(f.grid, (np.roll(a, -1, 0) - np.roll(a, 1, 0)) / (2 * f.grid.dx))
    return ScalarField(f.grid, d1x(f.values, f.grid.dx))


def ddy(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, d1y(f.values, f.grid.dy))


def laplacian(f: ScalarField) -> ScalarField:
    g = f.grid
    if isinstance(g, Torus):
        a = f.values
        lx = (np.roll(a, -1, 0) - 2 * a + np.roll(a, 1, 0)) / g.dx**2
        return ScalarField(g, lx + d2y(a, g.dy))
    return ScalarField(g, d2x(f.values, g.dx) + d2y(f.values, g.dy))


def integrate2d(f: ScalarField, weight_alpha: float = 0.0) -> float:
    """Integral of ``(1+x)^alpha * f``: trapezoid in x, rectangle rule in y."""
    if weight_alpha < 0:
        raise ValueError("weight_alpha must be nonnegative")
    return integrate_array(f.values, f.grid, weight_alpha)


def integrate_array(a: np.ndarray, grid: Grid, weight_alpha: float = 0.0) -> float:
    w = grid.trapezoid_x
    if weight_alpha:
        w = w * (1.0 + grid.x) ** weight_alpha
    return float(w @ a.sum(axis=1)) * grid.dy
