"""Dense scalar fields on a uniform rectangular grid.

The domain is Omega = [0, Lx] x [0, Ly], discretized into nx * ny cells.
Cell (ix, iy) is centered at ((ix + 0.5) * Lx / nx, (iy + 0.5) * Ly / ny).
Fields store one 64-bit float per cell in a (ny, nx) array, so the flat
row-major index of a cell is iy * nx + ix. Every integral is a midpoint
Riemann sum weighted by the cell area.

Gaussian evaluation is windowed: outside a generous Mahalanobis radius the
density underflows to exactly 0.0, so restricting the exp() loop to a
bounding box produces bit-identical values to a full-grid evaluation while
keeping narrow deposits cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from ._backend import kernels
from .errors import (
    DegenerateDepositError,
    DimensionError,
    InvalidCovarianceError,
    OutOfDomainError,
)

# q = (x - mu)^T Sigma^-1 (x - mu) beyond this gives exp(-q/2) == 0.0 exactly
# (IEEE double underflows below exp(-745.2)), which makes the windowed and
# full-grid evaluations identical.
MAHALANOBIS_CUTOFF_SQ = 1500.0


class Point(NamedTuple):
    """A location in domain length units."""

    x: float
    y: float


@dataclass
class GridSpec:
    """Uniform rectangular discretization of Omega = [0, Lx] x [0, Ly]."""

    Lx: float
    Ly: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError(f"domain extents must be positive, got {self.Lx}x{self.Ly}")
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"need at least 2 cells per axis, got {self.nx}x{self.ny}")

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / self.ny

    @property
    def delta(self) -> float:
        """Cell area, the weight of the midpoint quadrature."""
        return self.dx * self.dy

    @cached_property
    def centers_x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @cached_property
    def centers_y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy

    def contains(self, p: Point) -> bool:
        return 0.0 <= p[0] <= self.Lx and 0.0 <= p[1] <= self.Ly

    def cell_of(self, p: Point) -> tuple[int, int]:
        """(ix, iy) of the cell containing p; boundary points map inward."""
        if not self.contains(p):
            raise OutOfDomainError(f"point {p} outside [0,{self.Lx}]x[0,{self.Ly}]")
        ix = min(int(p[0] / self.dx), self.nx - 1)
        iy = min(int(p[1] / self.dy), self.ny - 1)
        return ix, iy

    def cell_center(self, ix: int, iy: int) -> Point:
        return Point((ix + 0.5) * self.dx, (iy + 0.5) * self.dy)


@dataclass
class ScalarField:
    """Cell-centered samples of a scalar function over the grid."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (self.spec.ny, self.spec.nx):
            raise DimensionError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.spec.ny}, {self.spec.nx})"
            )

    @classmethod
    def zeros(cls, spec: GridSpec) -> "ScalarField":
        return cls(spec, np.zeros((spec.ny, spec.nx)))

    @classmethod
    def full(cls, spec: GridSpec, value: float) -> "ScalarField":
        return cls(spec, np.full((spec.ny, spec.nx), float(value)))

    def copy(self) -> "ScalarField":
        return ScalarField(self.spec, self.values.copy())

    def value_at(self, p: Point) -> float:
        ix, iy = self.spec.cell_of(p)
        return float(self.values[iy, ix])


def covariance_terms(cov) -> tuple[float, float, float, float]:
    """Validate a 2x2 SPD covariance; return (i11, i12, i22, norm).

    i** are the precision-matrix entries and norm the bivariate normal
    normalization constant.
    """
    c = np.asarray(cov, dtype=np.float64)
    if c.shape != (2, 2):
        raise InvalidCovarianceError(f"covariance must be 2x2, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise InvalidCovarianceError("covariance has non-finite entries")
    scale = max(abs(c[0, 0]), abs(c[1, 1]), 1e-300)
    if abs(c[0, 1] - c[1, 0]) > 1e-9 * scale:
        raise InvalidCovarianceError(f"covariance not symmetric: {c.tolist()}")
    det = c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]
    if c[0, 0] <= 0.0 or c[1, 1] <= 0.0 or det <= 0.0:
        raise InvalidCovarianceError(f"covariance not positive definite: {c.tolist()}")
    i11 = c[1, 1] / det
    i12 = -c[0, 1] / det
    i22 = c[0, 0] / det
    norm = 1.0 / (2.0 * math.pi * math.sqrt(det))
    return float(i11), float(i12), float(i22), float(norm)


def gaussian_window(
    spec: GridSpec, mean: Point, cov
) -> tuple[np.ndarray, int, int, int, int]:
    """Evaluate a bivariate normal on the cells where it does not underflow.

    Returns (box, ix0, ix1, iy0, iy1) with box of shape (iy1-iy0, ix1-ix0)
    holding the density at those cell centers. The box may be empty when the
    mean is far outside the domain.
    """
    i11, i12, i22, norm = covariance_terms(cov)
    c = np.asarray(cov, dtype=np.float64)
    mx, my = float(mean[0]), float(mean[1])
    hx = math.sqrt(MAHALANOBIS_CUTOFF_SQ * c[0, 0])
    hy = math.sqrt(MAHALANOBIS_CUTOFF_SQ * c[1, 1])
    ix0 = max(0, int(math.floor((mx - hx) / spec.dx - 0.5)))
    ix1 = min(spec.nx, int(math.ceil((mx + hx) / spec.dx + 0.5)))
    iy0 = max(0, int(math.floor((my - hy) / spec.dy - 0.5)))
    iy1 = min(spec.ny, int(math.ceil((my + hy) / spec.dy + 0.5)))
    if ix1 <= ix0 or iy1 <= iy0:
        return np.zeros((0, 0)), 0, 0, 0, 0
    box = np.empty((iy1 - iy0, ix1 - ix0))
    kernels.gauss_box(
        box,
        spec.centers_x[ix0:ix1],
        spec.centers_y[iy0:iy1],
        mx,
        my,
        i11,
        i12,
        i22,
        norm,
    )
    return box, ix0, ix1, iy0, iy1


def eval_gaussian(spec: GridSpec, mean: Point, cov) -> ScalarField:
    """Bivariate normal density N(mean, cov) sampled at every cell center."""
    out = np.zeros((spec.ny, spec.nx))
    box, ix0, ix1, iy0, iy1 = gaussian_window(spec, mean, cov)
    if box.size:
        out[iy0:iy1, ix0:ix1] = box
    return ScalarField(spec, out)


def integrate(fld: ScalarField, mask: Optional[np.ndarray] = None) -> float:
    """Midpoint Riemann sum of the field, optionally over a cell mask."""
    if mask is None:
        return float(fld.values.sum()) * fld.spec.delta
    mask = np.asarray(mask)
    if mask.shape != fld.values.shape:
        raise DimensionError(
            f"mask shape {mask.shape} does not match field {fld.values.shape}"
        )
    return float(fld.values[mask].sum()) * fld.spec.delta


def normalize_deposit(fld: ScalarField) -> ScalarField:
    """Scale the field so its discrete integral is exactly 1."""
    total = integrate(fld)
    if not total > 0.0:
        raise DegenerateDepositError(f"deposit has non-positive mass {total}")
    return ScalarField(fld.spec, fld.values / total)


def gradient_at(fld: ScalarField, p: Point) -> np.ndarray:
    """Finite-difference gradient at the cell containing p.

    Central differences at interior cells, one-sided at boundary cells.
    Returns array [d/dx, d/dy] in field units per length unit.
    """
    spec = fld.spec
    ix, iy = spec.cell_of(p)
    v = fld.values
    if ix == 0:
        gx = (v[iy, 1] - v[iy, 0]) / spec.dx
    elif ix == spec.nx - 1:
        gx = (v[iy, ix] - v[iy, ix - 1]) / spec.dx
    else:
        gx = (v[iy, ix + 1] - v[iy, ix - 1]) / (2.0 * spec.dx)
    if iy == 0:
        gy = (v[1, ix] - v[0, ix]) / spec.dy
    elif iy == spec.ny - 1:
        gy = (v[iy, ix] - v[iy - 1, ix]) / spec.dy
    else:
        gy = (v[iy + 1, ix] - v[iy - 1, ix]) / (2.0 * spec.dy)
    return np.array([gx, gy])


def nearest_negative(
    fld: ScalarField, p: Point, mask: Optional[np.ndarray] = None
) -> Optional[Point]:
    """Center of the negative-valued cell closest to p, or None.

    Distance is Euclidean from p to cell centers; ties break to the lowest
    row-major cell index. An optional boolean mask restricts the candidates.
    """
    spec = fld.spec
    px, py = float(p[0]), float(p[1])
    if mask is None:
        flat = kernels.nearest_negative_scan(
            fld.values, spec.centers_x, spec.centers_y, px, py
        )
        if flat < 0:
            return None
        iy, ix = divmod(int(flat), spec.nx)
    else:
        mask = np.asarray(mask)
        if mask.shape != fld.values.shape:
            raise DimensionError(
                f"mask shape {mask.shape} does not match field {fld.values.shape}"
            )
        idx = np.flatnonzero(mask.ravel()).astype(np.intp)
        if idx.size == 0:
            return None
        vals = fld.values.ravel()[idx]
        cy, cxi = np.divmod(idx, spec.nx)
        pos = kernels.nearest_negative_among(
            np.ascontiguousarray(vals),
            np.ascontiguousarray(spec.centers_x[cxi]),
            np.ascontiguousarray(spec.centers_y[cy]),
            px,
            py,
        )
        if pos < 0:
            return None
        iy, ix = divmod(int(idx[pos]), spec.nx)
    return spec.cell_center(ix, iy)
