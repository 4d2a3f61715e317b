"""Distances between a domain and its matched ball.

d0 is the symmetric-difference area, d1 the L² distance of the zero-extended
normalized first eigenfunctions on a shared Cartesian background grid, and
d_star_sq = asymmetry + d1² combines them. The ball eigenfunction is always
evaluated from its closed Bessel form, never from a second mesh, so only one
discretization error source enters the distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import matplotlib.tri as mtri
import numpy as np
from scipy.special import j0, j1, jn_zeros

from .errors import GridTooCoarse
from .elliptic import ScalarField, SpectralResult
from .geometry import (
    BallSpec,
    StarDomain,
    area,
    asymmetry,
    barycenter,
    symmetric_difference_ball,
)

J0_FIRST_ZERO = float(jn_zeros(0, 1)[0])
J1_FIRST_ZERO = float(jn_zeros(1, 1)[0])
DISK_LAMBDA1 = J0_FIRST_ZERO ** 2
DISK_LAMBDA2 = J1_FIRST_ZERO ** 2

C0_RADIUS_FRACTION = 0.2


def ball_lambda1(radius: float) -> float:
    return DISK_LAMBDA1 / radius ** 2


def ball_lambda2(radius: float) -> float:
    return DISK_LAMBDA2 / radius ** 2


def ball_torsion(radius: float) -> float:
    """tor(B_R) = -πR⁴/16 (energy-form sign convention)."""
    return -math.pi * radius ** 4 / 16.0


def ball_eigenfunction(b: BallSpec, points: np.ndarray) -> np.ndarray:
    """Normalized nonnegative first eigenfunction of a disk, extended by zero."""
    pts = np.asarray(points, dtype=float)
    rho = np.hypot(pts[..., 0] - b.center[0], pts[..., 1] - b.center[1])
    scale = 1.0 / (math.sqrt(math.pi) * b.radius * j1(J0_FIRST_ZERO))
    vals = scale * j0(J0_FIRST_ZERO * rho / b.radius)
    return np.where(rho < b.radius, vals, 0.0)


def ball_torsion_function(b: BallSpec, points: np.ndarray) -> np.ndarray:
    """Torsion function of a disk, (R² - ρ²)/4 inside, zero outside."""
    pts = np.asarray(points, dtype=float)
    rho2 = (pts[..., 0] - b.center[0]) ** 2 + (pts[..., 1] - b.center[1]) ** 2
    return np.where(rho2 < b.radius ** 2, 0.25 * (b.radius ** 2 - rho2), 0.0)


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian background grid: origin, spacing g, shape (nx, ny)."""

    x0: float
    y0: float
    g: float
    nx: int
    ny: int

    def points(self) -> np.ndarray:
        xs = self.x0 + self.g * np.arange(self.nx)
        ys = self.y0 + self.g * np.arange(self.ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.g * self.g)


@dataclass(frozen=True)
class GridField:
    """Field values rasterized on a background grid, zero outside the domain."""

    grid: Grid
    values: np.ndarray


def common_grid(d: StarDomain, b: BallSpec, g: float) -> Grid:
    """Grid covering Ω ∪ B with margin 2g."""
    theta = np.linspace(0.0, 2.0 * np.pi, 1024, endpoint=False)
    pts = d.boundary_point(theta)
    lo = np.minimum(pts.min(axis=0), np.array(b.center) - b.radius) - 2.0 * g
    hi = np.maximum(pts.max(axis=0), np.array(b.center) + b.radius) + 2.0 * g
    nx = int(math.ceil((hi[0] - lo[0]) / g)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / g)) + 1
    return Grid(float(lo[0]), float(lo[1]), g, nx, ny)


def rasterize(field: ScalarField, grid: Grid) -> GridField:
    """Barycentric interpolation of a FE field onto the grid, zero outside."""
    mesh = field.mesh
    tri = mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles)
    interp = mtri.LinearTriInterpolator(tri, field.values)
    pts = grid.points()
    vals = interp(pts[..., 0].ravel(), pts[..., 1].ravel())
    return GridField(grid, np.asarray(vals.filled(0.0)).reshape(grid.nx, grid.ny))


def matched_ball(d: StarDomain) -> BallSpec:
    """Ball with the same area and barycenter as the domain."""
    return BallSpec(barycenter(d), math.sqrt(area(d) / math.pi))


def d1(omega: StarDomain, s_omega: SpectralResult, b: BallSpec, grid_g: float) -> float:
    """Grid L² distance between the domain eigenfunction and the ball's Bessel form."""
    h = s_omega.u.mesh.h
    if grid_g > 0.5 * h + 1e-12:
        raise GridTooCoarse(f"grid spacing {grid_g} exceeds h/2 = {0.5 * h}")
    grid = common_grid(omega, b, grid_g)
    u_dom = rasterize(s_omega.u, grid)
    u_ball = ball_eigenfunction(b, grid.points())
    return math.sqrt(grid.integrate((u_dom.values - u_ball) ** 2))


@dataclass(frozen=True)
class DistanceReport:
    d0: float
    d1: float
    asym: float
    d_star_sq: float
    matched_ball: BallSpec

    @property
    def d_star(self) -> float:
        return math.sqrt(self.d_star_sq)


def distance_report(
    omega: StarDomain,
    s_omega: SpectralResult,
    c0: float | None = None,
    grid_g: float | None = None,
) -> DistanceReport:
    """All distances of a domain to its matched ball."""
    b = matched_ball(omega)
    if c0 is None:
        c0 = C0_RADIUS_FRACTION * b.radius
    if grid_g is None:
        grid_g = 0.5 * s_omega.u.mesh.h
    d0_val = symmetric_difference_ball(omega, b)
    asym_val = asymmetry(omega, b, c0)
    d1_val = d1(omega, s_omega, b, grid_g)
    return DistanceReport(
        d0=d0_val,
        d1=d1_val,
        asym=asym_val,
        d_star_sq=asym_val + d1_val ** 2,
        matched_ball=b,
    )


def l1_difference(a: GridField, b: GridField) -> float:
    """∫|a - b| for two fields on the same grid."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return a.grid.integrate(np.abs(a.values - b.values))
