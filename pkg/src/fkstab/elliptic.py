"""Dirichlet eigenpairs, torsion functions, and boundary flux recovery.

The generalized eigenproblem K u = λ M u on the Dirichlet-eliminated P1
system is solved by inverse iteration with a sparse LU factorization of K;
the second pair is obtained by mass-orthogonal deflation against the first.
Boundary normal derivatives are recovered variationally (testing the
residual against boundary hat functions), which is far less noisy than
elementwise P1 gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh as dense_eigh
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree

from .errors import NoConvergence, SolveFailure
from .geometry import StarDomain
from .mesh import FemSystem, TriMesh

GAP_MIN_DEFAULT = 0.5
MAX_ITER = 500
RESIDUAL_TARGET = 1e-11
RESIDUAL_LIMIT = 1e-9


@dataclass(frozen=True)
class ScalarField:
    """Piecewise-linear FE function as vertex values on a mesh."""

    mesh: TriMesh
    values: np.ndarray


@dataclass(frozen=True)
class SpectralResult:
    lambda1: float
    lambda2: float
    u: ScalarField
    residual1: float
    residual2: float
    gap_ok: bool


@dataclass(frozen=True)
class TorsionResult:
    w: ScalarField
    tor: float


@dataclass(frozen=True)
class BoundaryTrace:
    """|∂_ν u| and |∂_ν w| at boundary vertices, indexed by polar angle θ."""

    theta: np.ndarray
    u_normal: np.ndarray
    w_normal: np.ndarray


def _inverse_iteration(sys: FemSystem, lu, rng) -> tuple[float, np.ndarray, float, int]:
    """Smallest eigenpair of (K, M) by inverse iteration with direct inner solves."""
    K = sys.stiffness_int
    M = sys.mass_int
    v = rng.standard_normal(K.shape[0])
    v /= np.sqrt(v @ (M @ v))
    res = np.inf
    for it in range(1, MAX_ITER + 1):
        v = lu.solve(M @ v)
        nrm = np.sqrt(v @ (M @ v))
        if not np.isfinite(nrm) or nrm == 0.0:
            raise SolveFailure("inverse iteration broke down")
        v /= nrm
        lam = float(v @ (K @ v))
        res = np.linalg.norm(K @ v - lam * (M @ v)) / np.linalg.norm(M @ v)
        if res < RESIDUAL_TARGET:
            return lam, v, res, it
    if res < RESIDUAL_LIMIT:
        return lam, v, res, MAX_ITER
    raise NoConvergence(MAX_ITER, res)


def _deflated_second(sys: FemSystem, lu, u1: np.ndarray, rng) -> tuple[float, np.ndarray, float, int]:
    """Second eigenpair: block inverse iteration deflated against u1.

    A two-vector block with an in-block Rayleigh-Ritz step resolves the
    near-degenerate pairs that symmetric domains produce (the disk's second
    eigenvalue is double), which a single deflated vector cannot.
    """
    K = sys.stiffness_int
    M = sys.mass_int

    def project(V):
        return V - np.outer(u1, u1 @ (M @ V))

    V = project(rng.standard_normal((K.shape[0], 2)))
    res = np.inf
    for it in range(1, MAX_ITER + 1):
        V = project(lu.solve(M @ V))
        A = V.T @ (K @ V)
        B = V.T @ (M @ V)
        vals, vecs = dense_eigh(A, B)
        V = V @ vecs
        lam = float(vals[0])
        v = V[:, 0]
        nrm = np.sqrt(v @ (M @ v))
        v = v / nrm
        V[:, 0] = v
        V[:, 1] /= np.sqrt(V[:, 1] @ (M @ V[:, 1]))
        res = np.linalg.norm(K @ v - lam * (M @ v)) / np.linalg.norm(M @ v)
        if res < RESIDUAL_TARGET:
            return lam, v, res, it
    if res < RESIDUAL_LIMIT:
        return lam, v, res, MAX_ITER
    raise NoConvergence(MAX_ITER, res)


def solve_spectrum(
    sys: FemSystem, gap_min: float = GAP_MIN_DEFAULT, compute_second: bool = True
) -> SpectralResult:
    """Two lowest Dirichlet eigenpairs; u is normalized, nonnegative, ∫u² = 1.

    With compute_second=False only the ground pair is solved (lambda2 = inf,
    gap trivially ok); used by finite-difference probes that only need u.
    """
    rng = np.random.default_rng(0)
    try:
        lu = splu(sys.stiffness_int)
    except RuntimeError as exc:  # pragma: no cover - SPD by construction
        raise SolveFailure(str(exc)) from exc

    lam1, v1, res1, _ = _inverse_iteration(sys, lu, rng)
    if compute_second:
        lam2, _, res2, _ = _deflated_second(sys, lu, v1, rng)
    else:
        lam2, res2 = math.inf, 0.0

    full = np.zeros(sys.mesh.n_vertices)
    full[sys.interior] = v1
    if full.sum() < 0.0:
        full = -full
    if full.min() < -1e-10:
        raise SolveFailure(f"first eigenvector not nonnegative (min {full.min():.3e})")

    return SpectralResult(
        lambda1=lam1,
        lambda2=lam2,
        u=ScalarField(sys.mesh, full),
        residual1=res1,
        residual2=res2,
        gap_ok=bool(lam2 - lam1 >= gap_min),
    )


def solve_torsion(sys: FemSystem) -> TorsionResult:
    """Torsion function w (-Δw = 1, w = 0 on the boundary) and tor = ½∫|∇w|² - ∫w."""
    load = sys.load_vector[sys.interior]
    try:
        lu = splu(sys.stiffness_int)
        w = lu.solve(load)
    except RuntimeError as exc:  # pragma: no cover
        raise SolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise SolveFailure("torsion solve produced non-finite values")
    full = np.zeros(sys.mesh.n_vertices)
    full[sys.interior] = w
    if full.min() < -1e-12:
        raise SolveFailure(f"torsion function not nonnegative (min {full.min():.3e})")
    grad_energy = float(w @ (sys.stiffness_int @ w))
    integral = float(load @ w)
    tor = 0.5 * grad_energy - integral
    return TorsionResult(w=ScalarField(sys.mesh, full), tor=tor)


def boundary_flux(sys: FemSystem, field: ScalarField, rhs: ScalarField) -> np.ndarray:
    """Variational |∂_ν field| per boundary vertex, for -Δ field = rhs.

    flux_b = ((K field)_b - (M rhs)_b) / (lumped boundary arclength at b);
    superconvergent compared to elementwise gradients.
    """
    resid = sys.stiffness @ field.values - sys.mass @ rhs.values
    return np.abs(resid[sys.mesh.boundary] / sys.boundary_weights)


def flux_traces(sys: FemSystem, s: SpectralResult, t: TorsionResult) -> BoundaryTrace:
    """Recover |∂_ν u| and |∂_ν w| on the boundary from the solved fields."""
    u_rhs = ScalarField(sys.mesh, s.lambda1 * s.u.values)
    w_rhs = ScalarField(sys.mesh, np.ones(sys.mesh.n_vertices))
    return BoundaryTrace(
        theta=sys.mesh.boundary_theta.copy(),
        u_normal=boundary_flux(sys, s.u, u_rhs),
        w_normal=boundary_flux(sys, t.w, w_rhs),
    )


def field_to_csv(field: ScalarField, path: str) -> None:
    """Export a FE field as (x, y, value) rows keyed by vertex coordinates."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("x,y,value\n")
        for (x, y), v in zip(field.mesh.vertices, field.values):
            f.write(f"{x:.17g},{y:.17g},{v:.17g}\n")


def distance_to_boundary(d: StarDomain, points: np.ndarray, samples: int = 16384) -> np.ndarray:
    """Distance from points to the boundary curve, via a dense sample."""
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    tree = cKDTree(d.boundary_point(theta))
    dist, _ = tree.query(points)
    return dist


def growth_diagnostics(
    d: StarDomain, s: SpectralResult, t: TorsionResult, Tfrak: float
) -> tuple[float, float]:
    """Linear growth estimates of v = u + sqrt(Tfrak)·w near the boundary.

    UP: max over interior vertices of v / dist(x, ∂Ω) with dist in (0, 1).
    DO: min over boundary-seeded balls of sup_{B_r(y)} v / r over dyadic
    radii r; vertex sampling throughout. Always UP >= DO.
    """
    mesh = s.u.mesh
    v = s.u.values + np.sqrt(Tfrak) * t.w.values
    dist = distance_to_boundary(d, mesh.vertices)
    interior = np.ones(mesh.n_vertices, dtype=bool)
    interior[mesh.boundary] = False
    sel = interior & (dist > 0.0) & (dist < 1.0)
    up = float(np.max(v[sel] / dist[sel]))

    tree = cKDTree(mesh.vertices)
    seeds = mesh.vertices[mesh.boundary][:: max(1, len(mesh.boundary) // 64)]
    r = 1.0
    do = np.inf
    while r >= 4.0 * mesh.h:
        for y in seeds:
            idx = tree.query_ball_point(y, r)
            if idx:
                do = min(do, float(np.max(v[idx])) / r)
        r /= 2.0
    return up, do
