"""Projected gradient descent on Fourier boundary coefficients, the
selection-principle driver, stability sweeps, and the nested-domain
eigenfunction estimate.

Shape descent acts on the Fourier coefficients of the boundary perturbation
with the gradient projected onto volume-neutral directions through the exact
dilation direction. The volume itself is handled per track: renormalize mode
rescales every trial to the target area, while the penalized track moves the
base radius by a proximal snap toward the volume-penalty kink (where its
minimizers sit) before each shape step. Trial steps that break the mesh, the
hard volume cap, or the spectral-gap guard count as failed line-search
probes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .distances import ball_lambda1, ball_torsion
from .elliptic import flux_traces
from .energy import EnergyParams, PipelineState, run_pipeline
from .errors import (
    DegenerateMesh,
    HardCapViolation,
    NoConvergence,
    NotNested,
    SeedTooClose,
    SolveFailure,
)
from .geometry import K_MAX, StarDomain, area, radial_profile_about
from .distances import Grid, rasterize
from .shapegrad import BoundaryField, directional_derivatives


@dataclass(frozen=True)
class OptimizerConfig:
    """Descent knobs: mode cap, Armijo rule, budgets, volume handling, mesh schedule."""

    modes_k: int = 8
    step0: float = 0.5
    armijo_factor: float = 0.5
    sufficient_decrease: float = 1e-4
    max_iter: int = 40
    fine_iters: int = 10
    tol_grad: float = 1e-3
    volume_handling: str = "renormalize"
    h_coarse: float = 0.04
    h_fine: float = 0.02
    min_step: float = 1e-8
    fd_step: float = 1e-3

    def __post_init__(self):
        if not (1 <= self.modes_k <= K_MAX):
            raise ValueError(f"modes_k must lie in [1, {K_MAX}]")
        if self.volume_handling not in ("renormalize", "penalized"):
            raise ValueError("volume_handling must be 'renormalize' or 'penalized'")
        for name in ("step0", "armijo_factor", "sufficient_decrease", "tol_grad", "min_step", "fd_step"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.fine_iters <= self.max_iter:
            raise ValueError("fine_iters must not exceed max_iter")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    grad_norm: float
    area: float
    d_star_sq: float
    h: float


@dataclass
class OptTrace:
    rows: list[TraceRow] = field(default_factory=list)
    converged: bool = False
    stalled: bool = False
    message: str = ""


def _coords_of(d: StarDomain, k_cap: int) -> np.ndarray:
    """Flat (a_1, b_1, ..., a_K, b_K) coefficient vector."""
    coeff = {k: (a, b) for k, a, b in d.modes}
    flat = []
    for k in range(1, k_cap + 1):
        a, b = coeff.get(k, (0.0, 0.0))
        flat.extend([a, b])
    return np.array(flat)


def _domain_of(coords: np.ndarray, center, k_cap: int, r0: float) -> StarDomain:
    modes = []
    for i in range(k_cap):
        a, b = coords[2 * i], coords[2 * i + 1]
        if a != 0.0 or b != 0.0:
            modes.append((i + 1, a, b))
    return StarDomain(center, r0, tuple(modes))


def _coordinate_fields(d: StarDomain, k_cap: int) -> list[BoundaryField]:
    """Radial speed of the boundary per unit change of each Fourier coefficient."""
    fields = []
    for k in range(1, k_cap + 1):
        fields.append(BoundaryField(modes=((k, d.r0, 0.0),)))
        fields.append(BoundaryField(modes=((k, 0.0, d.r0),)))
    return fields


def _dilation_field(d: StarDomain) -> BoundaryField:
    """Radial speed of the unit dilation d/ds of s·r(θ) at s = 1."""
    return BoundaryField(const=d.r0, modes=tuple((k, d.r0 * a, d.r0 * b) for k, a, b in d.modes))


def _projected_gradient(
    state: PipelineState, p: EnergyParams, cfg: OptimizerConfig, k_cap: int
) -> np.ndarray:
    """Shape gradient over (a_k, b_k), projected onto volume-neutral directions."""
    fields = _coordinate_fields(state.domain, k_cap)
    traces = flux_traces(state.system, state.spectral, state.torsion)
    derivs = directional_derivatives(
        state, p, fields + [_dilation_field(state.domain)], traces, cfg.fd_step
    )
    de_dil, dvol_dil = derivs[-1]
    return np.array([de - dv / dvol_dil * de_dil for de, dv in derivs[:-1]])


def _try_pipeline(trial: StarDomain, p: EnergyParams, h: float) -> PipelineState | None:
    try:
        cand = run_pipeline(trial, p, h)
    except (ValueError, DegenerateMesh, HardCapViolation, NoConvergence, SolveFailure):
        return None
    if not cand.report.gap_ok:
        return None
    return cand


def _volume_snap(
    cur: StarDomain, state: PipelineState, p: EnergyParams, h: float
) -> tuple[StarDomain, PipelineState]:
    """Proximal step for the piecewise-linear volume penalty along pure dilation.

    The penalized minimizer pins the area at the penalty kink, so the first
    candidate dilation lands exactly on the target area, with geometric
    backoff if the full snap does not decrease the energy.
    """
    vol = state.report.vol
    if abs(vol - p.v) < 1e-12 * p.v:
        return cur, state
    s_star = math.sqrt(p.v / vol)
    frac = 1.0
    for _ in range(6):
        s = 1.0 + (s_star - 1.0) * frac
        cand = _try_pipeline(cur.dilated(s), p, h)
        if cand is not None and cand.report.F_total < state.report.F_total:
            return cand.domain, cand
        frac *= 0.5
    return cur, state


def minimize(
    start: StarDomain, p: EnergyParams, cfg: OptimizerConfig
) -> tuple[StarDomain, OptTrace]:
    """Armijo-backtracked gradient descent on boundary Fourier coefficients.

    In renormalize mode each trial is rescaled to the target area exactly; in
    penalized mode the base radius descends through a volume-snap step toward
    the penalty kink before each shape step. Either way the shape step uses
    the volume-projected gradient and the objective decreases strictly on
    every accepted step within a mesh level.
    """
    p = p.pinned()
    renorm = cfg.volume_handling == "renormalize"
    cur = start.renormalized_to_area(p.v) if renorm else start
    k_cap = cfg.modes_k
    trace = OptTrace()

    h = cfg.h_coarse
    coarse_budget = cfg.max_iter - cfg.fine_iters
    state = run_pipeline(cur, p, h)
    step = cfg.step0

    for it in range(cfg.max_iter):
        if it == coarse_budget and h != cfg.h_fine:
            h = cfg.h_fine
            state = run_pipeline(cur, p, h)
        if not renorm:
            cur, state = _volume_snap(cur, state, p, h)
        g = _projected_gradient(state, p, cfg, k_cap)
        gnorm = float(np.linalg.norm(g))
        vol_ok = renorm or abs(state.report.vol - p.v) < 1e-6 * p.v
        trace.rows.append(
            TraceRow(it, state.report.F_total, gnorm, state.report.vol,
                     state.report.d_report.d_star_sq, h)
        )
        if gnorm < cfg.tol_grad and vol_ok:
            if h == cfg.h_fine:
                trace.converged = True
                trace.message = "gradient norm below tolerance"
                break
            h = cfg.h_fine
            state = run_pipeline(cur, p, h)
            continue

        coords = _coords_of(cur, k_cap)
        obj = state.report.F_total
        alpha = min(cfg.step0, 4.0 * step)
        accepted = False
        while alpha >= cfg.min_step:
            try:
                trial = _domain_of(coords - alpha * g, cur.center, k_cap, cur.r0)
                if renorm:
                    trial = trial.renormalized_to_area(p.v)
            except ValueError:
                alpha *= cfg.armijo_factor
                continue
            cand = _try_pipeline(trial, p, h)
            if cand is None:
                alpha *= cfg.armijo_factor
                continue
            if cand.report.F_total <= obj - cfg.sufficient_decrease * alpha * gnorm ** 2:
                accepted = True
                break
            alpha *= cfg.armijo_factor
        if not accepted:
            if h != cfg.h_fine:
                h = cfg.h_fine
                state = run_pipeline(cur, p, h)
                continue
            trace.stalled = True
            trace.message = "line search stalled"
            break
        cur, state, step = trial, cand, alpha
    else:
        trace.message = "iteration budget exhausted"

    if state.mesh.h != cfg.h_fine:
        state = run_pipeline(cur, p, cfg.h_fine)
    return cur, trace


@dataclass(frozen=True)
class FloorReport:
    """Discretization floor at mesh size h: distance and energy error on a meshed ball."""

    h: float
    d_star_floor: float
    energy_floor: float
    ball_state: PipelineState


def discretization_floor(p: EnergyParams, h: float, center=(0.0, 0.0)) -> FloorReport:
    """Measure the floor by running the pipeline on a ball of the target area."""
    p = p.pinned()
    radius = math.sqrt(p.v / math.pi)
    ball = StarDomain(center, radius, ())
    state = run_pipeline(ball, p, h)
    lam_err = abs(state.report.lambda1 - ball_lambda1(radius))
    tor_err = abs(state.report.tor - ball_torsion(radius))
    return FloorReport(
        h=h,
        d_star_floor=state.report.d_report.d_star,
        energy_floor=lam_err + p.Tfrak * tor_err,
        ball_state=state,
    )


@dataclass(frozen=True)
class SelectionRun:
    """One desk-scale pass of the selection comparisons.

    The verdicts are populated (non-None) only when the inner minimization
    converged; a stalled run reports its best iterate without comparisons.
    """

    seed: StarDomain
    d_j: float
    c_nl: float
    tau: float
    minimizer: StarDomain
    deficit_seed: float
    deficit_min: float
    d_star_min: float
    verdict_deficit: bool | None
    verdict_distance: bool | None
    floor_d: float
    floor_energy: float
    converged: bool
    metadata: dict


def selection_step(seed: StarDomain, p_base: EnergyParams, cfg: OptimizerConfig) -> SelectionRun:
    """Seeded run of the penalized minimization with the two comparison verdicts.

    The valley constant is pinned to the seed distance (c = d_j²), the
    functional F = E + tau·h is minimized from the seed, and the deficit
    and distance-retention comparisons are evaluated at the fine mesh with
    tolerance 3× the measured floor.
    """
    p = p_base.pinned()
    floor = discretization_floor(p, cfg.h_fine, center=seed.center)
    seed = seed.renormalized_to_area(p.v)
    seed_state = run_pipeline(seed, p, cfg.h_fine)
    d_j = seed_state.report.d_report.d_star
    if d_j <= 3.0 * floor.d_star_floor:
        raise SeedTooClose(
            f"seed distance {d_j:.3e} within 3x floor {floor.d_star_floor:.3e}"
        )
    c_nl = d_j ** 2
    p_run = replace(p, c_nl=c_nl)
    cfg_run = replace(cfg, volume_handling="renormalize")
    minimizer, trace = minimize(seed, p_run, cfg_run)
    min_state = run_pipeline(minimizer, p_run, cfg.h_fine)

    e_ball = floor.ball_state.report.E_base
    deficit_seed = seed_state.report.E_base - e_ball
    deficit_min = min_state.report.E_base - e_ball
    d_star_min = min_state.report.d_report.d_star
    tol_e = 3.0 * floor.energy_floor
    tol_d = 3.0 * floor.d_star_floor

    return SelectionRun(
        seed=seed,
        d_j=d_j,
        c_nl=c_nl,
        tau=p.tau,
        minimizer=minimizer,
        deficit_seed=deficit_seed,
        deficit_min=deficit_min,
        d_star_min=d_star_min,
        verdict_deficit=bool(deficit_min <= deficit_seed + tol_e) if trace.converged else None,
        verdict_distance=bool(0.5 * d_j <= d_star_min + tol_d) if trace.converged else None,
        floor_d=floor.d_star_floor,
        floor_energy=floor.energy_floor,
        converged=trace.converged,
        metadata={
            "iterations": len(trace.rows),
            "stalled": trace.stalled,
            "tol_e": tol_e,
            "tol_d": tol_d,
            "seed_deficit_over_djsq": deficit_seed / c_nl if c_nl > 0 else math.inf,
            "retention_tau_lower_bound": 4.0 * deficit_seed / c_nl if c_nl > 0 else math.inf,
        },
    )


@dataclass(frozen=True)
class SweepRow:
    k: int
    amplitude: float
    deficit: float
    d0: float
    d1: float
    asym: float
    d_star_sq: float
    lambda1: float
    tor: float


def stability_sweep(
    modes: list[int],
    amplitudes: list[float],
    p: EnergyParams,
    h: float,
) -> list[SweepRow]:
    """Deficits and distances of volume-renormalized cosine perturbations.

    For each (k, t) the domain r = r0(t)·(1 + t cos kθ) is renormalized to
    the target area and compared against the meshed ball at the same h, so
    discretization bias largely cancels in the deficit.
    """
    p = p.pinned()
    floor = discretization_floor(p, h)
    ball_rep = floor.ball_state.report
    e_ball = ball_rep.lambda1 + p.Tfrak * ball_rep.tor
    rows = []
    for k in modes:
        for t in amplitudes:
            dom = StarDomain((0.0, 0.0), 1.0, ((k, t, 0.0),)).renormalized_to_area(p.v)
            state = run_pipeline(dom, p, h)
            rep = state.report
            deficit = rep.lambda1 + p.Tfrak * rep.tor - e_ball
            rows.append(
                SweepRow(
                    k=k,
                    amplitude=t,
                    deficit=deficit,
                    d0=rep.d_report.d0,
                    d1=rep.d_report.d1,
                    asym=rep.d_report.asym,
                    d_star_sq=rep.d_report.d_star_sq,
                    lambda1=rep.lambda1,
                    tor=rep.tor,
                )
            )
    return rows


@dataclass(frozen=True)
class KeyEstimateReport:
    """Eigenfunction-difference bound on nested domains, with empirical constants."""

    lhs_mean: float
    lhs_abs: float
    rhs: float
    c_emp: float
    lambda_inner: float
    lambda_outer: float
    tor_inner: float
    tor_outer: float
    monotone: bool


def key_estimate_check(
    inner: StarDomain, outer: StarDomain, h: float = 0.02, p: EnergyParams | None = None
) -> KeyEstimateReport:
    """|∫f(u_outer - u_inner)| against Δtor + Δλ1 for inner ⊆ outer.

    f ≡ 1 gives lhs_mean; f = sign(u_outer - u_inner) gives lhs_abs (the L¹
    difference on the shared background grid). c_emp = lhs_abs / rhs.
    """
    if p is None:
        p = EnergyParams()
    phi = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    rho_inner = radial_profile_about(inner, inner.center, phi)
    rho_outer = radial_profile_about(outer, inner.center, phi)
    if np.any(rho_inner > rho_outer + 1e-12):
        raise NotNested("inner domain is not contained in the outer domain")

    st_in = run_pipeline(inner, p, h)
    st_out = run_pipeline(outer, p, h)

    g = 0.5 * h
    pts = outer.boundary_point(phi)
    lo = pts.min(axis=0) - 2.0 * g
    hi = pts.max(axis=0) + 2.0 * g
    grid = Grid(float(lo[0]), float(lo[1]), g,
                int(math.ceil((hi[0] - lo[0]) / g)) + 1,
                int(math.ceil((hi[1] - lo[1]) / g)) + 1)
    u_in = rasterize(st_in.spectral.u, grid).values
    u_out = rasterize(st_out.spectral.u, grid).values
    diff = u_out - u_in
    lhs_mean = abs(grid.integrate(diff))
    lhs_abs = grid.integrate(np.abs(diff))

    rhs = (st_in.report.tor - st_out.report.tor) + (
        st_in.report.lambda1 - st_out.report.lambda1
    )
    c_emp = 0.0 if rhs < 1e-12 else lhs_abs / rhs
    return KeyEstimateReport(
        lhs_mean=lhs_mean,
        lhs_abs=lhs_abs,
        rhs=rhs,
        c_emp=c_emp,
        lambda_inner=st_in.report.lambda1,
        lambda_outer=st_out.report.lambda1,
        tor_inner=st_in.report.tor,
        tor_outer=st_out.report.tor,
        monotone=bool(
            st_in.report.lambda1 >= st_out.report.lambda1
            and st_in.report.tor >= st_out.report.tor
        ),
    )
