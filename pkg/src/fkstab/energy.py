"""Base and penalized shape energies.

E_base = λ1 + Tfrak·tor + f_pen(area) with the piecewise-linear volume
penalty, and F_total = E_base + tau·h_val with a bounded valley-shaped
nonlinearity of the combined distance to the matched ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .distances import C0_RADIUS_FRACTION, DistanceReport, distance_report
from .elliptic import (
    GAP_MIN_DEFAULT,
    SpectralResult,
    TorsionResult,
    solve_spectrum,
    solve_torsion,
)
from .errors import HardCapViolation
from .geometry import StarDomain, area
from .mesh import FemSystem, TriMesh, assemble, triangulate


@dataclass(frozen=True)
class EnergyParams:
    """Parameters of the energy pipeline.

    v: target volume; vmax: hard cap; eta: volume-penalty slope in (0, 1);
    Tfrak: torsion coefficient in (0, 1]; tau: nonlinearity coefficient;
    c_nl: the valley constant c of the nonlinearity (set to d_j² by the
    selection driver); c0: ψ transition scale (None resolves to
    0.2 × matched-ball radius); gap_min: spectral-gap guard.
    """

    v: float = math.pi
    vmax: float = 2.0 * math.pi
    eta: float = 0.1
    Tfrak: float = 0.05
    tau: float = 0.0
    c_nl: float = 1.0
    c0: float | None = None
    gap_min: float = GAP_MIN_DEFAULT

    def __post_init__(self):
        if not (0.0 < self.v < self.vmax):
            raise ValueError("need 0 < v < vmax")
        if not (0.0 < self.eta < 1.0):
            raise ValueError("eta must lie in (0, 1)")
        if not (0.0 < self.Tfrak <= 1.0):
            raise ValueError("Tfrak must lie in (0, 1]")
        if self.tau < 0.0:
            raise ValueError("tau must be nonnegative")
        if self.tau > 0.0 and not self.c_nl > 0.0:
            raise ValueError("c_nl must be positive when tau > 0")

    def resolved_c0(self) -> float:
        """Transition scale pinned to the target-volume matched ball."""
        if self.c0 is not None:
            return self.c0
        return C0_RADIUS_FRACTION * math.sqrt(self.v / math.pi)

    def pinned(self) -> "EnergyParams":
        """Copy with c0 materialized, so the energy is a fixed domain functional."""
        return replace(self, c0=self.resolved_c0())


def volume_penalty(t: float, v: float, eta: float) -> float:
    """Piecewise-linear penalty: η(t - v) below v, (t - v)/η above."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    return eta * (t - v) if t <= v else (t - v) / eta


def nonlinearity_h(d_star_sq: float, c: float) -> float:
    """Valley nonlinearity sqrt(c² + (c - d_star_sq)²) - c, zero at d_star_sq = c."""
    if not c > 0.0:
        raise ValueError("c must be positive")
    if d_star_sq < 0.0:
        raise ValueError("d_star_sq must be nonnegative")
    return math.sqrt(c * c + (c - d_star_sq) ** 2) - c


def nonlinearity_h_prime(d_star_sq: float, c: float) -> float:
    """d/d(d_star_sq) of the valley nonlinearity."""
    return (d_star_sq - c) / math.sqrt(c * c + (c - d_star_sq) ** 2)


@dataclass(frozen=True)
class EnergyReport:
    lambda1: float
    tor: float
    vol: float
    f_pen: float
    d_report: DistanceReport
    h_val: float
    E_base: float
    F_total: float
    gap_ok: bool


@dataclass(frozen=True)
class PipelineState:
    """One full solve of a domain: mesh, FE system, solutions, and report."""

    domain: StarDomain
    mesh: TriMesh
    system: FemSystem
    spectral: SpectralResult
    torsion: TorsionResult
    report: EnergyReport


def run_pipeline(d: StarDomain, p: EnergyParams, h: float) -> PipelineState:
    """Mesh, solve spectrum and torsion, compute distances, compose the report."""
    vol = area(d)
    if vol > p.vmax:
        raise HardCapViolation(f"area {vol:.6g} exceeds vmax {p.vmax:.6g}")
    mesh = triangulate(d, h)
    sys = assemble(mesh)
    spectral = solve_spectrum(sys, gap_min=p.gap_min)
    torsion = solve_torsion(sys)
    d_rep = distance_report(d, spectral, c0=p.resolved_c0())
    f_pen = volume_penalty(vol, p.v, p.eta)
    h_val = nonlinearity_h(d_rep.d_star_sq, p.c_nl) if p.tau > 0.0 else 0.0
    e_base = spectral.lambda1 + p.Tfrak * torsion.tor + f_pen
    report = EnergyReport(
        lambda1=spectral.lambda1,
        tor=torsion.tor,
        vol=vol,
        f_pen=f_pen,
        d_report=d_rep,
        h_val=h_val,
        E_base=e_base,
        F_total=e_base + p.tau * h_val,
        gap_ok=spectral.gap_ok,
    )
    return PipelineState(d, mesh, sys, spectral, torsion, report)


def evaluate(d: StarDomain, p: EnergyParams, h: float) -> EnergyReport:
    """Itemized energy of a domain at mesh size h."""
    return run_pipeline(d, p, h).report
