"""Exception types shared across the package."""


class FkstabError(Exception):
    """Base class for all package errors."""


class NotStarShapedAboutCenter(FkstabError):
    """The boundary curve is not a radial graph about the requested point."""


class DegenerateMesh(FkstabError):
    """Triangulation violated a quality invariant (star floor or minimum angle)."""


class NoConvergence(FkstabError):
    """Iterative eigensolver missed its residual target."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"no convergence after {iterations} iterations (residual {residual:.3e})")


class SolveFailure(FkstabError):
    """Direct linear solve failed on a system that should be SPD."""


class GridTooCoarse(FkstabError):
    """Background grid spacing exceeds half the source mesh size."""


class HardCapViolation(FkstabError):
    """Domain area exceeds the hard volume cap vmax."""


class KinkAtConstraint(FkstabError):
    """Volume penalty is at its kink; the directional derivative is one-sided.

    Carries both one-sided slopes of the penalty term so the caller can pick
    the descent-feasible side.
    """

    def __init__(self, base_gradient: float, d_vol: float, lower_slope: float, upper_slope: float):
        self.base_gradient = base_gradient
        self.d_vol = d_vol
        self.lower_slope = lower_slope
        self.upper_slope = upper_slope
        super().__init__(
            "area sits at the volume-penalty kink; "
            f"one-sided totals: {base_gradient + lower_slope * d_vol:.6g} / "
            f"{base_gradient + upper_slope * d_vol:.6g}"
        )


class NotNested(FkstabError):
    """Inner domain is not contained in the outer domain."""


class SeedTooClose(FkstabError):
    """Selection seed is within the discretization floor of a ball."""


class ConfigError(FkstabError):
    """Malformed or missing configuration input."""
