"""Numerical laboratory for spectral shape functionals on star-shaped planar domains."""

__version__ = "0.1.0"

from .geometry import BallSpec, PsiWeight, StarDomain  # noqa: F401
