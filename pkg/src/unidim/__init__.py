"""Dimension estimation toolkit for unimodular random discrete spaces."""

__version__ = "0.1.0"

from .core import (FiniteSpace, GraphWindow, PointWindow, SlopeFit,
                   TruncationError, cycle_space, dyadic_grid,
                   heisenberg_quotient_space, mtp_residual, slope_fit,
                   torus_space)
from .rng import RngStream

__all__ = [
    "FiniteSpace", "GraphWindow", "PointWindow", "SlopeFit",
    "TruncationError", "cycle_space", "dyadic_grid",
    "heisenberg_quotient_space", "mtp_residual", "slope_fit", "torus_space",
    "RngStream", "__version__",
]
