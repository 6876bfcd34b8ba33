"""vpfield: a desk-scale laboratory for the complex wave-density form of Vlasov-Poisson.

The package evolves a complex field alpha(t, x, v) with f = |alpha|^2 by
semi-Lagrangian transport along self-consistent characteristics, runs the
fixed-point iteration of the underlying existence argument as a validation
mode, and ships the weighted local-supremum norms, interaction-kernel
convolutions and diagnostic batteries needed to property-test the dynamics.
"""

from .grid import GridConfig, PhaseGrid, make_grid
from .fields import (RealField, SpatialComplexVectorField, SpatialField,
                     SpatialVectorField, WaveField, interpolate, lp_norm,
                     modulus_squared)
from .profiles import (GaussianProfile, RandomSmoothProfile, SmoothBallProfile,
                       ZeroProfile, sample)

__all__ = [
    "GridConfig", "PhaseGrid", "make_grid",
    "WaveField", "RealField", "SpatialField", "SpatialVectorField",
    "SpatialComplexVectorField", "interpolate", "lp_norm", "modulus_squared",
    "ZeroProfile", "GaussianProfile", "SmoothBallProfile",
    "RandomSmoothProfile", "sample",
]

__version__ = "0.1.0"
