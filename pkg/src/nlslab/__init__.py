"""nlslab: a desk-scale numerical laboratory for NLS and Hartree dynamics.

Spectral split-step propagation on periodic boxes emulating R^n, quadratic
Morawetz identity diagnostics, exact-rational exponent planning for
interpolation/Strichartz bookkeeping, and numerical scattering probes.
"""

from .fields import Field, GridSpec, boundary_mass_fraction
from .models import FreeModel, HartreeKernel, PowerLaw
from .propagation import (BlowUpError, StepperConfig, TrajectoryRecord,
                          free_propagate, propagate, strang_step)
from .spectral import (fractional_omega, gradient, h1_norm, inner,
                       l2_norm, linear_convolve, lp_norm, sobolev_norm,
                       spectral_transform)
from .weights import AbsX, Directional, Projection, weight_fields

__all__ = [
    "AbsX", "BlowUpError", "Directional", "Field", "FreeModel", "GridSpec",
    "HartreeKernel", "PowerLaw", "Projection", "StepperConfig",
    "TrajectoryRecord", "boundary_mass_fraction", "fractional_omega",
    "free_propagate", "gradient", "h1_norm", "inner", "l2_norm",
    "linear_convolve", "lp_norm", "propagate", "sobolev_norm",
    "spectral_transform", "strang_step", "weight_fields",
]

__version__ = "0.1.0"
