"""Exact dephasing of double-well impurities immersed in a Bose gas."""

from .bogoliubov import bogo_energy, epsilon, mode_quantities, uv_suppression
from .coupling import CouplingModel, Geometry
from .densmat import PhaseSet, ReducedDensityMatrix, coherence_magnitude, evolve, phases
from .kernels import (Bath, DecoherenceCurve, gamma0_3d, gamma0_curve, gamma12_3d, gamma_1d,
                      gamma_general, pair_curves, spectral_density)
from .params import (DerivedScales, ParameterError, PhysicalParams, derive_scales, load_preset,
                     standard_3d, to_reduced_units)
from .quadrature import QuadratureError, QuadratureSpec, integrate_radial

__version__ = "0.1.0"

__all__ = [
    "Bath", "CouplingModel", "DecoherenceCurve", "DerivedScales", "Geometry", "ParameterError",
    "PhaseSet", "PhysicalParams", "QuadratureError", "QuadratureSpec", "ReducedDensityMatrix",
    "bogo_energy", "coherence_magnitude", "derive_scales", "epsilon", "evolve", "gamma0_3d",
    "gamma0_curve", "gamma12_3d", "gamma_1d", "gamma_general", "integrate_radial", "load_preset",
    "mode_quantities", "standard_3d", "phases", "spectral_density", "to_reduced_units",
    "uv_suppression",
]
