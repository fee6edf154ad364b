"""Strain-gradient nanoplate on a Winkler foundation.

Direct solver for the clamped sixth-order plate problem with a point load,
weak-form reconstruction of the subgrade coefficient, norm suite,
unique-continuation probes and stability experiments.
"""
from .discretization import (PlateDomain, SplineSpace, assemble_kappa_mass, assemble_stiffness,
                             build_space, point_load_vector)
from .errors import (ConfigError, DegenerateDataError, IndefiniteSystemError,
                     InsufficientSamplesError, InvalidCoefficientError, InvalidMaterialError,
                     LoadPlacementError, MaterialNotConvexError, NanoplateError, NumericError,
                     SolverDivergenceError, ValidationError)
from .fields import ExprField, GridField, SplineField, constant, field_from_spec
from .harness import Problem, make_kappa, run_pair, stability_sweep, verify_key_estimate
from .inverse import (Measurement, choose_alpha, kappa_basis, kappa_error, measure,
                      project_measurement, reconstruct_kappa)
from .material import MaterialParams, apply_rank4, apply_rank6, build_tensors, verify_convexity
from .norms import (NormConfig, fractional_seminorm, frequency_ratio, h_frac_norm, hk_norm,
                    interior_region, kappa_admissibility, l2_norm)
from .solver import Deflection, LoadCase, check_load_neighborhood, energy_identity, solve_direct
from .ucp import UCProbeConfig, ap_constant, probe, propagation_constant

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DegenerateDataError", "Deflection", "ExprField", "GridField",
    "IndefiniteSystemError", "InsufficientSamplesError", "InvalidCoefficientError",
    "InvalidMaterialError", "LoadCase", "LoadPlacementError", "MaterialNotConvexError",
    "MaterialParams", "Measurement", "NanoplateError", "NormConfig", "NumericError",
    "PlateDomain", "Problem", "SolverDivergenceError", "SplineField", "SplineSpace",
    "UCProbeConfig", "ValidationError", "ap_constant", "apply_rank4", "apply_rank6",
    "assemble_kappa_mass", "assemble_stiffness", "build_space", "build_tensors",
    "check_load_neighborhood", "choose_alpha", "constant", "energy_identity", "field_from_spec",
    "fractional_seminorm", "frequency_ratio", "h_frac_norm", "hk_norm", "interior_region",
    "kappa_admissibility", "kappa_basis", "kappa_error", "l2_norm", "make_kappa", "measure",
    "point_load_vector", "probe", "project_measurement", "propagation_constant",
    "reconstruct_kappa", "run_pair", "solve_direct", "stability_sweep", "verify_convexity",
    "verify_key_estimate",
]
