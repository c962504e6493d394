"""Spectra of inhomogeneous drums and Weyl-law checks on the d-cube."""

from .basis import BC, BasisSpec, enumerate_states, matrix_element, mode_energy, mode_value
from .exprdsl import DensityExpr, eval_density, parse_density
from .geometry import (
    ConformalMap,
    CubeDomain,
    EffectiveDensity,
    area_integral,
    boundary_integral,
    cardioid_map,
    isoperimetric_check,
    parse_map,
)
from .perturbation import perturb_energy, resummed_energy
from .solver import assemble, compute_spectrum, solve_spectrum

__version__ = "0.1.0"

__all__ = [
    "BC",
    "BasisSpec",
    "ConformalMap",
    "CubeDomain",
    "DensityExpr",
    "EffectiveDensity",
    "area_integral",
    "assemble",
    "boundary_integral",
    "cardioid_map",
    "compute_spectrum",
    "enumerate_states",
    "eval_density",
    "isoperimetric_check",
    "matrix_element",
    "mode_energy",
    "mode_value",
    "parse_density",
    "parse_map",
    "perturb_energy",
    "resummed_energy",
    "solve_spectrum",
]
