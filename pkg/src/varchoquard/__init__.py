"""Variable-exponent fractional Sobolev spaces and Choquard problems on 1-D grids."""

from .choquard import (
    EnergyReport,
    choquard_K,
    choquard_K_derivative,
    energy_gradient,
    energy_hessian,
    energy_I,
    residual,
)
from .exponents import ExponentBundle, ScalarExponentField, SymmetricExponentField, default_bundle
from .grid import GradedGrid, Grid1D, GridFunction, integrate, double_integrate
from .nakano import luxemburg_norm, modular_lp
from .sobolev import flap_apply, gagliardo_modular, seminorm, sobolev_norm
from .solver import MountainPassConfig, SolveReport, mountain_pass_solve, verify_mp_geometry

__version__ = "0.1.0"

__all__ = [
    "EnergyReport",
    "choquard_K",
    "choquard_K_derivative",
    "energy_gradient",
    "energy_hessian",
    "energy_I",
    "residual",
    "ExponentBundle",
    "ScalarExponentField",
    "SymmetricExponentField",
    "default_bundle",
    "GradedGrid",
    "Grid1D",
    "GridFunction",
    "integrate",
    "double_integrate",
    "luxemburg_norm",
    "modular_lp",
    "flap_apply",
    "gagliardo_modular",
    "seminorm",
    "sobolev_norm",
    "MountainPassConfig",
    "SolveReport",
    "mountain_pass_solve",
    "verify_mp_geometry",
]
