"""Exact solution of the one-dimensional transverse-field compass chain.

Momentum-block solver, free-fermion correlators, ground-state diagnostics,
scaling fits and a brute-force diagonalization oracle.
"""
from .errors import CompassError, ConfigError, NumericalConsistencyError, SizeLimitError
from .model import Boundary, ModelParams, momentum_grid, site_index
from .solver import (
    energy_gap,
    finite_size_gap,
    ground_state,
    ising_ground_energy,
    spectra_n4,
    spectrum_analytic,
)

__version__ = "0.1.0"

__all__ = [
    "Boundary",
    "CompassError",
    "ConfigError",
    "ModelParams",
    "NumericalConsistencyError",
    "SizeLimitError",
    "energy_gap",
    "finite_size_gap",
    "ground_state",
    "ising_ground_energy",
    "momentum_grid",
    "site_index",
    "spectra_n4",
    "spectrum_analytic",
]
