"""Constrained Rydberg-ladder simulator.

Exact diagonalisation in the blockaded basis, Floquet protocols,
Schrieffer-Wolff effective models, ensembles, spectral and entanglement
diagnostics, and open-system evolution.
"""

__version__ = "0.1.0"

from .kernels import BACKEND
from .lattice import Lattice, build_lattice, ladder
from .basis import ConstrainedBasis, enumerate_basis, format_state, named_state, parse_state
from .symmetry import SymmetrySector, build_sector
from .operators import DetuningProfile, build_longrange, build_pxp_z, chirality, hamiltonian, observable
from .timeseries import TimeSeries
from .dynamics import FloquetSpec, Propagator, evolve, fidelity_series, run_floquet

__all__ = [
    "BACKEND",
    "ConstrainedBasis",
    "DetuningProfile",
    "FloquetSpec",
    "Lattice",
    "Propagator",
    "SymmetrySector",
    "TimeSeries",
    "build_lattice",
    "build_longrange",
    "build_pxp_z",
    "build_sector",
    "chirality",
    "enumerate_basis",
    "evolve",
    "fidelity_series",
    "format_state",
    "hamiltonian",
    "ladder",
    "named_state",
    "observable",
    "parse_state",
    "run_floquet",
]
