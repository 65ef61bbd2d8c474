"""Noise-directed adaptive remapping for QAOA on Ising problems."""
from .ising import GaugeMask, IsingHamiltonian, energy, energies, gauge_transform, generate_sk
from .remap import NdarConfig, NdarTrace, QaoaOptimizer, run_ndar

__version__ = "0.1.0"

__all__ = [
    "GaugeMask",
    "IsingHamiltonian",
    "NdarConfig",
    "NdarTrace",
    "QaoaOptimizer",
    "energies",
    "energy",
    "gauge_transform",
    "generate_sk",
    "run_ndar",
]
