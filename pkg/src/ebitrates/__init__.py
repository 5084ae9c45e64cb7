"""Optimal rates and exponents for distilling EPR pairs from tripartite pure states."""
from ._backend import BACKEND
from .state import (
    Distribution,
    MarginalSpectrum,
    PureTripartiteState,
    marginal,
    min_entropy_entanglement,
    relative_entropy,
    renyi_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Distribution",
    "MarginalSpectrum",
    "PureTripartiteState",
    "marginal",
    "min_entropy_entanglement",
    "relative_entropy",
    "renyi_entropy",
]
