"""Exact-enumeration and Monte Carlo checks of entropy factorization for spin systems."""
from .exact import BlockWeights, Distribution, Space, estimate_best_constant, gibbs_distribution
from .model import SpinSystem, build_curie_weiss, build_potts, build_spin_glass

__all__ = [
    "BlockWeights", "Distribution", "Space", "SpinSystem",
    "build_curie_weiss", "build_potts", "build_spin_glass",
    "estimate_best_constant", "gibbs_distribution",
]
__version__ = "0.1.0"
