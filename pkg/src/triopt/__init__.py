"""Linear causal discovery: Stein-score ordering followed by triangular least squares.

Storage convention everywhere: ``B[j, i]`` is the coefficient of the edge
``j -> i``, so data satisfy ``X = X @ B + E`` row-wise.
"""
from .graph_sim import DataMatrix, NoiseSpec, WeightedDag, simulate
from .stein_order import CausalOrder, KernelState, center, order
from .tri_opt import OptConfig, optimize
from .experiments import discover

__all__ = [
    "CausalOrder",
    "DataMatrix",
    "KernelState",
    "NoiseSpec",
    "OptConfig",
    "WeightedDag",
    "center",
    "discover",
    "optimize",
    "order",
    "simulate",
]
__version__ = "0.1.0"
