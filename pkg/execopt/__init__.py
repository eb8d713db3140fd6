# Optimal execution under nonlinear transient market impact.
from .cost_engine import CostModel, expected_cost
from .impact_models import ConcaveConvex, PerturbedPowerLaw, PowerLaw
from .kernels import GridSpec, Strategy, gss_strategy, kernel_matrices, vwap_strategy
from .reports import SolverReport

__version__ = "0.1.0"

__all__ = [
    "ConcaveConvex", "CostModel", "GridSpec", "PerturbedPowerLaw", "PowerLaw", "SolverReport",
    "Strategy", "expected_cost", "gss_strategy", "kernel_matrices", "vwap_strategy",
]
