# execopt/perturbative.py
"""
First-order expansion for weakly concave impact f(v) = v^(1-eps).

v = v0 + eps * v1, where v0 is the linear-impact (GSS) profile and v1 solves
the linear system

    sum_j G_ij v1_j = sum_{j<=i} G_ij v0_j ln v0_j + (1 + ln v0_i) sum_{j>i} G_ij v0_j - lambda'

v1 is affine in lambda' (v1 = v1(0) + lambda' w with G w = -1), so lambda' is
fixed in closed form by requiring sum(v1) = 0.
"""

import logging
import time
from typing import Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .cost_engine import CostModel
from .errors import ParameterError
from .impact_models import PowerLaw
from .kernels import GridSpec, KernelMatrices, Strategy, gss_strategy, kernel_matrices
from .reports import SolverReport, make_report

logger = logging.getLogger(__name__)


def correction_rhs(kernels: KernelMatrices, v0: np.ndarray, lam: float = 0.0) -> np.ndarray:
    G = kernels.G
    n = len(v0)
    lower = np.tril(np.ones((n, n), dtype=bool))
    past = (np.where(lower, G, 0.0) @ (v0 * np.log(v0)))
    future = np.where(lower, 0.0, G) @ v0
    return past + (1.0 + np.log(v0)) * future - lam


def first_order_correction(kernels: KernelMatrices, v0: np.ndarray) -> Tuple[np.ndarray, float]:
    """(v1, lambda') with sum(v1) = 0."""
    if np.any(v0 <= 0):
        raise ParameterError("zeroth-order profile must be strictly positive")
    factor = cho_factor(kernels.G)
    base = cho_solve(factor, correction_rhs(kernels, v0))
    w = cho_solve(factor, -np.ones(len(v0)))
    lam = -base.sum() / w.sum()
    return base + lam * w, float(lam)


def perturbative_solve(gamma: float, eps: float, grid: GridSpec) -> SolverReport:
    t0 = time.time()
    kernels = kernel_matrices(gamma, grid)
    model = CostModel(PowerLaw(1.0 - eps), kernels)
    v0 = gss_strategy(gamma, grid)
    if eps == 0:
        return make_report("perturbative", model, v0, converged=True,
                           metadata={"eps": 0.0, "lambda_prime": 0.0}, t0=t0)
    v1, lam = first_order_correction(kernels, v0.rates)
    strategy = Strategy(v0.rates + eps * v1, grid)
    logger.debug("perturbative: eps=%g lambda'=%.6g volume=%.6g", eps, lam, strategy.volume)
    meta = {"eps": eps, "lambda_prime": lam, "v1": v1.tolist()}
    return make_report("perturbative", model, strategy, converged=strategy.is_feasible(), metadata=meta, t0=t0)
