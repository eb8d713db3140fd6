# execopt/toy_model.py
"""Two-interval (N=2, T=1) execution problem: cost as a function of v1 alone."""

import logging
from typing import List, Optional

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .impact_models import ImpactModel, PowerLaw
from .kernels import check_gamma

logger = logging.getLogger(__name__)

GRID_POINTS = 4001


def toy_cost(v1, gamma: float, delta: float, X: float, impact: Optional[ImpactModel] = None):
    """
    C(v1) = (1/2)^(2-g) / ((1-g)(2-g)) * [v1 f(v1) + v2 f(v2) + (2^(2-g) - 2) v2 f(v1)]
    with v2 = 2X - v1. `impact` defaults to PowerLaw(delta).
    """
    check_gamma(gamma)
    f = impact or PowerLaw(delta)
    v1 = np.asarray(v1, dtype=float)
    v2 = 2.0 * X - v1
    p = 2.0 - gamma
    pref = 0.5 ** p / ((1.0 - gamma) * (2.0 - gamma))
    f1 = f.value(v1)
    c = pref * (v1 * f1 + v2 * f.value(v2) + (2.0 ** p - 2.0) * v2 * f1)
    return float(c) if c.ndim == 0 else c


def _refine(gamma, delta, X, lo, hi) -> float:
    res = minimize_scalar(lambda x: toy_cost(x, gamma, delta, X), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12 * max(1.0, abs(X))})
    return float(res.x)


def _grid(X: float, n: int) -> np.ndarray:
    return np.linspace(-2.0 * X, 2.0 * X, n)


def toy_global_minimizer(gamma: float, delta: float, X: float, n: int = GRID_POINTS) -> float:
    """Global minimizer of toy_cost over v1 in [-2X, 2X]: dense grid, then bounded refinement."""
    x = _grid(X, n)
    k = int(np.argmin(toy_cost(x, gamma, delta, X)))
    best = _refine(gamma, delta, X, x[max(k - 1, 0)], x[min(k + 1, n - 1)])
    # bounded refinement never reports the endpoints themselves
    if toy_cost(x[k], gamma, delta, X) < toy_cost(best, gamma, delta, X):
        best = float(x[k])
    return best


def toy_local_minima(gamma: float, delta: float, X: float, n: int = GRID_POINTS) -> List[float]:
    """Interior local minima of toy_cost on (-2X, 2X), ascending in v1."""
    x = _grid(X, n)
    c = toy_cost(x, gamma, delta, X)
    idx = [k for k in range(1, n - 1) if c[k] < c[k - 1] and c[k] <= c[k + 1]]
    return [_refine(gamma, delta, X, x[k - 1], x[k + 1]) for k in idx]


def toy_transition_delta(gamma: float, X: float, lo: float = 0.5, hi: float = 0.7,
                         tol: float = 1e-3) -> float:
    """delta at which the global minimizer's v1 changes sign (bisection on delta)."""
    def side(d):
        return toy_global_minimizer(gamma, d, X)
    d = bisect(side, lo, hi, xtol=tol)
    logger.debug("toy transition gamma=%s X=%s -> delta*=%.4f", gamma, X, d)
    return float(d)
