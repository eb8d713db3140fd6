# execopt/kernels.py
"""
Time grid, decay-kernel matrices and the closed-form reference strategies.

The kernel G(tau) = tau^-gamma is integrated exactly over every pair of
subintervals of [0, T], giving a symmetric Toeplitz matrix G. The cost matrix A
keeps the strictly lower triangle of G and half of its diagonal, so A + A^T = G.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.linalg import cho_factor, cho_solve, toeplitz
from scipy.special import gamma as gamma_fn

from .errors import ParameterError, UnsupportedImpactError
from .impact_models import ConcaveConvex, ImpactModel, PowerLaw

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    N: int
    T: float = 1.0
    X: float = 0.1

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be an integer >= 1, got {self.N}")
        if not self.T > 0:
            raise ParameterError(f"T must be > 0, got {self.T}")
        if not math.isfinite(self.X):
            raise ParameterError("X must be finite")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def rate(self) -> float:
        """VWAP rate X/T; the natural unit for trading rates on this grid."""
        return self.X / self.T

    @property
    def target_rate_sum(self) -> float:
        return self.N * self.X / self.T

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.dt

    def to_dict(self):
        return {"N": int(self.N), "T": float(self.T), "X": float(self.X)}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Strategy:
    rates: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        r = _frozen(self.rates)
        if r.shape != (self.grid.N,):
            raise ParameterError(f"expected {self.grid.N} rates, got shape {r.shape}")
        object.__setattr__(self, "rates", r)

    @property
    def volume(self) -> float:
        return float(self.rates.sum() * self.grid.dt)

    def constraint_violation(self) -> float:
        return abs(self.volume - self.grid.X)

    def is_feasible(self, rtol: float = 1e-3) -> bool:
        return self.constraint_violation() <= rtol * abs(self.grid.X)

    def to_frame(self) -> pd.DataFrame:
        dt = self.grid.dt
        return pd.DataFrame({
            "i": np.arange(1, self.grid.N + 1),
            "t_mid": self.grid.midpoints(),
            "v_i": self.rates,
            "volume_i": self.rates * dt,
        })


@dataclass(frozen=True, eq=False)
class KernelMatrices:
    gamma: float
    grid: GridSpec
    G: np.ndarray
    A: np.ndarray


def check_gamma(gamma: float):
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"kernel exponent gamma must lie in (0, 1), got {gamma}")


def kernel_scale(gamma: float, dt: float) -> float:
    return dt ** (2.0 - gamma) / ((1.0 - gamma) * (2.0 - gamma))


def build_kernel_matrix(gamma: float, grid: GridSpec) -> np.ndarray:
    check_gamma(gamma)
    p = 2.0 - gamma
    k = np.arange(grid.N, dtype=float)
    col = (k + 1.0) ** p - 2.0 * k ** p + np.abs(k - 1.0) ** p
    return toeplitz(kernel_scale(gamma, grid.dt) * col)


def build_cost_matrix(G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ParameterError(f"G must be square, got shape {G.shape}")
    return np.tril(G, -1) + np.diag(np.diag(G) / 2.0)


def kernel_matrices(gamma: float, grid: GridSpec) -> KernelMatrices:
    G = build_kernel_matrix(gamma, grid)
    return KernelMatrices(gamma=float(gamma), grid=grid, G=_frozen(G), A=_frozen(build_cost_matrix(G)))


def vwap_strategy(grid: GridSpec) -> Strategy:
    return Strategy(np.full(grid.N, grid.rate), grid)


def gss_constant(gamma: float, X: float, T: float) -> float:
    """c such that the continuous profile c/[t(T-t)]^((1-gamma)/2) trades X over [0, T]."""
    check_gamma(gamma)
    a = (1.0 + gamma) / 2.0
    return X * gamma_fn(1.0 + gamma) / (T ** gamma * gamma_fn(a) ** 2)


def gss_strategy(gamma: float, grid: GridSpec) -> Strategy:
    t = grid.midpoints()
    v = gss_constant(gamma, grid.X, grid.T) / (t * (grid.T - t)) ** ((1.0 - gamma) / 2.0)
    v *= grid.X / (v.sum() * grid.dt)
    return Strategy(v, grid)


def vwap_cost_closed_form(gamma: float, impact: ImpactModel, grid: GridSpec) -> float:
    """Expected cost of constant-rate execution: X f(X/T) T^(1-gamma) / ((1-gamma)(2-gamma))."""
    check_gamma(gamma)
    if not isinstance(impact, (PowerLaw, ConcaveConvex)):
        raise UnsupportedImpactError(f"no VWAP closed form for {type(impact).__name__}")
    return grid.X * impact.value(grid.rate) * grid.T ** (1.0 - gamma) / ((1.0 - gamma) * (2.0 - gamma))


def linear_multiplier(kernels: KernelMatrices) -> float:
    """lambda of G v = lambda 1 with sum(v) dt = X."""
    grid = kernels.grid
    w = cho_solve(cho_factor(kernels.G), np.ones(grid.N))
    return grid.X / (w.sum() * grid.dt)


def linear_optimum(kernels: KernelMatrices) -> Strategy:
    """Minimizer of the linear-impact cost 1/2 v^T G v on the volume hyperplane."""
    grid = kernels.grid
    w = cho_solve(cho_factor(kernels.G), np.ones(grid.N))
    return Strategy(w * linear_multiplier(kernels), grid)
