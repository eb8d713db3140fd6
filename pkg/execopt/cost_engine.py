# execopt/cost_engine.py
"""
Discretized expected execution cost, its gradient and Hessian, and the
stationarity (Urysohn) residual.

    C(v) = sum_ij v_i f(v_j) A_ij + spread * dt * sum_i |v_i|

The reported cost always uses the exact |v|. Gradient and Hessian replace |v|
by sqrt(v^2 + abs_smoothing^2), and evaluate f', f'' on rates clamped away from
zero (grad_floor) when the impact derivative is singular there.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ImpactDomainError, ParameterError
from .impact_models import ImpactModel, gradient_safe_rates, impact_to_dict
from .kernels import GridSpec, KernelMatrices, Strategy, check_gamma

Rates = Union[Strategy, np.ndarray]


@dataclass(frozen=True, eq=False)
class CostModel:
    impact: ImpactModel
    kernels: KernelMatrices
    spread: float = 0.0
    abs_smoothing: Optional[float] = None
    grad_floor: Optional[float] = None

    def __post_init__(self):
        if self.spread < 0:
            raise ParameterError(f"spread must be >= 0, got {self.spread}")
        rate = abs(self.grid.rate) or 1.0
        if self.abs_smoothing is None:
            object.__setattr__(self, "abs_smoothing", 1e-8 * rate)
        if self.grad_floor is None:
            object.__setattr__(self, "grad_floor", 1e-10 * rate)

    @property
    def grid(self) -> GridSpec:
        return self.kernels.grid

    @property
    def gamma(self) -> float:
        return self.kernels.gamma

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "impact": impact_to_dict(self.impact),
            "spread": float(self.spread),
            "grid": self.grid.to_dict(),
        }


def rates_of(model: CostModel, s: Rates) -> np.ndarray:
    v = s.rates if isinstance(s, Strategy) else np.asarray(s, dtype=float)
    if v.shape != (model.grid.N,):
        raise ParameterError(f"expected {model.grid.N} rates, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ImpactDomainError("strategy contains non-finite rates")
    return v


def cost_components(model: CostModel, s: Rates) -> Tuple[float, float]:
    """(impact part, spread part) of the expected cost."""
    v = rates_of(model, s)
    impact = float(v @ model.kernels.A @ model.impact.value(v))
    spread = float(model.spread * model.grid.dt * np.abs(v).sum())
    return impact, spread


def expected_cost(model: CostModel, s: Rates) -> float:
    impact, spread = cost_components(model, s)
    return impact + spread


def smoothed_cost(model: CostModel, s: Rates) -> float:
    """Cost with |v| smoothed; the objective whose derivatives cost_gradient returns."""
    v = rates_of(model, s)
    eps = model.abs_smoothing
    return float(v @ model.kernels.A @ model.impact.value(v)
                 + model.spread * model.grid.dt * np.sqrt(v * v + eps * eps).sum())


def cost_gradient(model: CostModel, s: Rates) -> np.ndarray:
    v = rates_of(model, s)
    A = model.kernels.A
    vd = gradient_safe_rates(model.impact, v, model.grad_floor)
    g = A @ model.impact.value(v) + model.impact.deriv(vd) * (A.T @ v)
    if model.spread > 0:
        eps = model.abs_smoothing
        dabs = v / np.sqrt(v * v + eps * eps) if eps > 0 else np.sign(v)
        g = g + model.spread * model.grid.dt * dabs
    return g


def cost_hessian(model: CostModel, s: Rates) -> np.ndarray:
    v = rates_of(model, s)
    A = model.kernels.A
    vd = gradient_safe_rates(model.impact, v, model.grad_floor)
    fp = model.impact.deriv(vd)
    M = A * fp[None, :]
    diag = model.impact.second_deriv(vd) * (A.T @ v)
    if model.spread > 0 and model.abs_smoothing > 0:
        eps = model.abs_smoothing
        diag = diag + model.spread * model.grid.dt * eps * eps / (v * v + eps * eps) ** 1.5
    return M + M.T + np.diag(diag)


def build_F_matrix(impact: ImpactModel, s: Rates) -> np.ndarray:
    """F_ij = f(v_j) for j <= i, v_j f'(v_i) for j > i."""
    v = s.rates if isinstance(s, Strategy) else np.asarray(s, dtype=float)
    n = len(v)
    lower = np.tril(np.ones((n, n), dtype=bool))
    return np.where(lower, impact.value(v)[None, :], np.outer(impact.deriv(v), v))


def urysohn_residual(impact: ImpactModel, kernels: KernelMatrices, s: Rates,
                     lam: float) -> Tuple[float, np.ndarray]:
    """r_i = -lambda + sum_j G_ij F_ij(v); returns (sum r_i^2, r)."""
    F = build_F_matrix(impact, s)
    r = (kernels.G * F).sum(axis=1) - lam
    return float(r @ r), r


def best_residual_lambda(impact: ImpactModel, kernels: KernelMatrices, s: Rates) -> float:
    """lambda minimizing the squared residual of a fixed strategy (the row-sum mean)."""
    F = build_F_matrix(impact, s)
    return float((kernels.G * F).sum(axis=1).mean())


def spread_coefficient(r: float, gamma: float, impact: ImpactModel, X: float, T: float = 1.0) -> float:
    """Half-spread making the spread cost of a monotone program r times the VWAP impact cost."""
    if r < 0:
        raise ParameterError(f"spread ratio must be >= 0, got {r}")
    check_gamma(gamma)
    if r == 0:
        return 0.0
    return r * impact.value(X / T) * T ** (1.0 - gamma) / ((1.0 - gamma) * (2.0 - gamma))
