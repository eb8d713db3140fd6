# execopt/impact_models.py
"""
Instantaneous market-impact functions f(v) and their derivatives.

Three variants:
  PowerLaw(delta)                    f(v) = sign(v) |v|^delta
  PerturbedPowerLaw(delta, epsilon)  f(v) = sign(v) (epsilon + |v|)^delta
  ConcaveConvex(c, delta, d, V)      f(v) = c sign(v) {(|v|/(|v|+V))^delta + d |v|(|v|+V)/V^2}

Every function is evaluated on |v| and the sign is applied afterwards, so
f(-v) == -f(v) holds bit for bit. Inputs may be scalars or numpy arrays; the
return type follows the input.
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Union

import numpy as np
from scipy.optimize import bisect

from .errors import (ImpactDomainError, InflectionSearchError, NoInflectionError,
                     ParameterError, SingularityError)

DEFAULT_EPSILON = 1e-6


def _as_rates(v):
    a = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ImpactDomainError("trading rate must be finite")
    return a


def _out(v, a):
    return float(a) if np.ndim(v) == 0 else a


@dataclass(frozen=True)
class PowerLaw:
    delta: float

    kind = "power_law"

    def __post_init__(self):
        if not self.delta > 0:
            raise ParameterError(f"power-law exponent must be > 0, got {self.delta}")

    @property
    def singular_at_zero(self) -> bool:
        return self.delta < 1

    def value(self, v):
        a = _as_rates(v)
        return _out(v, np.sign(a) * np.abs(a) ** self.delta)

    def deriv(self, v):
        a = _as_rates(v)
        if self.delta == 1:
            return _out(v, np.ones_like(a))
        m = np.abs(a)
        if self.delta < 1 and np.any(m == 0):
            raise SingularityError(
                f"f'(0) diverges for power law with delta={self.delta}; "
                "use PerturbedPowerLaw or clamp the rate")
        return _out(v, self.delta * m ** (self.delta - 1))

    def second_deriv(self, v):
        a = _as_rates(v)
        if self.delta == 1:
            return _out(v, np.zeros_like(a))
        m = np.abs(a)
        if self.delta < 2 and np.any(m == 0):
            raise SingularityError(f"f''(0) diverges for power law with delta={self.delta}")
        return _out(v, np.sign(a) * self.delta * (self.delta - 1) * m ** (self.delta - 2))


@dataclass(frozen=True)
class PerturbedPowerLaw:
    delta: float
    epsilon: float = DEFAULT_EPSILON

    kind = "perturbed_power_law"

    def __post_init__(self):
        if not self.delta > 0:
            raise ParameterError(f"power-law exponent must be > 0, got {self.delta}")
        if self.epsilon < 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")

    @property
    def singular_at_zero(self) -> bool:
        return self.epsilon == 0 and self.delta < 1

    def value(self, v):
        a = _as_rates(v)
        return _out(v, np.sign(a) * (self.epsilon + np.abs(a)) ** self.delta)

    def deriv(self, v):
        a = _as_rates(v)
        m = self.epsilon + np.abs(a)
        if self.singular_at_zero and np.any(m == 0):
            raise SingularityError("f'(0) diverges with epsilon=0 and delta<1")
        return _out(v, self.delta * m ** (self.delta - 1))

    def second_deriv(self, v):
        a = _as_rates(v)
        if self.delta == 1:
            return _out(v, np.zeros_like(a))
        m = self.epsilon + np.abs(a)
        if self.epsilon == 0 and self.delta < 2 and self.delta != 1 and np.any(m == 0):
            raise SingularityError("f''(0) diverges with epsilon=0")
        return _out(v, np.sign(a) * self.delta * (self.delta - 1) * m ** (self.delta - 2))


@dataclass(frozen=True)
class ConcaveConvex:
    c: float
    delta: float
    d: float
    V: float

    kind = "concave_convex"

    def __post_init__(self):
        if not self.c > 0:
            raise ParameterError(f"scale c must be > 0, got {self.c}")
        if not self.V > 0:
            raise ParameterError(f"market rate V must be > 0, got {self.V}")
        if self.d < 0:
            raise ParameterError(f"convex weight d must be >= 0, got {self.d}")
        if not self.delta > 0:
            raise ParameterError(f"exponent must be > 0, got {self.delta}")

    @property
    def singular_at_zero(self) -> bool:
        return self.delta < 1

    def value(self, v):
        a = _as_rates(v)
        m = np.abs(a)
        V = self.V
        body = (m / (m + V)) ** self.delta + self.d * m * (m + V) / V ** 2
        return _out(v, np.sign(a) * self.c * body)

    def deriv(self, v):
        a = _as_rates(v)
        m = np.abs(a)
        if self.delta < 1 and np.any(m == 0):
            raise SingularityError(f"f'(0) diverges for concave-convex impact with delta={self.delta}")
        V, dl = self.V, self.delta
        concave = dl * V * m ** (dl - 1) * (m + V) ** (-dl - 1)
        convex = self.d * (2 * m + V) / V ** 2
        return _out(v, self.c * (concave + convex))

    def second_deriv(self, v):
        a = _as_rates(v)
        m = np.abs(a)
        if self.delta < 2 and self.delta != 1 and np.any(m == 0):
            raise SingularityError("f''(0) diverges for concave-convex impact")
        V, dl = self.V, self.delta
        # d/dm [dl V m^(dl-1) (m+V)^(-dl-1)] = dl V m^(dl-2) (m+V)^(-dl-2) ((dl-1)V - 2m)
        if dl == 1:
            # m^-1 cancels against the -2m factor; finite at m=0
            concave = -2 * V * (m + V) ** -3
        else:
            concave = dl * V * m ** (dl - 2) * (m + V) ** (-dl - 2) * ((dl - 1) * V - 2 * m)
        return _out(v, np.sign(a) * self.c * (concave + 2 * self.d / V ** 2))


ImpactModel = Union[PowerLaw, PerturbedPowerLaw, ConcaveConvex]

_KINDS = {cls.kind: cls for cls in (PowerLaw, PerturbedPowerLaw, ConcaveConvex)}


def eval_impact(model: ImpactModel, v):
    return model.value(v)


def deriv(model: ImpactModel, v):
    return model.deriv(v)


def second_deriv(model: ImpactModel, v):
    return model.second_deriv(v)


def inflection_rate(model: ConcaveConvex, tol: float = 1e-8) -> float:
    """Positive rate v* where f'' changes sign (concave below, convex above)."""
    if not isinstance(model, ConcaveConvex):
        raise NoInflectionError(f"{model.kind} impact has no concave/convex inflection")
    if model.d <= 0:
        raise NoInflectionError("d=0: pure concave impact has no inflection")

    h = lambda m: model.second_deriv(m)
    lo = 1e-9 * model.V
    if h(lo) >= 0:
        raise InflectionSearchError(f"f'' is not negative near zero (lo={lo:g})")
    hi = 1e-6 * model.V
    cap = 100.0 * model.V
    while h(hi) <= 0:
        lo = hi
        hi *= 2.0
        if hi > cap:
            raise InflectionSearchError(f"no sign change of f'' in (0, {cap:g})")
    return float(bisect(h, lo, hi, xtol=tol, maxiter=500))


def impact_to_dict(model: ImpactModel) -> Dict[str, Any]:
    return {"kind": model.kind, **asdict(model)}


def impact_from_dict(d: Dict[str, Any]) -> ImpactModel:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise ParameterError(f"unknown impact kind: {kind!r}")
    return _KINDS[kind](**d)


def gradient_safe_rates(model: ImpactModel, v: np.ndarray, floor: float) -> np.ndarray:
    """Rates with |v| clamped at `floor` where the model's derivative is singular at 0."""
    if not model.singular_at_zero or floor <= 0:
        return v
    m = np.maximum(np.abs(v), floor)
    return np.where(v < 0, -m, m)


NO_ARBITRAGE_GAMMA = 2.0 - math.log(3.0) / math.log(2.0)
