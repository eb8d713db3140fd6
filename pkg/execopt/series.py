# execopt/series.py
"""
Truncated power-series arithmetic in the homotopy parameter p.

A homotopy series phi(p) = sum_k terms[k] p^k is stored as its list of
coefficient vectors. The m-th homotopy derivative of a function of phi is the
m-th Taylor coefficient of that function at p = 0, computed here with the
classical recurrences for powers, products and quotients. Coefficients are
produced lazily and memoized, so asking for order m after order m-1 costs a
single new recurrence step.
"""

from typing import List, Sequence

import numpy as np

from .errors import SingularityError, UnsupportedImpactError
from .impact_models import ConcaveConvex, ImpactModel, PerturbedPowerLaw, PowerLaw


class _Series:
    def __init__(self):
        self._cache: List[np.ndarray] = []

    def __getitem__(self, m: int) -> np.ndarray:
        while len(self._cache) <= m:
            self._cache.append(self._coef(len(self._cache)))
        return self._cache[m]

    def _coef(self, m: int) -> np.ndarray:
        raise NotImplementedError


class _Terms(_Series):
    """Coefficients read from a (growing) list of term vectors, times a sign."""

    def __init__(self, terms: Sequence[np.ndarray], sign: np.ndarray):
        super().__init__()
        self.terms = terms
        self.sign = sign

    def __getitem__(self, m: int) -> np.ndarray:
        # not memoized: the term list is owned by the caller
        if m >= len(self.terms):
            raise IndexError(f"homotopy term {m} not computed yet")
        return self.sign * self.terms[m]


class _Lin(_Series):
    """sum_k w_k s_k + shift (shift enters the constant coefficient only)."""

    def __init__(self, parts, shift: float = 0.0):
        super().__init__()
        self.parts = parts
        self.shift = shift

    def _coef(self, m):
        out = sum(w * s[m] for w, s in self.parts)
        return out + self.shift if m == 0 else out


class _Prod(_Series):
    def __init__(self, a: _Series, b: _Series):
        super().__init__()
        self.a, self.b = a, b

    def _coef(self, m):
        return sum(self.a[k] * self.b[m - k] for k in range(m + 1))


class _Quot(_Series):
    def __init__(self, a: _Series, b: _Series):
        super().__init__()
        self.a, self.b = a, b

    def _coef(self, m):
        acc = self.a[m] - sum(self.b[k] * self[m - k] for k in range(1, m + 1))
        return acc / self.b[0]


class _Pow(_Series):
    """h(p)^a for h[0] > 0."""

    def __init__(self, h: _Series, a: float):
        super().__init__()
        self.h, self.a = h, a

    def _coef(self, m):
        h0 = self.h[0]
        if m == 0:
            return h0 ** self.a
        acc = sum(((self.a + 1.0) * k - m) * self.h[k] * self[m - k] for k in range(1, m + 1))
        return acc / (m * h0)


class ImpactSeries:
    """
    Homotopy derivatives of f(phi) and f'(phi) for a growing list of terms.

    terms[0] must have no zero entry. Each entry may carry its own sign: the
    series is built on psi = sign(v0) * phi > 0 and f(phi) = sign * f(psi),
    f'(phi) = f'(psi).
    """

    def __init__(self, impact: ImpactModel, terms: List[np.ndarray]):
        v0 = np.asarray(terms[0], dtype=float)
        if np.any(v0 == 0) or not np.all(np.isfinite(v0)):
            raise SingularityError("homotopy derivatives need a zero-free initial guess")
        self.impact = impact
        self.terms = terms
        self.sign = np.sign(v0)
        psi = _Terms(terms, self.sign)
        self._f, self._fp = _impact_series(impact, psi)

    def f(self, m: int) -> np.ndarray:
        return self.sign * self._f[m]

    def fprime(self, m: int) -> np.ndarray:
        return self._fp[m]

    def F_matrix(self, m: int) -> np.ndarray:
        """
        m-th homotopy derivative of F_ij(phi) on the grid.
        j <= i: D_m f(phi_j); j > i: D_m [phi_j f'(phi_i)] (Cauchy product).
        """
        n = len(self.terms[0])
        lower = np.tril(np.ones((n, n), dtype=bool))
        upper = sum(np.outer(self.fprime(m - k), self.terms[k]) for k in range(m + 1))
        return np.where(lower, self.f(m)[None, :], upper)


def _impact_series(impact: ImpactModel, psi: _Series):
    if isinstance(impact, PowerLaw):
        dl = impact.delta
        return _Pow(psi, dl), _Lin([(dl, _Pow(psi, dl - 1.0))])
    if isinstance(impact, PerturbedPowerLaw):
        dl = impact.delta
        base = _Lin([(1.0, psi)], shift=impact.epsilon)
        return _Pow(base, dl), _Lin([(dl, _Pow(base, dl - 1.0))])
    if isinstance(impact, ConcaveConvex):
        c, dl, d, V = impact.c, impact.delta, impact.d, impact.V
        w = _Lin([(1.0, psi)], shift=V)
        f = _Lin([(c, _Pow(_Quot(psi, w), dl)), (c * d / V ** 2, _Prod(psi, w))])
        fp = _Lin([(c * dl * V, _Prod(_Pow(psi, dl - 1.0), _Pow(w, -dl - 1.0))),
                   (2.0 * c * d / V ** 2, psi)], shift=c * d / V)
        return f, fp
    raise UnsupportedImpactError(f"no homotopy series for {type(impact).__name__}")


def homotopy_derivative_F(terms: Sequence[np.ndarray], impact: ImpactModel, order: int) -> np.ndarray:
    """F^{order}: uses terms[0..order]; order 0 is F(v0) itself."""
    if order < 0:
        raise ValueError("order must be >= 0")
    if len(terms) <= order:
        raise IndexError(f"need {order + 1} terms, got {len(terms)}")
    return ImpactSeries(impact, [np.asarray(t, dtype=float) for t in terms]).F_matrix(order)
