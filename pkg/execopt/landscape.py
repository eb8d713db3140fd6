# execopt/landscape.py
"""
Second-order characterization of the extrema found by multistart runs.

Classification projects the cost Hessian onto the tangent space of the volume
constraint (zero-sum vectors) and looks at eigenvalue signs. The bordered
Hessian leading-minor test is kept alongside for cross-checks at small N.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist, squareform
from scipy.stats import kurtosis, skew

from .cost_engine import CostModel, cost_hessian, expected_cost
from .errors import NotStationaryError, ParameterError
from .kernels import Strategy
from .numopt import projected_gradient_norm, stationarity_tolerance, tangent_basis
from .reports import SolverReport

logger = logging.getLogger(__name__)

MINIMUM, SADDLE, MAXIMUM, INDETERMINATE = "minimum", "saddle", "maximum", "indeterminate"
EIG_TOL = 1e-10
STATIONARY_TOL = 1e-6


@dataclass
class Extremum:
    label: str
    rates: List[float]
    cost: float
    classification: str
    log_spread: Optional[float] = None


@dataclass
class LandscapeReport:
    extrema: List[Extremum]
    spectra: List[List[float]]
    labels: List[str]
    distance_matrix: List[List[float]]
    stats: Dict[str, float] = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _eig_tol(H: np.ndarray, rel: float) -> float:
    return rel * float(np.linalg.norm(H, 2))


def projected_hessian(H: np.ndarray) -> np.ndarray:
    Z = tangent_basis(H.shape[0])
    return Z.T @ H @ Z


def classify_projected(H: np.ndarray, rel_tol: float = EIG_TOL) -> str:
    if H.shape[0] < 2:
        return INDETERMINATE
    eig = np.linalg.eigvalsh(projected_hessian(H))
    tol = _eig_tol(H, rel_tol)
    if np.any(np.abs(eig) <= tol):
        return INDETERMINATE
    if np.all(eig > 0):
        return MINIMUM
    if np.all(eig < 0):
        return MAXIMUM
    return SADDLE


def classify_bordered(H: np.ndarray, rel_tol: float = EIG_TOL) -> str:
    """Leading-minor sign test on [[0, -1^T], [-1, H]] (one linear constraint)."""
    n = H.shape[0]
    if n < 2:
        return INDETERMINATE
    B = np.zeros((n + 1, n + 1))
    B[0, 1:] = B[1:, 0] = -1.0
    B[1:, 1:] = H
    scale = float(np.linalg.norm(H, 2)) or 1.0
    signs = []
    for r in range(2, n + 1):
        det = np.linalg.det(B[:r + 1, :r + 1])
        if abs(det) <= rel_tol * scale ** (r - 1):
            return INDETERMINATE
        signs.append((r, det))
    if all(det < 0 for _, det in signs):
        return MINIMUM
    if all((-1) ** r * det > 0 for r, det in signs):
        return MAXIMUM
    return SADDLE


def _check_stationary(model: CostModel, v: np.ndarray, tol: float):
    pg = projected_gradient_norm(model, v)
    limit = stationarity_tolerance(model, tol)
    if not pg < limit:
        raise NotStationaryError(f"projected gradient {pg:.3e} exceeds {limit:.3e}")


def _rates(s) -> np.ndarray:
    if isinstance(s, Strategy):
        return s.rates
    if isinstance(s, SolverReport):
        return np.asarray(s.rates, dtype=float)
    return np.asarray(s, dtype=float)


def classify_stationary_point(model: CostModel, s, tol: float = STATIONARY_TOL,
                              rel_eig_tol: float = EIG_TOL) -> str:
    v = _rates(s)
    _check_stationary(model, v, tol)
    return classify_projected(cost_hessian(model, v), rel_eig_tol)


def spectrum(model: CostModel, s, tol: float = STATIONARY_TOL) -> Tuple[np.ndarray, float]:
    """Projected-Hessian eigenvalues (descending) and log10(max/min) over the positive ones."""
    v = _rates(s)
    _check_stationary(model, v, tol)
    eig = np.sort(np.linalg.eigvalsh(projected_hessian(cost_hessian(model, v))))[::-1]
    pos = eig[eig > 0]
    spread = float(np.log10(pos[0] / pos[-1])) if pos.size else float("nan")
    return eig, spread


def distance_matrix(strategies: Sequence[Union[Strategy, SolverReport]]) -> np.ndarray:
    """Euclidean distances between rate vectors, times dt (volume units)."""
    if not strategies:
        return np.zeros((0, 0))
    grids = [s.grid for s in strategies]
    if any(g.N != grids[0].N for g in grids):
        raise ParameterError("strategies must have equal lengths")
    R = np.vstack([_rates(s) for s in strategies])
    if len(R) == 1:
        return np.zeros((1, 1))
    return squareform(pdist(R, metric="euclidean")) * grids[0].dt


def summarize(extrema: Sequence[Extremum], distances: Optional[np.ndarray] = None) -> Dict[str, float]:
    costs = np.array([e.cost for e in extrema if e.classification == MINIMUM], dtype=float)
    n = len(extrema)
    out = {
        "extrema": n,
        "minima": int(costs.size),
        "saddles": sum(e.classification == SADDLE for e in extrema),
        "maxima": sum(e.classification == MAXIMUM for e in extrema),
        "indeterminate": sum(e.classification == INDETERMINATE for e in extrema),
        "fraction_minima": costs.size / n if n else float("nan"),
        "negative_cost_minima": int(np.sum(costs < 0)),
        "mean": float(costs.mean()) if costs.size else float("nan"),
        "std": float(costs.std()) if costs.size else float("nan"),
        "skewness": float(skew(costs)) if costs.size > 2 and costs.std() > 0 else float("nan"),
        "kurtosis": float(kurtosis(costs)) if costs.size > 3 and costs.std() > 0 else float("nan"),
    }
    if distances is not None:
        idx = [k for k, e in enumerate(extrema) if e.classification == MINIMUM]
        pairs = [distances[a, b] for x, a in enumerate(idx) for b in idx[x + 1:]]
        out["mean_minima_distance"] = float(np.mean(pairs)) if pairs else float("nan")
    return out


def analyze_landscape(model: CostModel, extrema: Sequence[Union[SolverReport, Strategy]],
                      references: Optional[Dict[str, Strategy]] = None,
                      tol: float = STATIONARY_TOL) -> LandscapeReport:
    items: List[Extremum] = []
    spectra: List[List[float]] = []
    strategies: List[Strategy] = []
    for k, e in enumerate(extrema):
        s = e.strategy if isinstance(e, SolverReport) else e
        try:
            eig, log_spread = spectrum(model, s, tol)
            cls = classify_projected(cost_hessian(model, s.rates))
        except NotStationaryError as err:
            logger.debug("extremum %d skipped: %s", k, err)
            eig, log_spread, cls = np.array([]), float("nan"), INDETERMINATE
        items.append(Extremum(f"extremum_{k}", [float(x) for x in s.rates], expected_cost(model, s), cls,
                              None if math.isnan(log_spread) else log_spread))
        spectra.append([float(x) for x in eig])
        strategies.append(s)

    labels = [it.label for it in items]
    for name, ref in (references or {}).items():
        labels.append(name)
        strategies.append(ref)
    D = distance_matrix(strategies)
    stats = summarize(items, D[:len(items), :len(items)] if len(items) else None)
    return LandscapeReport(items, spectra, labels, D.tolist(), stats)


def spectra_table(report: LandscapeReport) -> pd.DataFrame:
    rows = [{"extremum": e.label, "k": k, "eigenvalue": lam}
            for e, spec in zip(report.extrema, report.spectra) for k, lam in enumerate(spec)]
    return pd.DataFrame(rows, columns=["extremum", "k", "eigenvalue"])
