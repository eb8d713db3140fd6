# execopt/dham.py
"""
Discrete homotopy analysis of the stationarity equation

    sum_j G_ij F_ij(v) = lambda,   i = 1..N

with linear operator L = identity and auxiliary function H = 1. The order-n
solution is v^(n) = v^0 + v^1 + ... + v^n where

    v^1 = hbar * (-lambda + sum_j G_ij F_ij(v^0))
    v^m = v^(m-1) + hbar * sum_j G_ij F^(m-1)_ij        (m > 1)

and F^(m-1) is the (m-1)-th homotopy derivative of F (see series.py).
For every hbar, lambda is calibrated on the order-n sum so that the volume
constraint holds; hbar is then chosen by minimizing the squared residual.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from functools import partial
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.optimize import brentq, root_scalar

from .cost_engine import CostModel, best_residual_lambda, build_F_matrix, urysohn_residual
from .errors import CalibrationError, ExecoptError, ParameterError
from .impact_models import ImpactModel
from .kernels import KernelMatrices, Strategy
from .pool import parallel_map
from .reports import SolverReport, make_report
from .series import ImpactSeries

logger = logging.getLogger(__name__)

MAX_BRACKET_EXPANSIONS = 60


def default_hbar_grid(lo: float = -120.0, hi: float = 0.0, points: int = 121) -> List[float]:
    """`points` values from lo up to (excluding) hi."""
    step = (hi - lo) / points
    return [lo + k * step for k in range(points)]


@dataclass
class DhamConfig:
    impact: ImpactModel
    kernels: KernelMatrices
    init: Strategy
    order: int = 7
    hbar_grid: Sequence[float] = field(default_factory=default_hbar_grid)
    lambda_tolerance: float = 1e-3
    refine: bool = True
    refine_points: int = 21
    workers: Optional[int] = 1

    def __post_init__(self):
        if self.order < 1:
            raise ParameterError(f"order must be >= 1, got {self.order}")
        v0 = self.init.rates
        if not (np.all(v0 > 0) or np.all(v0 < 0)):
            raise ParameterError("initial guess must be strictly one-signed")
        if any(h >= 0 for h in self.hbar_grid):
            raise ParameterError("hbar values must be negative")
        if not self.lambda_tolerance > 0:
            raise ParameterError("lambda_tolerance must be > 0")


@dataclass
class DhamState:
    terms: List[np.ndarray]
    lam: float
    hbar: float
    diverged: bool = False

    @property
    def solution(self) -> np.ndarray:
        return np.sum(self.terms, axis=0)

    def partial_sum(self, m: int) -> np.ndarray:
        return np.sum(self.terms[:m + 1], axis=0)


@dataclass
class HbarPoint:
    hbar: float
    lam: float
    squared_residual: float
    note: str = ""


def dham_iterate(config: DhamConfig, lam: float, hbar: float) -> DhamState:
    G = config.kernels.G
    v0 = np.array(config.init.rates, dtype=float)
    terms = [v0]
    series = ImpactSeries(config.impact, terms)
    state = DhamState(terms, float(lam), float(hbar))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        terms.append(hbar * ((G * build_F_matrix(config.impact, v0)).sum(axis=1) - lam))
        for m in range(2, config.order + 1):
            if not np.all(np.isfinite(terms[-1])):
                break
            terms.append(terms[-1] + hbar * (G * series.F_matrix(m - 1)).sum(axis=1))
    if not all(np.all(np.isfinite(t)) for t in terms):
        state.diverged = True
    return state


def _volume_gap(config: DhamConfig, hbar: float, lam: float) -> float:
    """sum v^(n) - N X / T; nan when the series diverged."""
    state = dham_iterate(config, lam, hbar)
    if state.diverged:
        return float("nan")
    return float(state.solution.sum() - config.kernels.grid.target_rate_sum)


def calibrate_lambda(config: DhamConfig, hbar: float) -> float:
    grid = config.kernels.grid
    tol = config.lambda_tolerance * abs(grid.X) / grid.dt
    g = partial(_volume_gap, config, hbar)
    best = [math.inf, None]

    def tracked(lam):
        val = g(lam)
        if math.isfinite(val) and abs(val) < best[0]:
            best[0], best[1] = abs(val), lam
        return val

    lam0 = best_residual_lambda(config.impact, config.kernels, config.init)
    if abs(tracked(lam0)) <= tol:
        return lam0

    width = max(abs(lam0) * 0.05, 1e-12)
    try:
        sol = root_scalar(tracked, method="secant", x0=lam0, x1=lam0 + width, maxiter=50, rtol=1e-14)
        if sol.converged and math.isfinite(sol.root) and abs(g(sol.root)) <= tol:
            return float(sol.root)
    except (ArithmeticError, ValueError):
        pass

    # bisection fallback on an expanding bracket around lam0
    for _ in range(MAX_BRACKET_EXPANSIONS):
        a, b = lam0 - width, lam0 + width
        ga, gb = tracked(a), tracked(b)
        if math.isfinite(ga) and math.isfinite(gb) and ga * gb <= 0:
            try:
                lam = brentq(tracked, a, b, xtol=1e-15, rtol=1e-14, maxiter=200)
            except (RuntimeError, ValueError):
                break
            if abs(g(lam)) <= tol:
                return float(lam)
            break
        width *= 2.0
    raise CalibrationError(f"lambda calibration failed at hbar={hbar:g}", best_lambda=best[1])


def _evaluate_hbar(config: DhamConfig, hbar: float) -> HbarPoint:
    try:
        lam = calibrate_lambda(config, hbar)
    except CalibrationError as e:
        logger.debug("hbar=%g: %s (best lambda %s)", hbar, e, e.best_lambda)
        return HbarPoint(hbar, float("nan") if e.best_lambda is None else e.best_lambda, math.inf, "calibration")
    state = dham_iterate(config, lam, hbar)
    if state.diverged:
        return HbarPoint(hbar, lam, math.inf, "diverged")
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            err, _ = urysohn_residual(config.impact, config.kernels, state.solution, lam)
    except ExecoptError as e:
        return HbarPoint(hbar, lam, math.inf, f"residual: {e}")
    if not math.isfinite(err):
        return HbarPoint(hbar, lam, math.inf, "diverged")
    return HbarPoint(hbar, lam, err)


def _best(points: Sequence[HbarPoint]) -> Optional[HbarPoint]:
    finite = [p for p in points if math.isfinite(p.squared_residual)]
    if not finite:
        return None
    return min(finite, key=lambda p: (p.squared_residual, abs(p.hbar)))


def _refinement_grid(config: DhamConfig, center: float) -> List[float]:
    coarse = sorted(set(config.hbar_grid))
    gaps = np.diff(coarse)
    spacing = float(gaps.min()) if len(gaps) else max(abs(center) * 0.1, 1e-3)
    fine = np.linspace(center - spacing, center + spacing, config.refine_points)
    return [float(h) for h in fine if h < 0 and h not in coarse]


def dham_solve(config: DhamConfig) -> SolverReport:
    t0 = time.time()
    model = CostModel(config.impact, config.kernels)
    evaluate = partial(_evaluate_hbar, config)
    points = parallel_map(evaluate, list(config.hbar_grid), workers=config.workers)
    best = _best(points)
    refined: List[HbarPoint] = []
    if best is not None and config.refine:
        refined = parallel_map(evaluate, _refinement_grid(config, best.hbar), workers=config.workers)
        best = _best(points + refined)

    curve = sorted(points + refined, key=lambda p: p.hbar)
    meta = {
        "order": config.order,
        "residual_curve": [[p.hbar, p.squared_residual] for p in curve],
        "failures": sum(1 for p in curve if not math.isfinite(p.squared_residual)),
    }
    if best is None:
        logger.warning("dham: every hbar diverged or failed calibration (%d points)", len(curve))
        return make_report("dham", model, config.init, converged=False, metadata=meta, t0=t0)

    state = dham_iterate(config, best.lam, best.hbar)
    strategy = Strategy(state.solution, config.kernels.grid)
    init_lam = best_residual_lambda(config.impact, config.kernels, config.init)
    init_err, _ = urysohn_residual(config.impact, config.kernels, config.init, init_lam)
    meta.update({
        "hbar": best.hbar,
        "lambda": best.lam,
        "initial_squared_residual": init_err,
        "terms": [t.tolist() for t in state.terms],
    })
    logger.info("dham: order=%d hbar=%.3f lambda=%.6g E=%.3e", config.order, best.hbar, best.lam,
                best.squared_residual)
    return make_report("dham", model, strategy, converged=strategy.is_feasible(config.lambda_tolerance),
                       iterations=config.order, residual=best.squared_residual, metadata=meta, t0=t0)


def dham_residual_table(report: SolverReport) -> pd.DataFrame:
    curve = report.metadata.get("residual_curve", [])
    return pd.DataFrame(curve, columns=["hbar", "squared_residual"])


def dham_terms_table(report: SolverReport) -> pd.DataFrame:
    """Per-order partial sums v^(0..n), one column per order."""
    terms = np.asarray(report.metadata.get("terms", []), dtype=float)
    if terms.size == 0:
        return pd.DataFrame()
    sums = np.cumsum(terms, axis=0)
    df = pd.DataFrame({f"order_{m}": sums[m] for m in range(len(sums))})
    df.insert(0, "i", np.arange(1, sums.shape[1] + 1))
    return df
