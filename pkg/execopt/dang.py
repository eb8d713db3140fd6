# execopt/dang.py
"""
Fixed-point iteration for the discretized stationarity equation.

Each step linearizes F_ij around the current iterate in v_j and solves the
dense system K v_new = c, where

    K_ij = G_ij F'_ij(v),   F'_ij = f'(v_j) for j <= i, f'(v_i) for j > i
    c_i  = lambda - sum_{j<=i} G_ij (F_ij(v) - v_j F'_ij(v))

The iteration is declared converged when the mean rate stops moving (relative
standard deviation over a trailing window); a residual certificate is checked
on top of that. lambda is tuned in an outer loop to meet the volume target.
"""

import logging
import math
import time
import warnings
from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.optimize import brentq

from .cost_engine import CostModel, urysohn_residual
from .errors import ExecoptError, GuessError, MapError, ParameterError
from .impact_models import ImpactModel, PerturbedPowerLaw, PowerLaw
from .kernels import GridSpec, KernelMatrices, Strategy, kernel_matrices
from .numopt import sample_start_points
from .pool import parallel_map
from .reports import SolverReport, make_report

logger = logging.getLogger(__name__)

CERTIFICATE = 1e-8


@dataclass
class DangConfig:
    epsilon: float = 1e-6
    max_iterations: int = 500
    mean_field_window: int = 20
    rel_std_threshold: float = 1e-9
    lambda_tolerance: float = 1e-3
    max_outer: int = 50

    def __post_init__(self):
        if self.epsilon < 0:
            raise ParameterError("epsilon must be >= 0")
        for name in ("max_iterations", "mean_field_window", "rel_std_threshold",
                     "lambda_tolerance", "max_outer"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")


def dang_impact(delta: float, epsilon: float) -> ImpactModel:
    return PerturbedPowerLaw(delta, epsilon) if epsilon > 0 else PowerLaw(delta)


def dang_initial_guess(lam: float, kernels: KernelMatrices, impact: ImpactModel) -> Strategy:
    """Constant strategy v with v f'(v) sum_j G_1j = lambda."""
    grid = kernels.grid
    row = float(kernels.G[0].sum())
    if not lam > 0:
        raise GuessError(f"no positive root for lambda={lam}")

    def h(v):
        return v * impact.deriv(v) * row - lam

    lo, hi = 1e-300, max(abs(grid.rate), 1e-12)
    for _ in range(400):
        if h(hi) > 0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise GuessError(f"no bracket for the initial guess at lambda={lam}")
    v = brentq(h, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)
    return Strategy(np.full(grid.N, v), grid)


def guess_lambda(kernels: KernelMatrices, impact: ImpactModel) -> float:
    """lambda for which the constant initial guess is VWAP."""
    v = kernels.grid.rate
    return float(v * impact.deriv(v) * kernels.G[0].sum())


def dang_map(v: np.ndarray, lam: float, impact: ImpactModel, G: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = len(v)
    lower = np.tril(np.ones((n, n), dtype=bool))
    fp = impact.deriv(v)
    Fp = np.where(lower, fp[None, :], fp[:, None])
    taylor = np.where(lower, impact.value(v)[None, :] - v[None, :] * fp[None, :], 0.0)
    c = lam - (G * taylor).sum(axis=1)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                x = scipy.linalg.solve(G * Fp, c)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning, ValueError) as e:
        raise MapError(f"singular fixed-point system: {e}")
    # recent scipy returns inf/nan for an exactly singular K instead of raising
    if not np.all(np.isfinite(x)):
        raise MapError("singular fixed-point system: non-finite solution")
    return x


def _inner(v: np.ndarray, lam: float, impact: ImpactModel, G: np.ndarray,
           cfg: DangConfig) -> Tuple[np.ndarray, bool, int, List[float], str]:
    trace: List[float] = []
    W = cfg.mean_field_window
    for it in range(1, cfg.max_iterations + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                nxt = dang_map(v, lam, impact, G)
        except ExecoptError as e:
            return v, False, it, trace, str(e)
        if not np.all(np.isfinite(nxt)):
            return v, False, it, trace, "non-finite iterate"
        v = nxt
        trace.append(float(v.mean()))
        if len(trace) >= W:
            window = np.asarray(trace[-W:])
            m = abs(window.mean())
            if m > 0 and window.std() / m < cfg.rel_std_threshold:
                return v, True, it, trace, ""
    return v, False, cfg.max_iterations, trace, "max iterations"


def dang_solve(config: DangConfig, gamma: float, delta: float, grid: GridSpec,
               init: Optional[Strategy] = None, kernels: Optional[KernelMatrices] = None,
               lam0: Optional[float] = None) -> SolverReport:
    t0 = time.time()
    kernels = kernels or kernel_matrices(gamma, grid)
    impact = dang_impact(delta, config.epsilon)
    model = CostModel(impact, kernels)
    lam = lam0 if lam0 is not None else guess_lambda(kernels, impact)
    v = (init.rates if init is not None else dang_initial_guess(lam, kernels, impact).rates).copy()

    total, trace, lam_history = 0, [], []
    converged, note = False, "max outer iterations"
    for _ in range(config.max_outer):
        lam_history.append(lam)
        v, ok, its, tr, why = _inner(v, lam, impact, kernels.G, config)
        total += its
        trace.extend(tr)
        if not ok:
            converged, note = False, why
            break
        volume = v.sum() * grid.dt
        if abs(volume - grid.X) <= config.lambda_tolerance * abs(grid.X):
            converged, note = True, ""
            break
        if volume * grid.X <= 0:
            converged, note = False, "volume changed sign"
            break
        # F(a v) = a^delta F(v) for power laws: rescale the fixed point and lambda together
        ratio = grid.X / volume
        lam *= ratio ** delta
        v = v * ratio

    err = math.inf
    if np.all(np.isfinite(v)):
        try:
            err, _ = urysohn_residual(impact, kernels, v, lam)
        except ExecoptError:
            pass
    certified = err <= CERTIFICATE * lam * lam * grid.N
    if converged and not certified:
        note = "residual certificate failed"
    ok = converged and certified
    strategy = Strategy(v if np.all(np.isfinite(v)) else np.full(grid.N, grid.rate), grid)
    meta = {
        "lambda": lam,
        "lambda_history": lam_history,
        "mean_field": trace,
        "mean_field_converged": converged,
        "certified": bool(certified),
        "epsilon": config.epsilon,
        "note": note,
    }
    logger.debug("dang: N=%d delta=%.3f converged=%s iterations=%d %s", grid.N, delta, ok, total, note)
    return make_report("dang", model, strategy, converged=ok, iterations=total,
                       residual=err if math.isfinite(err) else None, metadata=meta, t0=t0)


def _scan_cell(gamma: float, base: DangConfig, T: float, X: float, random_starts: int,
               seed: int, cell: Tuple[int, float]) -> dict:
    N, delta = cell
    grid = GridSpec(N, T, X)
    kernels = kernel_matrices(gamma, grid)
    rep = dang_solve(base, gamma, delta, grid, kernels=kernels)
    random_ok = 0
    for s in sample_start_points(random_starts, grid, seed) if random_starts else []:
        if dang_solve(base, gamma, delta, grid, init=s, kernels=kernels).converged:
            random_ok += 1
    return {
        "N": N,
        "delta": delta,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "squared_residual": rep.residual if rep.residual is not None else float("nan"),
        "random_converged": random_ok,
    }


def convergence_scan(N_list: Sequence[int], delta_list: Sequence[float], gamma: float,
                     base_config: Optional[DangConfig] = None, T: float = 1.0, X: float = 0.1,
                     random_starts: int = 0, seed: int = 0, workers: Optional[int] = 1,
                     progress=None) -> pd.DataFrame:
    """Region map: one row per (N, delta) cell."""
    if not N_list or not delta_list:
        raise ParameterError("N_list and delta_list must be non-empty")
    base = base_config or DangConfig()
    cells = [(int(N), float(d)) for N in N_list for d in delta_list]
    fn = partial(_scan_cell, gamma, base, T, X, random_starts, seed)
    rows = parallel_map(fn, cells, workers=workers, progress=progress)
    return pd.DataFrame(rows, columns=["N", "delta", "converged", "iterations",
                                       "squared_residual", "random_converged"])


def smallest_converging_delta(region: pd.DataFrame, N: int) -> float:
    """Smallest delta such that every delta above it (same N) converged; nan if none."""
    row = region[region["N"] == N].sort_values("delta", ascending=False)
    d_min = float("nan")
    for delta, ok in zip(row["delta"], row["converged"]):
        if not ok:
            break
        d_min = float(delta)
    return d_min
