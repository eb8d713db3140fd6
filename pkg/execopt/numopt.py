# execopt/numopt.py
"""
Direct minimization of the discretized cost on the volume hyperplane.

local_minimize eliminates the equality constraint with an orthonormal basis Z
of the zero-sum subspace (v = v0 + Z y) and runs BFGS on y, finishing with
projected Newton steps when BFGS stops short of the stationarity tolerance.
monotone_minimize_gss is a derivative-free pattern search over pairwise
exchange directions e_i - e_j, which keep both the volume and v >= 0.
"""

import copy
import logging
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache, partial
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, cho_solve, null_space
from scipy.optimize import minimize

from .cost_engine import CostModel, cost_gradient, cost_hessian, expected_cost, smoothed_cost
from .errors import ExecoptError, ParameterError
from .kernels import GridSpec, Strategy, kernel_matrices, vwap_strategy
from .pool import parallel_map
from .reports import SolverReport, make_report

logger = logging.getLogger(__name__)


@dataclass
class OptimizerOptions:
    max_iterations: int = 5000
    gradient_tolerance: float = 1e-9
    step_tolerance: float = 1e-6
    seed: int = 0
    starts: int = 100
    monotone: bool = False
    bounds: bool = False
    dedup_tolerance: float = 1e-6
    max_moves: int = 200_000
    newton_steps: int = 30
    workers: Optional[int] = 1

    def __post_init__(self):
        if self.starts < 1:
            raise ParameterError(f"starts must be >= 1, got {self.starts}")
        for name in ("gradient_tolerance", "step_tolerance", "dedup_tolerance"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")


@dataclass
class MultistartResult:
    best: SolverReport
    reports: List[SolverReport]
    extrema: List[SolverReport] = field(default_factory=list)

    def __iter__(self) -> Iterator:
        yield self.best
        yield self.reports


# ----------------------------
# helpers
# ----------------------------
@lru_cache(maxsize=16)
def tangent_basis(N: int) -> np.ndarray:
    """Orthonormal basis (N x N-1) of zero-sum vectors."""
    Z = null_space(np.ones((1, N)))
    Z.setflags(write=False)
    return Z


def cost_scale(model: CostModel) -> Tuple[float, float]:
    """(cost unit, rate unit): |VWAP cost| and |X/T|."""
    rate = abs(model.grid.rate) or 1.0
    c = abs(expected_cost(model, vwap_strategy(model.grid)))
    return (c if c > 0 else 1.0), rate


def projected_gradient_norm(model: CostModel, v) -> float:
    return float(np.linalg.norm(tangent_basis(model.grid.N).T @ cost_gradient(model, v)))


def stationarity_tolerance(model: CostModel, rel: float) -> float:
    c0, r0 = cost_scale(model)
    return rel * c0 / r0


def _on_hyperplane(v: np.ndarray, grid: GridSpec) -> np.ndarray:
    return v + (grid.target_rate_sum - v.sum()) / grid.N


def sample_start_points(count: int, grid: GridSpec, seed: int) -> List[Strategy]:
    """Uniform-on-simplex starts (Dirichlet(1, ..., 1)) scaled to sum(v) = N X / T."""
    if count < 0:
        raise ParameterError(f"count must be >= 0, got {count}")
    rng = np.random.default_rng(seed)
    W = rng.dirichlet(np.ones(grid.N), size=count) if grid.N > 1 else np.ones((count, 1))
    return [Strategy(w * grid.target_rate_sum, grid) for w in W]


# ----------------------------
# smooth local minimizer
# ----------------------------
def _newton_polish(model: CostModel, v: np.ndarray, tol: float, steps: int) -> Tuple[np.ndarray, int]:
    Z = tangent_basis(model.grid.N)
    c0, _ = cost_scale(model)
    done = 0
    for _ in range(steps):
        g = Z.T @ cost_gradient(model, v)
        pg = np.linalg.norm(g)
        if pg < tol:
            break
        try:
            step = -cho_solve(cho_factor(Z.T @ cost_hessian(model, v) @ Z), g)
        except LinAlgError:
            break
        c = smoothed_cost(model, v)
        t, moved = 1.0, False
        for _ in range(30):
            cand = v + t * (Z @ step)
            cc = smoothed_cost(model, cand)
            # near the optimum cost differences sink below roundoff; accept on gradient decrease
            if cc <= c - 1e-4 * t * abs(g @ step) or (
                    cc <= c + 1e-14 * c0 and np.linalg.norm(Z.T @ cost_gradient(model, cand)) < pg):
                v, moved = cand, True
                break
            t *= 0.5
        if not moved:
            break
        done += 1
    return v, done


def _local_bfgs(model: CostModel, v0: np.ndarray, opts: OptimizerOptions, tol: float):
    grid = model.grid
    Z = tangent_basis(grid.N)
    c0, r0 = cost_scale(model)

    def fun(y):
        return smoothed_cost(model, v0 + r0 * (Z @ y)) / c0

    def jac(y):
        return r0 * (Z.T @ cost_gradient(model, v0 + r0 * (Z @ y))) / c0

    gtol = opts.gradient_tolerance / math.sqrt(grid.N - 1)
    with np.errstate(over="ignore", invalid="ignore"):
        res = minimize(fun, np.zeros(grid.N - 1), jac=jac, method="BFGS",
                       options={"gtol": gtol, "maxiter": opts.max_iterations})
    v = _on_hyperplane(v0 + r0 * (Z @ res.x), grid)
    v, polished = _newton_polish(model, v, tol, opts.newton_steps)
    return v, int(res.nit) + polished, str(res.message)


def _local_slsqp(model: CostModel, v0: np.ndarray, opts: OptimizerOptions):
    grid = model.grid
    c0, r0 = cost_scale(model)
    n_target = grid.target_rate_sum / r0
    res = minimize(
        lambda u: smoothed_cost(model, r0 * u) / c0,
        v0 / r0,
        jac=lambda u: r0 * cost_gradient(model, r0 * u) / c0,
        method="SLSQP",
        bounds=[(0.0, None)] * grid.N,
        constraints=[{"type": "eq", "fun": lambda u: u.sum() - n_target,
                      "jac": lambda u: np.ones_like(u)}],
        options={"maxiter": opts.max_iterations, "ftol": 1e-14},
    )
    v = np.maximum(r0 * res.x, 0.0)
    v *= grid.target_rate_sum / v.sum()
    return v, int(res.nit), bool(res.success), str(res.message)


def _bounded_stationarity(model: CostModel, v: np.ndarray) -> float:
    """Projected gradient norm over the strictly positive coordinates."""
    free = v > 1e-12 * abs(model.grid.rate)
    g = cost_gradient(model, v)[free]
    return float(np.linalg.norm(g - g.mean())) if g.size else 0.0


def local_minimize(model: CostModel, start: Strategy, opts: Optional[OptimizerOptions] = None) -> SolverReport:
    t0 = time.time()
    opts = opts or OptimizerOptions()
    grid = model.grid
    v0 = np.array(start.rates, dtype=float)
    c_start = expected_cost(model, v0)
    tol = stationarity_tolerance(model, opts.gradient_tolerance)

    if grid.N == 1:
        return make_report("local", model, start, converged=True,
                           metadata={"stationarity": 0.0, "start_cost": c_start}, t0=t0, seed=opts.seed)

    if opts.bounds:
        v, its, success, msg = _local_slsqp(model, v0, opts)
        pg = _bounded_stationarity(model, v)
        converged = success
    else:
        v, its, msg = _local_bfgs(model, v0, opts, tol)
        pg = projected_gradient_norm(model, v)
        converged = pg < tol

    if not np.all(np.isfinite(v)) or expected_cost(model, v) > c_start:
        # keep the descent guarantee: never return something worse than the start
        logger.debug("local_minimize: no descent from start (%s)", msg)
        v, converged = v0, False
        pg = projected_gradient_norm(model, v0)

    meta = {"stationarity": pg, "tolerance": tol, "start_cost": c_start, "message": msg,
            "method": "slsqp" if opts.bounds else "bfgs"}
    return make_report("local", model, Strategy(v, grid), converged=converged, iterations=its,
                       metadata=meta, t0=t0, seed=opts.seed)


# ----------------------------
# monotone pattern search
# ----------------------------
def monotone_minimize_gss(model: CostModel, start: Strategy, opts: Optional[OptimizerOptions] = None) -> SolverReport:
    t0 = time.time()
    opts = opts or OptimizerOptions(monotone=True)
    grid = model.grid
    v = np.array(start.rates, dtype=float)
    if np.any(v < 0):
        raise ParameterError("monotone search needs a start with v_i >= 0")
    n = grid.N
    A = model.kernels.A
    dA = np.diag(A)
    f = model.impact.value
    c0, r0 = cost_scale(model)
    c_start = expected_cost(model, v)
    if n == 1:
        return make_report("monotone", model, start, converged=True, metadata={"start_cost": c_start},
                           t0=t0, seed=opts.seed)

    fv = f(v)
    u, w = A @ fv, A.T @ v
    step = float(v.max())
    stop = opts.step_tolerance * r0
    thresh = -1e-14 * c0
    off = ~np.eye(n, dtype=bool)
    pos, moves, halvings = 0, 0, 0
    # spread term is constant on the simplex: exchanges keep sum |v| = sum v

    while step >= stop and moves < opts.max_moves:
        d = np.minimum(step, v)
        dfi = f(v[:, None] + d[None, :]) - fv[:, None]
        dfj = f(v - d) - fv
        dC = (d[None, :] * (u[:, None] - u[None, :]) + w[:, None] * dfi + (w * dfj)[None, :]
              + d[None, :] * (dA[:, None] * dfi + A * dfj[None, :] - A.T * dfi - (dA * dfj)[None, :]))
        flat = np.flatnonzero((off & (d > 0)[None, :] & (dC < thresh)).ravel())
        if flat.size == 0:
            step /= 2.0
            halvings += 1
            fv = f(v)
            u, w = A @ fv, A.T @ v
            continue
        later = flat[flat >= pos]
        k = int(later[0] if later.size else flat[0])
        i, j = divmod(k, n)
        dj = d[j]
        vi, vj = v[i] + dj, v[j] - dj
        fi, fj = f(vi), f(vj)
        dfi_k, dfj_k = fi - fv[i], fj - fv[j]
        v[i], v[j] = vi, vj
        fv[i], fv[j] = fi, fj
        u += A[:, i] * dfi_k + A[:, j] * dfj_k
        w += dj * (A[i, :] - A[j, :])
        pos = k + 1
        moves += 1

    v = np.maximum(v, 0.0)
    v *= grid.target_rate_sum / v.sum()
    converged = step < stop
    if expected_cost(model, v) > c_start:
        v, converged = np.array(start.rates, dtype=float), False
    meta = {"start_cost": c_start, "final_step": step, "halvings": halvings, "moves": moves,
            "sparsity": sparsity(Strategy(v, grid))}
    return make_report("monotone", model, Strategy(v, grid), converged=converged, iterations=moves,
                       metadata=meta, t0=t0, seed=opts.seed)


# ----------------------------
# multistart
# ----------------------------
def _run_start(model: CostModel, opts: OptimizerOptions, item: Tuple[int, np.ndarray]) -> SolverReport:
    start_id, rates = item
    start = Strategy(rates, model.grid)
    try:
        rep = (monotone_minimize_gss if opts.monotone else local_minimize)(model, start, opts)
    except (ExecoptError, LinAlgError, ValueError) as e:
        logger.debug("start %d failed: %s", start_id, e)
        rep = make_report("monotone" if opts.monotone else "local", model, start, converged=False,
                          metadata={"error": str(e)}, seed=opts.seed)
    rep.metadata["start_id"] = start_id
    return rep


def _order_key(rep: SolverReport):
    return (rep.cost, tuple(rep.rates))


def deduplicate(reports: Sequence[SolverReport], tol: float) -> List[SolverReport]:
    """Converged end points, merged when closer than tol * norm; sorted by cost then rates."""
    kept: List[SolverReport] = []
    arrays: List[np.ndarray] = []
    for rep in sorted((r for r in reports if r.converged), key=_order_key):
        v = np.asarray(rep.rates)
        if any(np.linalg.norm(v - a) < tol * max(np.linalg.norm(v), np.linalg.norm(a)) for a in arrays):
            continue
        kept.append(rep)
        arrays.append(v)
    return kept


def certify_cost(model: CostModel, rates) -> float:
    """Cost re-evaluated on freshly built kernel matrices."""
    fresh = CostModel(model.impact, kernel_matrices(model.gamma, model.grid), spread=model.spread)
    return expected_cost(fresh, np.asarray(rates, dtype=float))


def multistart_minimize(model: CostModel, opts: Optional[OptimizerOptions] = None,
                        progress: Optional[Callable[[int, int], None]] = None) -> MultistartResult:
    opts = opts or OptimizerOptions()
    starts = sample_start_points(opts.starts, model.grid, opts.seed)
    items = [(k, s.rates) for k, s in enumerate(starts)]
    reports = parallel_map(partial(_run_start, model, opts), items, workers=opts.workers,
                           progress=progress)
    extrema = deduplicate(reports, opts.dedup_tolerance)
    if extrema:
        best = extrema[0]
    else:
        # failed starts never count as minima; report the cheapest end point as not converged
        logger.warning("multistart: none of %d starts converged", len(reports))
        finite = [r for r in reports if math.isfinite(r.cost)] or list(reports)
        best = copy.deepcopy(min(finite, key=_order_key))
        best.converged = False
        best.metadata["no_converged_start"] = True

    certified = certify_cost(model, best.rates)
    if abs(certified - best.cost) > 1e-9 * max(abs(certified), 1e-300):
        logger.warning("multistart: certified cost %.6g differs from %.6g", certified, best.cost)
    best.cost = certified
    best.metadata["certified"] = True
    best.metadata["distinct_extrema"] = len(extrema)
    best.metadata["converged_starts"] = sum(r.converged for r in reports)
    logger.info("multistart: %d starts, %d converged, %d distinct, best cost %.6g",
                len(reports), best.metadata["converged_starts"], len(extrema), best.cost)
    return MultistartResult(best=best, reports=reports, extrema=extrema)


def starts_table(result: MultistartResult) -> pd.DataFrame:
    rows = [{
        "start_id": r.metadata.get("start_id", k),
        "converged": r.converged,
        "cost": r.cost,
        "stationarity": r.metadata.get("stationarity", float("nan")),
        "iterations": r.iterations,
    } for k, r in enumerate(result.reports)]
    return pd.DataFrame(rows, columns=["start_id", "converged", "cost", "stationarity", "iterations"])


def sparsity(strategy: Strategy, threshold: float = 1e-3) -> float:
    """Fraction of rates below threshold * X/T."""
    return float(np.mean(strategy.rates < threshold * abs(strategy.grid.rate)))


def positive_rate_stats(strategy: Strategy) -> Tuple[float, float]:
    """(mean, std) of the strictly positive rates."""
    pos = strategy.rates[strategy.rates > 0]
    if pos.size == 0:
        return float("nan"), float("nan")
    return float(pos.mean()), float(pos.std())
