# execopt/runner.py
"""Builds the problem described by a RunConfig, dispatches to a solver and writes its artifacts."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional

from .config import RunConfig
from .cost_engine import CostModel, spread_coefficient
from .dang import DangConfig, dang_solve
from .dham import DhamConfig, default_hbar_grid, dham_residual_table, dham_solve
from .impact_models import ConcaveConvex, ImpactModel, PerturbedPowerLaw, PowerLaw
from .kernels import GridSpec, gss_strategy, kernel_matrices, vwap_strategy
from .landscape import analyze_landscape, spectra_table
from .numopt import OptimizerOptions, multistart_minimize, starts_table
from .perturbative import perturbative_solve
from .reports import SolverReport, save_report, write_profile
from .util import ensure_dir, safe_filename, save_json

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    report: SolverReport
    paths: Dict[str, Path] = field(default_factory=dict)


def build_impact(cfg: RunConfig) -> ImpactModel:
    imp = cfg.impact
    if imp.kind == "power_law":
        return PowerLaw(imp.delta)
    if imp.kind == "perturbed_power_law":
        return PerturbedPowerLaw(imp.delta, imp.epsilon)
    return ConcaveConvex(c=imp.c, delta=imp.delta, d=imp.d, V=imp.market_volume / cfg.grid.T)


def build_model(cfg: RunConfig) -> CostModel:
    grid = GridSpec(cfg.grid.N, cfg.grid.T, cfg.grid.X)
    impact = build_impact(cfg)
    spread = 0.0
    if cfg.regularization.kind == "spread":
        spread = spread_coefficient(cfg.regularization.spread_ratio, cfg.problem.gamma, impact, grid.X, grid.T)
    return CostModel(impact, kernel_matrices(cfg.problem.gamma, grid), spread=spread)


def optimizer_options(cfg: RunConfig, workers: Optional[int] = None) -> OptimizerOptions:
    if cfg.solver.method == "monotone":
        m = cfg.monotone
        return OptimizerOptions(starts=m.starts, step_tolerance=m.step_tolerance, max_moves=m.max_moves,
                                seed=cfg.solver.seed, monotone=True, workers=workers)
    m = cfg.multistart
    return OptimizerOptions(starts=m.starts, max_iterations=m.max_iterations,
                            gradient_tolerance=m.gradient_tolerance, bounds=m.bounds,
                            dedup_tolerance=m.dedup_tolerance, seed=cfg.solver.seed, workers=workers)


def dham_config(cfg: RunConfig, model: CostModel, workers: Optional[int] = None) -> DhamConfig:
    d = cfg.dham
    init = gss_strategy(model.gamma, model.grid) if d.init == "gss" else vwap_strategy(model.grid)
    return DhamConfig(
        impact=model.impact, kernels=model.kernels, init=init, order=d.order,
        hbar_grid=default_hbar_grid(d.hbar_min, d.hbar_max, d.hbar_points),
        lambda_tolerance=d.lambda_tolerance, refine=d.refine, refine_points=d.refine_points,
        workers=workers,
    )


def solve(cfg: RunConfig, workers: Optional[int] = None,
          progress: Optional[Callable[[int, int], None]] = None):
    """Run the configured solver; returns (report, extras) where extras holds solver-specific tables."""
    method = cfg.solver.method
    model = build_model(cfg)
    extras = {}
    if method == "dham":
        rep = dham_solve(dham_config(cfg, model, workers))
        extras["residual_curve"] = dham_residual_table(rep)
    elif method == "dang":
        d = cfg.dang
        dcfg = DangConfig(epsilon=d.epsilon, max_iterations=d.max_iterations,
                          mean_field_window=d.mean_field_window, rel_std_threshold=d.rel_std_threshold,
                          lambda_tolerance=d.lambda_tolerance, max_outer=d.max_outer)
        rep = dang_solve(dcfg, model.gamma, cfg.impact.delta, model.grid, kernels=model.kernels)
    elif method == "perturbative":
        rep = perturbative_solve(model.gamma, cfg.perturbative.eps, model.grid)
    else:
        result = multistart_minimize(model, optimizer_options(cfg, workers), progress=progress)
        rep = result.best
        extras["starts"] = starts_table(result)
        if method == "multistart" and cfg.multistart.landscape and len(result.extrema) > 0:
            land = analyze_landscape(model, result.extrema, {"VWAP": vwap_strategy(model.grid)})
            extras["landscape"] = land
            extras["spectra"] = spectra_table(land)
    rep.seed = cfg.solver.seed
    return rep, extras


def execute(cfg: RunConfig, out_dir: Optional[str] = None, workers: Optional[int] = None,
            progress: Optional[Callable[[int, int], None]] = None) -> RunResult:
    rep, extras = solve(cfg, workers=workers, progress=progress)
    out = ensure_dir(out_dir or cfg.output.dir)
    stem = safe_filename(cfg.problem.name)
    res = RunResult(rep)
    res.paths["report"] = save_report(rep, out / f"{stem}_report.json")
    if cfg.output.profile:
        res.paths["profile"] = write_profile(rep, out / f"{stem}_profile.csv")
    for key, table in extras.items():
        if key == "landscape":
            res.paths[key] = save_json(table.to_dict(), out / f"{stem}_landscape.json")
        else:
            path = out / f"{stem}_{key}.csv"
            table.to_csv(path, index=False)
            res.paths[key] = path
    logger.info("run %s: %s converged=%s cost=%.6g", cfg.problem.name, rep.solver, rep.converged, rep.cost)
    return res
