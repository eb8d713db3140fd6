# execopt/reproduce.py
"""
Reproduction tables: benchmark value, computed value and relative deviation, one CSV per table.

Every table is a function taking ReproduceOptions and returning a TableResult;
TABLES maps the public table id to it. Default scale is N=100, X=0.1, T=1 and
1000 starts; `quick` shrinks start counts, delta lists and scan sizes.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import reference_values as ref
from .cost_engine import CostModel, expected_cost, spread_coefficient
from .dang import DangConfig, convergence_scan, dang_solve, smallest_converging_delta
from .dham import DhamConfig, default_hbar_grid, dham_residual_table, dham_solve
from .errors import ConfigError
from .impact_models import ConcaveConvex, PowerLaw, inflection_rate
from .kernels import GridSpec, gss_strategy, kernel_matrices, vwap_strategy
from .landscape import MINIMUM, analyze_landscape
from .landscape import distance_matrix as strategy_distances
from .numopt import MultistartResult, OptimizerOptions, multistart_minimize, positive_rate_stats, sparsity
from .perturbative import perturbative_solve
from .toy_model import toy_cost, toy_global_minimizer, toy_local_minima, toy_transition_delta
from .util import ensure_dir, safe_filename, write_step_summary

logger = logging.getLogger(__name__)

NAN = float("nan")
X, T, N_DEFAULT = 0.1, 1.0, 100
QUICK_STARTS, FULL_STARTS = 200, 1000
QUICK_MONOTONE_STARTS, FULL_MONOTONE_STARTS = 5, 20
QUICK_N_CAP = 60


@dataclass
class ReproduceOptions:
    quick: bool = False
    seed: int = 0
    workers: Optional[int] = None
    starts: Optional[int] = None
    gammas: Optional[Sequence[float]] = None
    deltas: Optional[Sequence[float]] = None
    d: Optional[float] = None
    N: Optional[int] = None
    progress: Optional[Callable[[str, int, int], None]] = None

    @property
    def multistart_starts(self) -> int:
        if self.starts:
            return self.starts
        return QUICK_STARTS if self.quick else FULL_STARTS

    @property
    def monotone_starts(self) -> int:
        if self.starts:
            return self.starts
        return QUICK_MONOTONE_STARTS if self.quick else FULL_MONOTONE_STARTS

    def hbar_grid(self) -> List[float]:
        return default_hbar_grid(points=41 if self.quick else 121)

    def reporter(self, label: str) -> Optional[Callable[[int, int], None]]:
        if self.progress is None:
            return None
        return lambda done, total: self.progress(label, done, total)


@dataclass
class TableResult:
    table_id: str
    frame: pd.DataFrame
    extras: Dict[str, pd.DataFrame] = field(default_factory=dict)


def rel_dev(computed: float, reference: float) -> float:
    if not (math.isfinite(computed) and math.isfinite(reference)) or reference == 0:
        return NAN
    return (computed - reference) / abs(reference)


def _row(reference: float, computed, **keys) -> dict:
    computed = NAN if computed is None else float(computed)
    return {**keys, "reference": reference, "computed": computed, "rel_dev": rel_dev(computed, reference)}


def _in_region(gamma: float, delta: float) -> bool:
    return gamma + delta >= 1.0 - 1e-12


def _deltas(opts: ReproduceOptions, quick_list: Sequence[float], full_list: Sequence[float] = ref.DELTAS):
    if opts.deltas:
        return list(opts.deltas)
    return list(quick_list if opts.quick else full_list)


def _power_model(gamma: float, delta: float, N: int = N_DEFAULT, spread: float = 0.0) -> CostModel:
    return CostModel(PowerLaw(delta), kernel_matrices(gamma, GridSpec(N, T, X)), spread=spread)


def _dham(model: CostModel, opts: ReproduceOptions, init: str = "gss"):
    start = gss_strategy(model.gamma, model.grid) if init == "gss" else vwap_strategy(model.grid)
    return dham_solve(DhamConfig(model.impact, model.kernels, start, hbar_grid=opts.hbar_grid(),
                                 workers=opts.workers))


def _multistart(model: CostModel, opts: ReproduceOptions, label: str, monotone: bool = False) -> MultistartResult:
    starts = opts.monotone_starts if monotone else opts.multistart_starts
    o = OptimizerOptions(starts=starts, seed=opts.seed, workers=opts.workers, monotone=monotone)
    return multistart_minimize(model, o, progress=opts.reporter(label))


# ----------------------------
# cost tables
# ----------------------------
def table_costs_main(opts: ReproduceOptions) -> TableResult:
    rows = []
    for gamma in opts.gammas or (0.45, 0.5):
        for delta in _deltas(opts, (1.0, 0.75, 0.5)):
            if not _in_region(gamma, delta):
                continue
            model = _power_model(gamma, delta)
            vwap = expected_cost(model, vwap_strategy(model.grid))
            gss = expected_cost(model, gss_strategy(gamma, model.grid))
            dham = _dham(model, opts)
            refs = ref.COSTS_MAIN.get((gamma, delta), {})
            for name, value in (("vwap", vwap), ("gss", gss), ("dham", dham.cost)):
                rows.append(_row(refs.get(name, NAN), value, gamma=gamma, delta=delta, quantity=name))
            rows.append(_row(ref.lookup(ref.DHAM_RESIDUALS, (gamma, delta)), dham.residual,
                             gamma=gamma, delta=delta, quantity="dham_squared_residual"))
            logger.info("costs_main gamma=%s delta=%s: vwap=%.5f gss=%.5f dham=%.5f",
                        gamma, delta, vwap, gss, dham.cost)
    return TableResult("costs_main", pd.DataFrame(rows))


def table_costs_optimizers(opts: ReproduceOptions) -> TableResult:
    rows = []
    for gamma in opts.gammas or (0.45, 0.5):
        for delta in _deltas(opts, (0.9, 0.7, 0.55)):
            if not _in_region(gamma, delta):
                continue
            model = _power_model(gamma, delta)
            tag = f"gamma={gamma} delta={delta}"
            values = {
                "dham": _dham(model, opts).cost,
                "sqp": _multistart(model, opts, f"multistart {tag}").best.cost,
                "direct": _multistart(model, opts, f"monotone {tag}", monotone=True).best.cost,
            }
            refs = ref.COSTS_OPTIMIZERS.get((gamma, delta), {})
            for name, value in values.items():
                rows.append(_row(refs.get(name, NAN), value, gamma=gamma, delta=delta, quantity=name))
    return TableResult("costs_optimizers", pd.DataFrame(rows))


def table_concave_convex(opts: ReproduceOptions) -> TableResult:
    p = ref.CONCAVE_CONVEX_PARAMS
    grid = GridSpec(opts.N or N_DEFAULT, T, X)
    kernels = kernel_matrices(p["gamma"], grid)
    rows = []
    for d in [opts.d] if opts.d is not None else sorted(ref.CONCAVE_CONVEX):
        impact = ConcaveConvex(c=p["c"], delta=p["delta"], d=d, V=p["market_volume"] / grid.T)
        model = CostModel(impact, kernels)
        best = _multistart(model, opts, f"multistart d={d}").best
        mean, std = positive_rate_stats(best.strategy)
        computed = {
            "v_star": inflection_rate(impact),
            "mean_positive": mean,
            "std_positive": std,
            "sqp_cost": best.cost,
            "vwap_cost": expected_cost(model, vwap_strategy(grid)),
        }
        refs = ref.CONCAVE_CONVEX.get(d, {})
        for name, value in computed.items():
            rows.append(_row(refs.get(name, NAN), value, d=d, quantity=name))
    return TableResult("concave_convex", pd.DataFrame(rows))


def table_spread(opts: ReproduceOptions) -> TableResult:
    gamma, delta = ref.SPREAD_PARAMS["gamma"], ref.SPREAD_PARAMS["delta"]
    impact = PowerLaw(delta)
    rows = []
    for r, target in ref.SPREAD_COSTS.items():
        coef = spread_coefficient(r, gamma, impact, X, T)
        model = _power_model(gamma, delta, spread=coef)
        result = _multistart(model, opts, f"multistart r={r}")
        rows.append(_row(target, result.best.cost, r=r, spread_coefficient=coef,
                         spread_component=result.best.spread_component))
    return TableResult("spread", pd.DataFrame(rows))


def table_distance_matrix(opts: ReproduceOptions) -> TableResult:
    model = _power_model(0.5, 0.5)
    result = _multistart(model, opts, "multistart distances")
    minima = result.extrema[:4]
    strategies = [m.strategy for m in minima] + [vwap_strategy(model.grid)]
    labels = [f"minimum_{k + 1}" for k in range(len(minima))] + ["VWAP"]
    ref_index = list(range(len(minima))) + [4]
    D = strategy_distances(strategies)
    rows = []
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            reference = ref.DISTANCE_MATRIX[ref_index[a]][ref_index[b]]
            rows.append(_row(reference, D[a, b], a=labels[a], b=labels[b]))
    costs = pd.DataFrame({"label": labels[:-1], "cost": [m.cost for m in minima]})
    return TableResult("distance_matrix", pd.DataFrame(rows), {"costs": costs})


# ----------------------------
# solver diagnostics
# ----------------------------
def table_dang_region(opts: ReproduceOptions) -> TableResult:
    gamma = opts.gammas[0] if opts.gammas else 0.5
    if opts.N:
        N_list = [min(opts.N, QUICK_N_CAP) if opts.quick else opts.N]
    else:
        N_list = [10, 30, 60] if opts.quick else [10, 25, 50, 75, 100, 125, 150]
    full = [round(x, 2) for x in np.arange(0.5, 1.0001, 0.05)]
    deltas = _deltas(opts, (0.6, 0.8, 0.9, 0.95, 1.0), full)
    region = convergence_scan(N_list, deltas, gamma, DangConfig(), T=T, X=X,
                              random_starts=0 if opts.quick else 5, seed=opts.seed,
                              workers=opts.workers, progress=opts.reporter("dang scan"))
    summary = pd.DataFrame({"N": N_list, "delta_min": [smallest_converging_delta(region, n) for n in N_list]})

    grid = GridSpec(N_DEFAULT, T, X)
    rep = dang_solve(DangConfig(), 0.5, 0.95, grid)
    lam = pd.DataFrame([_row(ref.DANG_LAMBDA[(0.5, 0.95)], rep.metadata["lambda"],
                             gamma=0.5, delta=0.95, converged=rep.converged)])
    return TableResult("dang_region", region, {"delta_min": summary, "lambda": lam})


def interior_mask(grid: GridSpec, margin: float = 0.05) -> np.ndarray:
    """Cells whose midpoint lies in [margin T, (1 - margin) T]."""
    t = grid.midpoints()
    return (t >= margin * grid.T) & (t <= (1.0 - margin) * grid.T)


def table_dang_vs_dham(opts: ReproduceOptions) -> TableResult:
    gamma = opts.gammas[0] if opts.gammas else 0.5
    delta = opts.deltas[0] if opts.deltas else 0.95
    model = _power_model(gamma, delta, N=opts.N or N_DEFAULT)
    grid = model.grid
    dang = dang_solve(DangConfig(epsilon=1e-6), gamma, delta, grid, kernels=model.kernels)
    dham = _dham(model, opts)
    a, b = np.asarray(dang.rates), np.asarray(dham.rates)
    gap = np.abs(a - b) / np.abs(b)
    inside = interior_mask(grid)
    profile = pd.DataFrame({"i": np.arange(1, grid.N + 1), "t_mid": grid.midpoints(),
                            "dang": a, "dham": b, "rel_gap": gap, "interior": inside})
    refs = ref.COSTS_MAIN.get((gamma, delta), {})
    rows = [
        _row(refs.get("dham", NAN), dang.cost, quantity="dang_cost", converged=dang.converged),
        _row(refs.get("dham", NAN), dham.cost, quantity="dham_cost", converged=dham.converged),
        _row(ref.lookup(ref.DANG_LAMBDA, (gamma, delta)), dang.metadata["lambda"],
             quantity="dang_lambda", converged=dang.converged),
    ]
    logger.info("dang_vs_dham gamma=%s delta=%s: max interior gap %.3g", gamma, delta, gap[inside].max())
    frame = pd.DataFrame(rows)
    frame["max_interior_gap"] = float(gap[inside].max())
    return TableResult("dang_vs_dham", frame, {"profile": profile})


def table_landscape(opts: ReproduceOptions) -> TableResult:
    gamma = opts.gammas[0] if opts.gammas else 0.5
    rows, spreads = [], []
    for delta in _deltas(opts, (0.5, 0.8), (0.5, 0.6, 0.7, 0.8)):
        model = _power_model(gamma, delta, N=opts.N or N_DEFAULT)
        result = _multistart(model, opts, f"landscape delta={delta}")
        land = analyze_landscape(model, result.extrema)
        minima_spreads = [e.log_spread for e in land.extrema
                          if e.classification == MINIMUM and e.log_spread is not None]
        rows.append({"gamma": gamma, "delta": delta, "starts": len(result.reports),
                     "converged_starts": result.best.metadata.get("converged_starts", 0),
                     **{k: land.stats[k] for k in ("extrema", "minima", "saddles", "indeterminate",
                                                   "fraction_minima", "mean", "std", "skewness",
                                                   "negative_cost_minima")},
                     "max_log_spread": max(minima_spreads) if minima_spreads else NAN})
        spreads.extend({"delta": delta, "extremum": e.label, "cost": e.cost, "log_spread": e.log_spread}
                       for e in land.extrema if e.classification == MINIMUM)
    return TableResult("landscape", pd.DataFrame(rows),
                       {"minima": pd.DataFrame(spreads, columns=["delta", "extremum", "cost", "log_spread"])})


def table_dham_residual(opts: ReproduceOptions) -> TableResult:
    model = _power_model(0.5, 0.5)
    rows, curves = [], []
    for init in ("vwap", "gss"):
        rep = _dham(model, opts, init)
        hbar_ref, err_ref = ref.DHAM_HBAR[init]
        rows.append(_row(hbar_ref, rep.metadata.get("hbar"), init=init, quantity="hbar"))
        rows.append(_row(err_ref, rep.residual, init=init, quantity="squared_residual"))
        cost_ref = ref.COSTS_MAIN[(0.5, 0.5)]["dham"] if init == "gss" else NAN
        rows.append(_row(cost_ref, rep.cost, init=init, quantity="cost"))
        curve = dham_residual_table(rep)
        curve.insert(0, "init", init)
        curves.append(curve)
    return TableResult("dham_residual", pd.DataFrame(rows), {"curve": pd.concat(curves, ignore_index=True)})


def table_toy_transition(opts: ReproduceOptions) -> TableResult:
    gamma = opts.gammas[0] if opts.gammas else 0.5
    d_star = toy_transition_delta(gamma, X)
    frame = pd.DataFrame([_row(ref.TOY_TRANSITION_DELTA if gamma == 0.5 else NAN, d_star,
                               gamma=gamma, quantity="delta_star")])
    rows = []
    for delta in _deltas(opts, (0.5, 0.56, 0.6, 0.8), (0.5, 0.52, 0.54, 0.56, 0.58, 0.6, 0.7, 0.8, 0.9)):
        v1 = toy_global_minimizer(gamma, delta, X)
        minima = toy_local_minima(gamma, delta, X)
        rows.append({"delta": delta, "v1_global": v1, "cost_global": float(toy_cost(v1, gamma, delta, X)),
                     "local_minima": ";".join(f"{m:.6g}" for m in minima)})
    return TableResult("toy_transition", frame, {"minima": pd.DataFrame(rows)})


def table_perturbative_profile(opts: ReproduceOptions) -> TableResult:
    eps = 0.05
    grid = GridSpec(opts.N or (128 if opts.quick else 512), T, X)
    rep = perturbative_solve(0.5, eps, grid)
    v0 = gss_strategy(0.5, grid).rates
    frame = pd.DataFrame({
        "i": np.arange(1, grid.N + 1),
        "t_mid": grid.midpoints(),
        "v0": v0,
        "v1": rep.metadata["v1"],
        "v": rep.rates,
    })
    return TableResult("perturbative_profile", frame)


def table_monotone_sparsity(opts: ReproduceOptions) -> TableResult:
    rows = []
    for delta in _deltas(opts, (0.9, 0.7, 0.5), (0.9, 0.8, 0.7, 0.6, 0.5)):
        model = _power_model(0.5, delta)
        best = _multistart(model, opts, f"monotone delta={delta}", monotone=True).best
        refs = ref.COSTS_OPTIMIZERS.get((0.5, delta), {})
        rows.append(_row(refs.get("direct", NAN), best.cost, delta=delta, sparsity=sparsity(best.strategy)))
    return TableResult("monotone_sparsity", pd.DataFrame(rows))


# ----------------------------
# cost surface
# ----------------------------
def _surface_reference(gamma: float, delta: float, d: Optional[float], N: int) -> float:
    if N != N_DEFAULT:
        return NAN
    if d is None:
        return ref.COSTS_OPTIMIZERS.get((gamma, delta), {}).get("sqp", NAN)
    p = ref.CONCAVE_CONVEX_PARAMS
    if (gamma, delta) == (p["gamma"], p["delta"]):
        return ref.CONCAVE_CONVEX.get(d, {}).get("sqp_cost", NAN)
    return NAN


def table_cost_surface(opts: ReproduceOptions) -> TableResult:
    N = opts.N or N_DEFAULT
    grid = GridSpec(N, T, X)
    full = [round(x, 2) for x in np.arange(0.55, 1.0001, 0.05)]
    rows = []
    for gamma in opts.gammas or (0.45, 0.5):
        kernels = kernel_matrices(gamma, grid)
        for delta in _deltas(opts, (0.55, 0.7, 0.9), full):
            if not _in_region(gamma, delta):
                logger.info("cost_surface: skipping (%s, %s) outside the no-arbitrage region", gamma, delta)
                continue
            impact = PowerLaw(delta) if opts.d is None else ConcaveConvex(c=1.0, delta=delta, d=opts.d, V=1.0 / T)
            model = CostModel(impact, kernels)
            result = _multistart(model, opts, f"surface gamma={gamma} delta={delta}")
            rows.append(_row(
                _surface_reference(gamma, delta, opts.d, N), result.best.cost,
                gamma=gamma, delta=delta, d=NAN if opts.d is None else opts.d, N=N,
                vwap_cost=expected_cost(model, vwap_strategy(grid)),
                converged_starts=result.best.metadata.get("converged_starts", 0),
                distinct_extrema=len(result.extrema),
                negative=result.best.cost < 0,
            ))
    return TableResult("cost_surface", pd.DataFrame(rows))


TABLES: Dict[str, Callable[[ReproduceOptions], TableResult]] = {
    "costs_main": table_costs_main,
    "costs_optimizers": table_costs_optimizers,
    "concave_convex": table_concave_convex,
    "spread": table_spread,
    "distance_matrix": table_distance_matrix,
    "dang_region": table_dang_region,
    "cost_surface": table_cost_surface,
    "toy_transition": table_toy_transition,
    "dham_residual": table_dham_residual,
    "perturbative_profile": table_perturbative_profile,
    "monotone_sparsity": table_monotone_sparsity,
    "dang_vs_dham": table_dang_vs_dham,
    "landscape": table_landscape,
}


def summary_lines(result: TableResult, elapsed: float) -> List[str]:
    df = result.frame
    lines = [f"### reproduce {result.table_id}", f"- Rows: **{len(df)}**"]
    if "rel_dev" in df.columns:
        devs = df["rel_dev"].abs().dropna()
        worst = f"{devs.max():.3%}" if len(devs) else "n/a"
        failures = int((~np.isfinite(df["computed"].astype(float))).sum())
        lines.append(f"- Max relative deviation: **{worst}** · Failures: **{failures}**")
    lines.append(f"- Source: {ref.SOURCES.get(result.table_id, 'no published reference')}")
    lines.append(f"- Elapsed: **{elapsed:.1f}s**")
    return lines


def reproduce(table_id: str, out_dir, opts: Optional[ReproduceOptions] = None) -> Tuple[TableResult, List[Path], List[str]]:
    """Build one table, write its CSVs and the step summary; returns (result, paths, summary lines)."""
    if table_id not in TABLES:
        raise ConfigError(f"unknown table {table_id!r}; choose from {', '.join(TABLES)}")
    opts = opts or ReproduceOptions()
    t0 = time.time()
    result = TABLES[table_id](opts)
    out = ensure_dir(out_dir)
    paths = [out / safe_filename(table_id, ".csv")]
    result.frame.to_csv(paths[0], index=False)
    for key, frame in result.extras.items():
        path = out / safe_filename(f"{table_id}_{key}", ".csv")
        frame.to_csv(path, index=False)
        paths.append(path)
    lines = summary_lines(result, time.time() - t0)
    write_step_summary(["", *lines])
    return result, paths, lines
