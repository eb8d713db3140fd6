# execopt/reports.py
"""
SolverReport: what every solver returns and what `run` writes to disk.

A report stores the model parameters next to the strategy, so that a report
loaded from JSON can rebuild its CostModel and re-evaluate the stored cost.
"""

import time
from pathlib import Path
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .cost_engine import CostModel, cost_components
from .impact_models import impact_from_dict
from .kernels import GridSpec, Strategy, kernel_matrices
from .util import PathLike, ensure_dir, load_json, save_json


@dataclass
class SolverReport:
    solver: str
    model: Dict[str, Any]
    rates: List[float]
    cost: float
    spread_component: float
    constraint_violation: float
    converged: bool
    iterations: int = 0
    residual: Optional[float] = None
    metadata: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0
    seed: Optional[int] = None

    @property
    def grid(self) -> GridSpec:
        return GridSpec(**self.model["grid"])

    @property
    def strategy(self) -> Strategy:
        return Strategy(np.asarray(self.rates, dtype=float), self.grid)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "SolverReport":
        return cls(**d)


def cost_model_from_dict(d: Dict[str, Any]) -> CostModel:
    grid = GridSpec(**d["grid"])
    return CostModel(
        impact=impact_from_dict(d["impact"]),
        kernels=kernel_matrices(d["gamma"], grid),
        spread=d.get("spread", 0.0),
    )


def make_report(solver: str, model: CostModel, strategy: Strategy, *, converged: bool,
                iterations: int = 0, residual: Optional[float] = None,
                metadata: Optional[Dict[str, Any]] = None, t0: Optional[float] = None,
                seed: Optional[int] = None) -> SolverReport:
    impact_part, spread_part = cost_components(model, strategy)
    return SolverReport(
        solver=solver,
        model=model.to_dict(),
        rates=[float(x) for x in strategy.rates],
        cost=impact_part + spread_part,
        spread_component=spread_part,
        constraint_violation=strategy.constraint_violation(),
        converged=bool(converged),
        iterations=int(iterations),
        residual=None if residual is None else float(residual),
        metadata=metadata or {},
        wall_time=0.0 if t0 is None else time.time() - t0,
        seed=seed,
    )


def save_report(report: SolverReport, path: PathLike):
    return save_json(report.to_dict(), path)


def load_report(path: PathLike) -> SolverReport:
    return SolverReport.from_dict(load_json(path))


def recompute_cost(report: SolverReport) -> float:
    """Cost of the stored strategy under a CostModel rebuilt from the stored parameters."""
    model = cost_model_from_dict(report.model)
    impact_part, spread_part = cost_components(model, report.strategy)
    return impact_part + spread_part


def profile_frame(report: SolverReport) -> pd.DataFrame:
    return report.strategy.to_frame()


def write_profile(report: SolverReport, path: PathLike) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    profile_frame(report).to_csv(path, index=False)
    return path
