# execopt/config.py
"""
INI run configuration.

Every key has a default here; `execopt defaults` prints the complete file.
Unknown sections or keys are rejected.
"""

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Optional

from .errors import ConfigError
from .impact_models import NO_ARBITRAGE_GAMMA
from .util import PathLike

IMPACT_KINDS = ("power_law", "perturbed_power_law", "concave_convex")
REGULARIZATIONS = ("none", "spread")
METHODS = ("dham", "dang", "perturbative", "multistart", "monotone")
INITS = ("gss", "vwap")
POWER_LAW_METHODS = ("dang", "perturbative")


@dataclass(frozen=True)
class ProblemSection:
    name: str = "run"
    gamma: float = 0.5
    allow_arbitrage_region: bool = False


@dataclass(frozen=True)
class ImpactSection:
    kind: str = "power_law"
    delta: float = 0.5
    epsilon: float = 1e-6
    c: float = 1.0
    d: float = 0.1
    market_volume: float = 1.0


@dataclass(frozen=True)
class GridSection:
    N: int = 100
    T: float = 1.0
    X: float = 0.1


@dataclass(frozen=True)
class RegularizationSection:
    kind: str = "none"
    spread_ratio: float = 0.0


@dataclass(frozen=True)
class SolverSection:
    method: str = "dham"
    seed: int = 0


@dataclass(frozen=True)
class DhamSection:
    order: int = 7
    init: str = "gss"
    hbar_min: float = -120.0
    hbar_max: float = 0.0
    hbar_points: int = 121
    refine: bool = True
    refine_points: int = 21
    lambda_tolerance: float = 1e-3


@dataclass(frozen=True)
class DangSection:
    epsilon: float = 1e-6
    max_iterations: int = 500
    mean_field_window: int = 20
    rel_std_threshold: float = 1e-9
    lambda_tolerance: float = 1e-3
    max_outer: int = 50


@dataclass(frozen=True)
class PerturbativeSection:
    eps: float = 0.05


@dataclass(frozen=True)
class MultistartSection:
    starts: int = 1000
    max_iterations: int = 5000
    gradient_tolerance: float = 1e-9
    bounds: bool = False
    dedup_tolerance: float = 1e-6
    landscape: bool = False


@dataclass(frozen=True)
class MonotoneSection:
    starts: int = 20
    step_tolerance: float = 1e-6
    max_moves: int = 200000


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    profile: bool = True


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSection = field(default_factory=ProblemSection)
    impact: ImpactSection = field(default_factory=ImpactSection)
    grid: GridSection = field(default_factory=GridSection)
    regularization: RegularizationSection = field(default_factory=RegularizationSection)
    solver: SolverSection = field(default_factory=SolverSection)
    dham: DhamSection = field(default_factory=DhamSection)
    dang: DangSection = field(default_factory=DangSection)
    perturbative: PerturbativeSection = field(default_factory=PerturbativeSection)
    multistart: MultistartSection = field(default_factory=MultistartSection)
    monotone: MonotoneSection = field(default_factory=MonotoneSection)
    output: OutputSection = field(default_factory=OutputSection)


def _coerce(section: str, key: str, raw: str, default: Any) -> Any:
    try:
        if isinstance(default, bool):
            v = raw.strip().lower()
            if v in configparser.ConfigParser.BOOLEAN_STATES:
                return configparser.ConfigParser.BOOLEAN_STATES[v]
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            x = float(raw)
            if math.isnan(x):
                raise ValueError(raw)
            return x
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {type(default).__name__}")


def config_from_mapping(data: Dict[str, Dict[str, str]], check_region: bool = True) -> RunConfig:
    base = RunConfig()
    sections = {f.name: getattr(base, f.name) for f in fields(RunConfig)}
    for name, values in data.items():
        if name == configparser.DEFAULTSECT:
            continue
        if name not in sections:
            raise ConfigError(f"unknown section [{name}]")
        current = sections[name]
        known = {f.name: getattr(current, f.name) for f in fields(current)}
        changes = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown key [{name}] {key}")
            changes[key] = _coerce(name, key, raw, known[key])
        sections[name] = replace(current, **changes)
    cfg = RunConfig(**sections)
    validate(cfg, check_region=check_region)
    return cfg


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(interpolation=None)
    p.optionxform = str  # keys are case-sensitive (N, T, X)
    return p


def load_config(path: PathLike, seed: Optional[int] = None) -> RunConfig:
    p = _parser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            p.read_file(fh)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}")
    cfg = config_from_mapping({s: dict(p.items(s, raw=True)) for s in p.sections()})
    if seed is not None:
        cfg = replace(cfg, solver=replace(cfg.solver, seed=seed))
    return cfg


def check_no_arbitrage(gamma: float, delta: float):
    if gamma + delta < 1.0 or gamma < NO_ARBITRAGE_GAMMA:
        raise ConfigError(
            f"(gamma, delta) = ({gamma}, {delta}) is outside the no-dynamic-arbitrage region "
            f"gamma + delta >= 1, gamma >= 2 - log 3 / log 2 = {NO_ARBITRAGE_GAMMA:.3f}; "
            "set [problem] allow_arbitrage_region = true to run it anyway")


def validate(cfg: RunConfig, check_region: bool = True):
    def one_of(section, key, value, allowed):
        if value not in allowed:
            raise ConfigError(f"[{section}] {key} must be one of {', '.join(allowed)}; got {value!r}")

    one_of("impact", "kind", cfg.impact.kind, IMPACT_KINDS)
    one_of("regularization", "kind", cfg.regularization.kind, REGULARIZATIONS)
    one_of("solver", "method", cfg.solver.method, METHODS)
    one_of("dham", "init", cfg.dham.init, INITS)
    if not 0.0 < cfg.problem.gamma < 1.0:
        raise ConfigError(f"[problem] gamma must lie in (0, 1), got {cfg.problem.gamma}")
    if cfg.grid.N < 1 or not cfg.grid.T > 0:
        raise ConfigError("[grid] needs N >= 1 and T > 0")
    if not cfg.impact.delta > 0:
        raise ConfigError("[impact] delta must be > 0")
    # both solvers build their own power-law impact from delta alone
    if cfg.solver.method in POWER_LAW_METHODS and cfg.impact.kind != "power_law":
        raise ConfigError(f"[solver] method = {cfg.solver.method} supports only [impact] kind = power_law; "
                          f"got {cfg.impact.kind!r}")
    d = cfg.dham
    if not (d.hbar_min < d.hbar_max <= 0.0 and d.hbar_points >= 1):
        raise ConfigError("[dham] needs hbar_min < hbar_max <= 0 and hbar_points >= 1")
    if check_region and not cfg.problem.allow_arbitrage_region:
        check_no_arbitrage(cfg.problem.gamma, solver_delta(cfg))


def solver_delta(cfg: RunConfig) -> float:
    """Impact exponent the configured solver actually uses."""
    if cfg.solver.method == "perturbative":
        return 1.0 - cfg.perturbative.eps
    return cfg.impact.delta


def to_mapping(cfg: RunConfig) -> Dict[str, Dict[str, str]]:
    out = {}
    for f in fields(cfg):
        sec = getattr(cfg, f.name)
        out[f.name] = {k.name: _fmt(getattr(sec, k.name)) for k in fields(sec)}
    return out


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def defaults_text() -> str:
    p = _parser()
    p.read_dict(to_mapping(RunConfig()))
    buf = io.StringIO()
    p.write(buf)
    return buf.getvalue()
