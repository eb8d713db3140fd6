import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from execopt.config import config_from_mapping, load_config
from execopt.impact_models import ConcaveConvex
from execopt.kernels import kernel_matrices, linear_optimum
from execopt.runner import build_impact, build_model, execute, optimizer_options

CONFIGS = Path(__file__).resolve().parent.parent / "data" / "configs"


def _cfg(**sections):
    return config_from_mapping({name: {k: str(v) for k, v in values.items()} for name, values in sections.items()})


def test_shipped_configs_parse() -> None:
    for name in ("dham", "multistart", "spread", "concave_convex", "dang"):
        load_config(CONFIGS / f"{name}.ini")


def test_build_model_spread_and_concave_convex() -> None:
    cfg = _cfg(problem={"gamma": 0.45}, impact={"delta": 0.55}, grid={"N": 20},
               regularization={"kind": "spread", "spread_ratio": 0.5})
    assert build_model(cfg).spread == pytest.approx(0.1653, abs=5e-4)
    cc = build_impact(_cfg(problem={"gamma": 0.45}, impact={"kind": "concave_convex", "delta": 0.55, "d": 1.0},
                           grid={"T": 2.0}))
    assert isinstance(cc, ConcaveConvex)
    assert cc.V == pytest.approx(0.5)


def test_optimizer_options_follow_method() -> None:
    mono = optimizer_options(_cfg(solver={"method": "monotone"}, monotone={"starts": 3}))
    assert mono.monotone and mono.starts == 3
    ms = optimizer_options(_cfg(solver={"method": "multistart", "seed": 4}, multistart={"bounds": "true"}))
    assert not ms.monotone and ms.bounds and ms.seed == 4


def test_perturbative_run_writes_artifacts(tmp_path) -> None:
    cfg = _cfg(problem={"name": "pert small"}, grid={"N": 16}, solver={"method": "perturbative"},
               perturbative={"eps": 0.02})
    res = execute(cfg, out_dir=tmp_path)
    assert res.report.converged
    assert set(res.paths) == {"report", "profile"}
    assert res.paths["report"].name == "pert_small_report.json"
    data = json.loads(res.paths["report"].read_text(encoding="utf-8"))
    assert data["solver"] == "perturbative"
    assert len(pd.read_csv(res.paths["profile"])) == 16


def test_dang_linear_run(tmp_path) -> None:
    cfg = _cfg(impact={"delta": 1.0}, grid={"N": 12}, solver={"method": "dang"}, dang={"epsilon": 0.0})
    rep = execute(cfg, out_dir=tmp_path).report
    assert rep.converged
    target = linear_optimum(kernel_matrices(0.5, rep.grid)).rates
    assert np.allclose(rep.rates, target, rtol=1e-8)


def test_multistart_run_with_landscape(tmp_path) -> None:
    cfg = _cfg(problem={"name": "ms"}, impact={"delta": 1.0}, grid={"N": 6},
               solver={"method": "multistart", "seed": 1}, multistart={"starts": 3, "landscape": "true"})
    res = execute(cfg, out_dir=tmp_path, workers=1)
    assert set(res.paths) == {"report", "profile", "starts", "landscape", "spectra"}
    land = json.loads(res.paths["landscape"].read_text(encoding="utf-8"))
    assert land["labels"][-1] == "VWAP"
    assert land["extrema"][0]["classification"] == "minimum"
    assert len(pd.read_csv(res.paths["starts"])) == 3
    assert res.report.seed == 1


def test_dham_run_records_residual_curve(tmp_path) -> None:
    cfg = _cfg(impact={"delta": 0.8}, grid={"N": 12}, solver={"method": "dham"},
               dham={"order": 2, "hbar_points": 9, "refine_points": 3})
    res = execute(cfg, out_dir=tmp_path, workers=1)
    curve = pd.read_csv(res.paths["residual_curve"])
    assert list(curve.columns) == ["hbar", "squared_residual"]
    assert len(curve) >= 9
