import pytest

from execopt.config import (
    RunConfig,
    config_from_mapping,
    defaults_text,
    load_config,
    solver_delta,
    to_mapping,
)
from execopt.errors import ConfigError


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_defaults_round_trip(tmp_path) -> None:
    assert config_from_mapping(to_mapping(RunConfig())) == RunConfig()
    cfg = load_config(_write(tmp_path, defaults_text()))
    assert cfg == RunConfig()
    assert "[problem]" in defaults_text()
    assert "N = 100" in defaults_text()


def test_partial_file_keeps_defaults(tmp_path) -> None:
    cfg = load_config(_write(tmp_path, "[grid]\nN = 20\n\n[solver]\nmethod = multistart\n"), seed=42)
    assert cfg.grid.N == 20
    assert cfg.grid.X == 0.1
    assert cfg.solver.method == "multistart"
    assert cfg.solver.seed == 42


def test_unknown_names_rejected() -> None:
    with pytest.raises(ConfigError, match="unknown key"):
        config_from_mapping({"grid": {"M": "3"}})
    with pytest.raises(ConfigError, match="unknown section"):
        config_from_mapping({"plots": {}})
    with pytest.raises(ConfigError):
        config_from_mapping({"solver": {"method": "newton"}})


def test_bad_values_rejected() -> None:
    with pytest.raises(ConfigError):
        config_from_mapping({"multistart": {"landscape": "maybe"}})
    with pytest.raises(ConfigError):
        config_from_mapping({"grid": {"N": "ten"}})
    with pytest.raises(ConfigError):
        config_from_mapping({"dham": {"hbar_max": "1.0"}})
    with pytest.raises(ConfigError):
        config_from_mapping({"problem": {"gamma": "1.5"}})


def test_no_arbitrage_region() -> None:
    with pytest.raises(ConfigError, match="0.415"):
        config_from_mapping({"problem": {"gamma": "0.3"}, "impact": {"delta": "0.8"}})
    with pytest.raises(ConfigError, match="allow_arbitrage_region"):
        config_from_mapping({"problem": {"gamma": "0.45"}, "impact": {"delta": "0.5"}})
    cfg = config_from_mapping({"problem": {"gamma": "0.3", "allow_arbitrage_region": "true"}})
    assert cfg.problem.allow_arbitrage_region


def test_region_uses_solver_exponent() -> None:
    cfg = config_from_mapping({"problem": {"gamma": "0.45"}, "solver": {"method": "perturbative"},
                               "perturbative": {"eps": "0.05"}})
    assert solver_delta(cfg) == pytest.approx(0.95)


def test_missing_file() -> None:
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("does/not/exist.ini")


@pytest.mark.parametrize("method", ["dang", "perturbative"])
@pytest.mark.parametrize("kind", ["perturbed_power_law", "concave_convex"])
def test_power_law_only_methods_reject_other_impacts(method, kind) -> None:
    with pytest.raises(ConfigError, match="power_law"):
        config_from_mapping({"solver": {"method": method}, "impact": {"kind": kind, "delta": "0.8"}})
    cfg = config_from_mapping({"solver": {"method": "multistart"}, "impact": {"kind": kind, "delta": "0.8"}})
    assert cfg.impact.kind == kind
