import math

import numpy as np
import pytest

from execopt.errors import ImpactDomainError, NoInflectionError, ParameterError, SingularityError
from execopt.impact_models import (
    NO_ARBITRAGE_GAMMA,
    ConcaveConvex,
    PerturbedPowerLaw,
    PowerLaw,
    deriv,
    eval_impact,
    gradient_safe_rates,
    impact_from_dict,
    impact_to_dict,
    inflection_rate,
    second_deriv,
)


def test_power_law_values() -> None:
    assert eval_impact(PowerLaw(0.5), 0.01) == pytest.approx(0.1, abs=1e-15)
    assert eval_impact(PowerLaw(0.5), -2.0) == pytest.approx(-math.sqrt(2.0), abs=1e-14)


def test_concave_convex_value() -> None:
    f = ConcaveConvex(c=1.0, delta=0.55, d=0.1, V=1.0)
    assert f.value(1.0) == pytest.approx(0.5 ** 0.55 + 0.2, rel=1e-12)
    assert f.value(1.0) == pytest.approx(0.88303, abs=1e-5)


def test_first_derivatives() -> None:
    assert deriv(PowerLaw(1.0), 0.0) == 1.0
    assert deriv(PowerLaw(1.0), -3.7) == 1.0
    assert deriv(PerturbedPowerLaw(0.5, 1e-6), 0.0) == pytest.approx(500.0, rel=1e-12)
    assert deriv(PowerLaw(0.5), 0.04) == pytest.approx(2.5, rel=1e-12)


def test_second_derivatives() -> None:
    assert second_deriv(PowerLaw(1.0), 0.3) == 0.0
    assert second_deriv(PowerLaw(0.5), 1.0) == pytest.approx(-0.25, rel=1e-12)


def test_concave_convex_curvature_vanishes_at_inflection() -> None:
    f = ConcaveConvex(c=1.0, delta=0.55, d=0.1, V=1.0)
    v_star = inflection_rate(f)
    assert abs(f.second_deriv(v_star)) < 1e-6
    assert f.second_deriv(0.5 * v_star) < 0 < f.second_deriv(2.0 * v_star)


@pytest.mark.parametrize("d, expected", [(0.1, 1.0755), (0.5, 0.4256), (1.0, 0.2678), (2.0, 0.1639)])
def test_inflection_rate_matches_published_values(d, expected) -> None:
    f = ConcaveConvex(c=1.0, delta=0.55, d=d, V=1.0)
    assert inflection_rate(f) == pytest.approx(expected, abs=1e-3)


def test_inflection_rate_errors() -> None:
    with pytest.raises(NoInflectionError):
        inflection_rate(PowerLaw(0.5))
    with pytest.raises(NoInflectionError):
        inflection_rate(ConcaveConvex(c=1.0, delta=0.55, d=0.0, V=1.0))


def test_singularities_at_zero() -> None:
    with pytest.raises(SingularityError):
        PowerLaw(0.5).deriv(0.0)
    with pytest.raises(SingularityError):
        PowerLaw(0.5).second_deriv(np.array([0.1, 0.0]))
    with pytest.raises(SingularityError):
        ConcaveConvex(c=1.0, delta=0.55, d=0.1, V=1.0).deriv(0.0)


def test_linear_exponent_curvature_finite_at_zero() -> None:
    f = ConcaveConvex(c=1.0, delta=1.0, d=0.5, V=1.0)
    assert f.second_deriv(0.0) == 0.0
    curv = f.second_deriv(np.array([-0.2, 0.0, 0.2]))
    assert np.all(np.isfinite(curv))
    # -2V/(m+V)^3 + 2d/V^2 at m=0.2
    assert curv[2] == pytest.approx(-2.0 / 1.2 ** 3 + 1.0, rel=1e-12)
    assert curv[0] == pytest.approx(-curv[2], rel=1e-12)
    assert PerturbedPowerLaw(1.0, 0.0).second_deriv(0.0) == 0.0


def test_non_finite_rate_rejected() -> None:
    for model in (PowerLaw(0.5), PerturbedPowerLaw(0.5), ConcaveConvex(1.0, 0.55, 0.1, 1.0)):
        with pytest.raises(ImpactDomainError):
            model.value(float("nan"))
        with pytest.raises(ImpactDomainError):
            model.deriv(np.array([0.1, float("inf")]))


def test_invalid_parameters() -> None:
    with pytest.raises(ParameterError):
        PowerLaw(0.0)
    with pytest.raises(ParameterError):
        PerturbedPowerLaw(0.5, epsilon=-1.0)
    with pytest.raises(ParameterError):
        ConcaveConvex(c=1.0, delta=0.55, d=0.1, V=0.0)


@pytest.mark.parametrize("model", [PowerLaw(0.55), PerturbedPowerLaw(0.7, 1e-4), ConcaveConvex(1.0, 0.55, 0.5, 1.0)])
def test_odd_symmetry_is_exact(model) -> None:
    v = np.linspace(0.01, 2.0, 37)
    assert np.array_equal(model.value(-v), -model.value(v))
    assert np.array_equal(model.deriv(-v), model.deriv(v))


@pytest.mark.parametrize("model", [PowerLaw(0.55), PerturbedPowerLaw(0.7, 1e-4), ConcaveConvex(1.0, 0.55, 0.5, 1.0)])
def test_derivatives_match_finite_differences(model) -> None:
    v = np.array([0.03, 0.1, 0.7, 1.9])
    h = 1e-6 * v
    fd1 = (model.value(v + h) - model.value(v - h)) / (2 * h)
    fd2 = (model.deriv(v + h) - model.deriv(v - h)) / (2 * h)
    assert np.allclose(model.deriv(v), fd1, rtol=1e-7)
    assert np.allclose(model.second_deriv(v), fd2, rtol=1e-6)


def test_perturbation_limit() -> None:
    v = 0.05
    exact = PowerLaw(0.5).value(v)
    gap_big = abs(PerturbedPowerLaw(0.5, 1e-4).value(v) - exact)
    gap_small = abs(PerturbedPowerLaw(0.5, 1e-8).value(v) - exact)
    assert gap_small < gap_big


def test_scalar_in_scalar_out() -> None:
    assert isinstance(PowerLaw(0.5).value(0.25), float)
    assert isinstance(PowerLaw(0.5).value(np.array([0.25])), np.ndarray)


def test_dict_round_trip() -> None:
    for model in (PowerLaw(0.5), PerturbedPowerLaw(0.6, 1e-5), ConcaveConvex(1.0, 0.55, 2.0, 3.0)):
        assert impact_from_dict(impact_to_dict(model)) == model
    with pytest.raises(ParameterError):
        impact_from_dict({"kind": "cubic"})


def test_gradient_safe_rates_clamps_only_singular_models() -> None:
    v = np.array([0.0, -1e-15, 0.2])
    clamped = gradient_safe_rates(PowerLaw(0.5), v, 1e-10)
    assert clamped[0] == 1e-10 and clamped[1] == -1e-10 and clamped[2] == 0.2
    assert gradient_safe_rates(PowerLaw(1.0), v, 1e-10) is v


def test_no_arbitrage_gamma() -> None:
    assert NO_ARBITRAGE_GAMMA == pytest.approx(0.415, abs=1e-3)
