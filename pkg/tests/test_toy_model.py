import numpy as np
import pytest

from conftest import make_model
from execopt.cost_engine import expected_cost
from execopt.toy_model import toy_cost, toy_global_minimizer, toy_local_minima, toy_transition_delta


def test_linear_vwap_value() -> None:
    assert toy_cost(0.1, 0.5, 1.0, 0.1) == pytest.approx(0.013333, abs=1e-6)


@pytest.mark.parametrize("delta", [0.5, 0.7, 1.0])
def test_matches_matrix_cost(delta) -> None:
    model = make_model(gamma=0.5, delta=delta, N=2)
    for v1 in (-0.05, 0.02, 0.1, 0.17):
        matrix = expected_cost(model, np.array([v1, 0.2 - v1]))
        assert toy_cost(v1, 0.5, delta, 0.1) == pytest.approx(matrix, rel=1e-12)


def test_vectorized() -> None:
    v = np.linspace(-0.2, 0.2, 5)
    c = toy_cost(v, 0.5, 0.5, 0.1)
    assert c.shape == (5,)
    assert c[2] == pytest.approx(toy_cost(0.0, 0.5, 0.5, 0.1))


def test_two_minima_below_transition() -> None:
    minima = toy_local_minima(0.5, 0.5, 0.1)
    assert len(minima) == 2
    assert minima[0] < 0 < minima[1]
    assert toy_global_minimizer(0.5, 0.5, 0.1) == pytest.approx(minima[0], abs=1e-6)


def test_global_minimizer_positive_for_weak_nonlinearity() -> None:
    assert toy_global_minimizer(0.5, 0.9, 0.1) > 0


def test_transition_delta() -> None:
    assert toy_transition_delta(0.5, 0.1) == pytest.approx(0.56, abs=0.02)
