import numpy as np
import pytest

from execopt.cost_engine import CostModel
from execopt.impact_models import PowerLaw
from execopt.kernels import GridSpec, kernel_matrices


def make_model(gamma=0.5, delta=0.5, N=10, X=0.1, T=1.0, spread=0.0):
    return CostModel(PowerLaw(delta), kernel_matrices(gamma, GridSpec(N, T, X)), spread=spread)


@pytest.fixture
def grid10():
    return GridSpec(10)


@pytest.fixture
def linear_model():
    return make_model(delta=1.0)


@pytest.fixture
def sqrt_model():
    return make_model(delta=0.5)


@pytest.fixture
def positive_rates():
    """A strictly positive, non-constant strategy on 10 cells trading X=0.1."""
    rng = np.random.default_rng(7)
    v = rng.uniform(0.5, 1.5, size=10)
    return v * (10 * 0.1 / v.sum())


@pytest.fixture(autouse=True)
def _single_worker(monkeypatch):
    monkeypatch.setenv("EXECOPT_WORKERS", "1")
    monkeypatch.delenv("GITHUB_STEP_SUMMARY", raising=False)
