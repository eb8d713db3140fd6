import numpy as np
import pytest
from scipy import integrate

from execopt.errors import ParameterError, UnsupportedImpactError
from execopt.impact_models import ConcaveConvex, PerturbedPowerLaw, PowerLaw
from execopt.kernels import (
    GridSpec,
    Strategy,
    build_cost_matrix,
    build_kernel_matrix,
    gss_constant,
    gss_strategy,
    kernel_matrices,
    linear_multiplier,
    linear_optimum,
    vwap_cost_closed_form,
    vwap_strategy,
)


def test_kernel_diagonal_and_first_offdiagonal() -> None:
    G = build_kernel_matrix(0.5, GridSpec(100))
    assert G[0, 0] == pytest.approx(8.0 / 3.0 * 1e-3, rel=1e-12)
    G2 = build_kernel_matrix(0.5, GridSpec(2))
    assert G2[1, 0] == pytest.approx(0.39052, abs=1e-5)


def test_kernel_matches_quadrature() -> None:
    gamma, grid = 0.45, GridSpec(6)
    G = build_kernel_matrix(gamma, grid)
    dt = grid.dt
    for i, j in [(3, 0), (5, 2), (5, 1)]:
        val, _ = integrate.dblquad(lambda s, t: abs(t - s) ** -gamma,
                                   i * dt, (i + 1) * dt, j * dt, (j + 1) * dt, epsabs=1e-12)
        assert G[i, j] == pytest.approx(val, rel=1e-6)


def test_kernel_is_symmetric_toeplitz() -> None:
    G = build_kernel_matrix(0.5, GridSpec(12))
    assert np.allclose(G, G.T, rtol=0, atol=0)
    assert np.allclose(np.diag(G, 3), G[3, 0])


def test_cost_matrix_properties() -> None:
    k = kernel_matrices(0.5, GridSpec(100))
    assert np.array_equal(k.A + k.A.T, k.G)
    assert np.all(np.triu(k.A, 1) == 0)
    assert k.A.sum() == pytest.approx(1.0 / 0.75, rel=1e-12)
    single = kernel_matrices(0.5, GridSpec(1))
    assert single.A[0, 0] == pytest.approx(single.G[0, 0] / 2.0)


def test_matrices_are_read_only() -> None:
    k = kernel_matrices(0.5, GridSpec(4))
    with pytest.raises(ValueError):
        k.G[0, 0] = 1.0


def test_invalid_inputs() -> None:
    with pytest.raises(ParameterError):
        build_kernel_matrix(1.0, GridSpec(4))
    with pytest.raises(ParameterError):
        GridSpec(0)
    with pytest.raises(ParameterError):
        build_cost_matrix(np.zeros((2, 3)))
    with pytest.raises(ParameterError):
        Strategy(np.ones(3), GridSpec(4))


def test_vwap_strategy() -> None:
    assert np.all(vwap_strategy(GridSpec(100)).rates == 0.1)
    s = vwap_strategy(GridSpec(4, T=2.0))
    assert np.allclose(s.rates, 0.05)
    assert s.is_feasible()


def test_gss_constant_and_strategy() -> None:
    assert gss_constant(0.5, 0.1, 1.0) == pytest.approx(0.0590, abs=1e-4)
    grid = GridSpec(100)
    s = gss_strategy(0.5, grid)
    assert s.volume == pytest.approx(0.1, rel=1e-12)
    assert np.allclose(s.rates, s.rates[::-1])
    assert s.rates[0] > s.rates[50]


@pytest.mark.parametrize("gamma", [0.45, 0.5])
@pytest.mark.parametrize("delta", [0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
def test_vwap_closed_form_matches_discrete_cost(gamma, delta) -> None:
    grid = GridSpec(100)
    k = kernel_matrices(gamma, grid)
    impact = PowerLaw(delta)
    v = vwap_strategy(grid).rates
    discrete = float(v @ k.A @ impact.value(v))
    assert discrete == pytest.approx(vwap_cost_closed_form(gamma, impact, grid), rel=1e-10)


def test_vwap_closed_form_values() -> None:
    grid = GridSpec(100)
    assert vwap_cost_closed_form(0.5, PowerLaw(0.5), grid) == pytest.approx(0.0422, abs=5e-5)
    assert vwap_cost_closed_form(0.45, PowerLaw(1.0), grid) == pytest.approx(0.0117, abs=5e-5)
    cc = ConcaveConvex(c=1.0, delta=0.55, d=1.0, V=1.0)
    assert vwap_cost_closed_form(0.45, cc, grid) == pytest.approx(0.04428, rel=1e-3)
    with pytest.raises(UnsupportedImpactError):
        vwap_cost_closed_form(0.5, PerturbedPowerLaw(0.5), grid)


def test_linear_optimum_solves_stationarity() -> None:
    k = kernel_matrices(0.5, GridSpec(20))
    s = linear_optimum(k)
    assert s.is_feasible(1e-12)
    assert np.allclose(k.G @ s.rates, linear_multiplier(k), rtol=1e-10)


def test_profile_frame_columns() -> None:
    df = vwap_strategy(GridSpec(5)).to_frame()
    assert list(df.columns) == ["i", "t_mid", "v_i", "volume_i"]
    assert df["volume_i"].sum() == pytest.approx(0.1)


@pytest.mark.parametrize("gamma", [0.45, 0.5])
@pytest.mark.parametrize("N", [2, 10, 50, 150])
def test_kernel_is_positive_definite(gamma, N) -> None:
    G = build_kernel_matrix(gamma, GridSpec(N))
    np.linalg.cholesky(G)
    assert np.linalg.eigvalsh(G).min() > 0
