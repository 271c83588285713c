import math

import numpy as np
import pytest

from dyadflow.errors import DomainError
from dyadflow.geometry import Dissimilarity, DissimilarityKind
from dyadflow.network import build_design, build_dyads
from dyadflow.sampler import ParamState
from dyadflow.weights import (BasisFunction, WeightSpec, composite_weight,
                              four_weight_models, log_density,
                              power_basis_spec, total_log_likelihood)
from tests.test_network import make_table


def powered_normalized_density(y_grid, mu, sigma2, w):
    """Independent oracle: power the base Gaussian by w, renormalize by trapezoid."""
    base = np.exp(-0.5 * (y_grid - mu) ** 2 / sigma2) / np.sqrt(2 * np.pi * sigma2)
    powered = base ** w
    return powered / np.trapezoid(powered, y_grid)


def wide_grid(mu, sigma2, w, half_width=12.0, points=200_001):
    sd = np.sqrt(sigma2 / w)
    return np.linspace(mu - half_width * sd, mu + half_width * sd, points)


def test_weight_is_one_at_zero_lags():
    spec = four_weight_models()["spatiotemporal"]
    assert composite_weight(0.0, 0.0, spec, np.array([2.0, 3.0])) == 1.0


def test_weight_is_one_for_zero_gamma():
    spec = four_weight_models()["spatiotemporal"]
    rng = np.random.default_rng(0)
    lags = rng.uniform(0, 1, (10, 2))
    w = composite_weight(lags[:, 0], lags[:, 1], spec, np.zeros(2))
    assert np.all(w == 1.0)


def test_weight_closed_form_value():
    spec = four_weight_models()["spatiotemporal"]
    w = composite_weight(0.5, 0.5, spec, np.array([1.0, 1.0]))
    assert w == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_weight_negative_lag_rejected():
    spec = four_weight_models()["temporal"]
    with pytest.raises(DomainError):
        composite_weight(-0.1, 0.0, spec, np.array([1.0, 1.0]))


def test_weight_monotone_in_each_lag():
    spec = four_weight_models()["spatiotemporal"]
    gamma = np.array([1.5, 0.7])
    dts = np.linspace(0, 1, 20)
    w_dt = composite_weight(dts, np.full_like(dts, 0.3), spec, gamma)
    w_ds = composite_weight(np.full_like(dts, 0.3), dts, spec, gamma)
    assert np.all(np.diff(w_dt) <= 0) and np.all(np.diff(w_ds) <= 0)


def test_doubling_gamma_weakly_decreases_weights():
    spec = power_basis_spec(6)
    rng = np.random.default_rng(1)
    lags = rng.uniform(0, 1, 30)
    gamma = rng.uniform(0.1, 2.0, 6)
    w1 = composite_weight(lags, np.zeros_like(lags), spec, gamma)
    w2 = composite_weight(lags, np.zeros_like(lags), spec, 2 * gamma)
    assert np.all(w2 <= w1)


def test_power_basis_exponents():
    spec = power_basis_spec(6, 3.0, "dt")
    V = spec.basis_matrix(np.array([0.5]), np.array([0.0]))
    assert np.allclose(V[0], [0.5 ** (p / 3.0) for p in range(1, 7)])


def test_invalid_basis_rejected():
    with pytest.raises(DomainError):
        BasisFunction("dt", exponent=0.0)
    with pytest.raises(DomainError):
        BasisFunction("elevation")
    with pytest.raises(DomainError):
        WeightSpec(bases=(BasisFunction("dt"),), fixed_mask=(True, False))


def test_log_density_matches_unweighted_gaussian_at_w1():
    rng = np.random.default_rng(2)
    for _ in range(20):
        y, mu = rng.normal(size=2)
        s2 = rng.uniform(0.1, 3.0)
        expected = -0.5 * (math.log(2 * math.pi * s2) + (y - mu) ** 2 / s2)
        assert log_density(y, mu, s2, 1.0) == pytest.approx(expected, rel=1e-12)


def test_log_density_weight_folds_into_variance():
    rng = np.random.default_rng(3)
    for _ in range(30):
        y, mu = rng.normal(size=2)
        s2 = rng.uniform(0.1, 3.0)
        w = rng.uniform(0.05, 1.0)
        assert log_density(y, mu, s2, w) == log_density(y, mu, s2 / w, 1.0)


def test_log_density_rejects_bad_inputs():
    with pytest.raises(DomainError):
        log_density(0.0, 0.0, -1.0, 1.0)
    with pytest.raises(DomainError):
        log_density(0.0, 0.0, 1.0, 0.0)


def test_normalized_density_integrates_to_one():
    # the spec's fixed case plus random (sigma2, w) pairs
    grid = wide_grid(0.3, 0.7, 0.3)
    dens = np.exp(log_density(grid, 0.3, 0.7, 0.3))
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-6)
    rng = np.random.default_rng(4)
    for _ in range(5):
        mu = rng.normal()
        s2 = rng.uniform(0.2, 2.0)
        w = rng.uniform(0.1, 1.0)
        grid = wide_grid(mu, s2, w)
        dens = np.exp(log_density(grid, mu, s2, w))
        assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-6)


def test_closed_form_matches_powered_normalized_oracle():
    rng = np.random.default_rng(5)
    for _ in range(5):
        mu = rng.normal()
        s2 = rng.uniform(0.2, 2.0)
        w = rng.uniform(0.1, 1.0)
        grid = wide_grid(mu, s2, w, half_width=10.0, points=40_001)
        oracle = powered_normalized_density(grid, mu, s2, w)
        closed = np.exp(log_density(grid, mu, s2, w))
        assert np.max(np.abs(closed - oracle)) < 1e-6


def test_family_closure_first_two_moments():
    # normalized weighted Gaussian stays Gaussian: quadrature moments = (mu, s2/w)
    rng = np.random.default_rng(6)
    for _ in range(5):
        mu = rng.normal()
        s2 = rng.uniform(0.2, 2.0)
        w = rng.uniform(0.1, 1.0)
        grid = wide_grid(mu, s2, w)
        dens = np.exp(log_density(grid, mu, s2, w))
        mean = np.trapezoid(grid * dens, grid)
        var = np.trapezoid((grid - mean) ** 2 * dens, grid)
        assert mean == pytest.approx(mu, abs=1e-6)
        assert var == pytest.approx(s2 / w, abs=1e-6)


def _state(beta, sigma2_y=1.0, gamma=None, q=2):
    return ParamState(beta=np.asarray(beta, float), eta=None, eta_star=None,
                      theta=None, sigma2_y=sigma2_y, sigma2_eta=1.0,
                      sigma2_theta=1.0, phi=0.0,
                      gamma=np.zeros(q) if gamma is None else np.asarray(gamma, float))


def test_total_log_likelihood_all_zero_parameters():
    table = make_table(6, seed=7)
    dyads = build_dyads(table, Dissimilarity(DissimilarityKind.SIGNED_DIFFERENCE))
    design = build_design(table, dyads)
    spec = four_weight_models()["none"]
    state = _state([0.0, 0.0])
    _, total = total_log_likelihood(dyads, design, state, spec)
    expected = sum(-0.5 * math.log(2 * math.pi) - y * y / 2.0 for y in dyads.ytilde)
    assert total == pytest.approx(expected, rel=1e-12)


def test_total_log_likelihood_matches_naive_loop():
    table = make_table(8, seed=8)
    dyads = build_dyads(table, Dissimilarity(DissimilarityKind.SIGNED_DIFFERENCE))
    design = build_design(table, dyads)
    spec = four_weight_models()["spatiotemporal"]
    rng = np.random.default_rng(9)
    state = _state(rng.normal(size=2), sigma2_y=0.8, gamma=[0.5, 1.2])

    per_dyad, total = total_log_likelihood(dyads, design, state, spec)

    # independent per-dyad loop with a separately coded Gaussian pdf
    naive = 0.0
    for r in range(dyads.dyad_count):
        mu = float(design.matrix[r] @ state.beta)
        w = math.exp(-(state.gamma[0] * dyads.dt_scaled[r] + state.gamma[1] * dyads.ds_scaled[r]))
        var = state.sigma2_y / w
        dens = math.exp(-0.5 * (dyads.ytilde[r] - mu) ** 2 / var) / math.sqrt(2 * math.pi * var)
        naive += math.log(dens)
        assert per_dyad[r] == pytest.approx(math.log(dens), abs=1e-10)
    assert total == pytest.approx(naive, abs=1e-10)
