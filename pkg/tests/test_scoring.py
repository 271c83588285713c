import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from dyadflow.errors import DomainError
from dyadflow.geometry import Dissimilarity, DissimilarityKind
from dyadflow.network import build_design, build_dyads
from dyadflow.sampler import PosteriorDraws
from dyadflow.scoring import (chain_summary, crps_gaussian,
                              effective_sample_size, score_model, split_rhat)
from dyadflow.weights import four_weight_models
from tests.test_network import make_table


def crps_quadrature(y, mu, sigma):
    """Independent oracle: integrate (F(u) - 1{u >= y})^2 du directly."""
    lo = min(y, mu - 12 * sigma) - 1.0
    hi = max(y, mu + 12 * sigma) + 1.0

    def below(u):
        return norm.cdf(u, mu, sigma) ** 2

    def above(u):
        return (norm.cdf(u, mu, sigma) - 1.0) ** 2

    def pts(a, b):
        inner = [mu + k * sigma for k in (-3, -1, 0, 1, 3)]
        return [x for x in inner if a < x < b] or None

    left, el = quad(below, lo, y, epsabs=1e-13, limit=800, points=pts(lo, y))
    right, er = quad(above, y, hi, epsabs=1e-13, limit=800, points=pts(y, hi))
    assert el + er < 5e-9   # QUADPACK's estimate is conservative; guard only
    return left + right


def test_crps_frozen_values():
    # frozen from the quadrature oracle
    assert crps_gaussian(0.0, 0.0, 1.0) == pytest.approx(0.2336949767, abs=1e-5)
    assert crps_gaussian(1.0, 0.0, 1.0) == pytest.approx(0.6024412683, abs=1e-5)


def test_crps_degenerate_forecast():
    assert crps_gaussian(3.0, 1.0, 0.0) == 2.0
    assert crps_gaussian(-1.0, -1.0, 0.0) == 0.0


def test_crps_negative_sigma_rejected():
    with pytest.raises(DomainError):
        crps_gaussian(0.0, 0.0, -0.5)


def test_crps_matches_quadrature_on_random_triples():
    rng = np.random.default_rng(0)
    for _ in range(25):
        y, mu = rng.normal(0, 2, size=2)
        sigma = rng.uniform(0.1, 3.0)
        assert abs(crps_gaussian(y, mu, sigma)
                   - crps_quadrature(y, mu, sigma)) < 1e-8


def test_crps_translation_invariance():
    rng = np.random.default_rng(1)
    for _ in range(20):
        y, mu, c = rng.normal(size=3)
        s = rng.uniform(0.1, 2.0)
        assert crps_gaussian(y + c, mu + c, s) == pytest.approx(
            crps_gaussian(y, mu, s), rel=1e-12)


def test_crps_positive_scaling():
    rng = np.random.default_rng(2)
    for _ in range(20):
        y, mu = rng.normal(size=2)
        s = rng.uniform(0.1, 2.0)
        a = rng.uniform(0.5, 4.0)
        assert crps_gaussian(a * y, a * mu, a * s) == pytest.approx(
            a * crps_gaussian(y, mu, s), rel=1e-10)


def test_crps_monotone_in_sigma_at_center():
    sigmas = np.linspace(0.0, 3.0, 40)
    vals = crps_gaussian(np.zeros_like(sigmas), np.zeros_like(sigmas), sigmas)
    assert np.all(np.diff(vals) > 0)
    assert vals[0] == 0.0


def fixture_draws(S, seed=0, q=2, with_effects=False, n=0, m=0):
    rng = np.random.default_rng(seed)
    return PosteriorDraws(
        beta=rng.normal(size=(S, 2)), sigma2_y=rng.uniform(0.2, 1.0, S),
        gamma=rng.uniform(0.1, 1.5, (S, q)) if q else None,
        eta=rng.normal(size=(S, m)) if with_effects else None,
        theta=rng.normal(size=(S, n)) if with_effects else None,
        phi=np.full(S, 10.0) if with_effects else None,
    )


def test_score_model_matches_naive_quadrature_loop():
    table = make_table(3, seed=3)
    dyads = build_dyads(table, Dissimilarity(DissimilarityKind.SIGNED_DIFFERENCE))
    design = build_design(table, dyads)
    spec = four_weight_models()["spatiotemporal"]
    draws = fixture_draws(2, seed=4)
    score = score_model(dyads, design, draws, spec)

    acc = np.zeros(dyads.dyad_count)
    for k in range(2):
        for r in range(dyads.dyad_count):
            mu = float(design.matrix[r] @ draws.beta[k])
            w = math.exp(-(draws.gamma[k, 0] * dyads.dt_scaled[r]
                           + draws.gamma[k, 1] * dyads.ds_scaled[r]))
            sd = math.sqrt(draws.sigma2_y[k] / w)
            acc[r] += crps_quadrature(float(dyads.ytilde[r]), mu, sd)
    naive = float(np.mean(acc / 2))
    assert score.crps == pytest.approx(naive, abs=1e-6)
    assert score.draws_used == 2


def test_perfect_sharp_predictions_score_near_zero():
    table = make_table(4, seed=5)
    dyads = build_dyads(table, Dissimilarity(DissimilarityKind.SIGNED_DIFFERENCE))
    design = build_design(table, dyads)
    spec = four_weight_models()["none"]
    # draws concentrated on the truth with vanishing variance
    beta_hat, *_ = np.linalg.lstsq(design.matrix, dyads.ytilde, rcond=None)
    dyads.ytilde = design.matrix @ beta_hat    # make predictions exact
    draws = PosteriorDraws(beta=np.tile(beta_hat, (5, 1)),
                           sigma2_y=np.full(5, 1e-12))
    score = score_model(dyads, design, draws, spec)
    assert score.crps < 1e-5


def test_heldout_subset_scoring():
    table = make_table(6, seed=6)
    dyads = build_dyads(table, Dissimilarity(DissimilarityKind.SIGNED_DIFFERENCE))
    design = build_design(table, dyads)
    spec = four_weight_models()["temporal"]
    draws = fixture_draws(4, seed=7)
    subset = np.array([0, 3, 7])
    full = score_model(dyads, design, draws, spec)
    part = score_model(dyads, design, draws, spec, subset=subset)
    assert len(part.per_dyad) == 3
    assert np.allclose(part.per_dyad, full.per_dyad[subset], atol=1e-12)


def test_plugin_mode_runs_and_differs():
    table = make_table(5, seed=8)
    dyads = build_dyads(table, Dissimilarity(DissimilarityKind.SIGNED_DIFFERENCE))
    design = build_design(table, dyads)
    spec = four_weight_models()["spatiotemporal"]
    draws = fixture_draws(20, seed=9)
    mixture = score_model(dyads, design, draws, spec, mode="mixture")
    plugin = score_model(dyads, design, draws, spec, mode="plugin")
    assert plugin.draws_used == 1
    assert mixture.crps != plugin.crps


def test_identical_chains_rhat_near_one():
    rng = np.random.default_rng(10)
    x = rng.normal(size=2000)
    assert split_rhat(np.stack([x, x])) == pytest.approx(1.0, abs=0.05)


def test_constant_chain_degenerate_summary():
    draws = PosteriorDraws(beta=np.full((50, 1), 2.5), sigma2_y=np.full(50, 1.0))
    rows = chain_summary(draws)
    beta_row = rows[0]
    assert beta_row["sd"] == 0.0
    assert beta_row["q2.5"] == beta_row["q97.5"] == 2.5
    assert beta_row["rhat"] == 1.0


def test_iid_ess_close_to_draw_count():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(1, 4000))
    ess = effective_sample_size(x)
    assert ess == pytest.approx(4000, rel=0.2)


def test_correlated_chain_has_reduced_ess():
    rng = np.random.default_rng(12)
    n = 4000
    x = np.empty(n)
    x[0] = 0.0
    for t in range(1, n):        # AR(1) with known ESS factor (1-r)/(1+r)
        x[t] = 0.9 * x[t - 1] + rng.normal()
    ess = effective_sample_size(x[None, :])
    assert ess < 0.15 * n


def test_summary_rows_cover_all_blocks():
    draws = fixture_draws(100, seed=13, with_effects=True, n=3, m=2)
    rows = chain_summary(draws)
    names = {r["parameter"] for r in rows}
    assert {"beta[0]", "beta[1]", "sigma2_y", "phi"} <= names or \
           {"sigma2_y", "phi"} <= names
    assert any(name.startswith("eta[") for name in names)
    assert any(name.startswith("theta[") for name in names)
    for r in rows:
        assert r["q2.5"] <= r["q50"] <= r["q97.5"]
