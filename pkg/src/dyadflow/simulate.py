"""Synthetic-data generators and the AR(1) two-scenario experiment.

The AR(1) experiment builds a 15-node fully-connected network over
one-dimensional time-as-space, fits it once without composite weights and
once with six power bases on the temporal lag, and reports potential bands,
the posterior-mean weight matrix, and coverage against the recorded truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError
from .geometry import CoordinateMode, Dissimilarity, DissimilarityKind, pairwise_distances
from .gp import PhiSupport, build_cache
from .network import DyadSet, build_design, build_dyads
from .nodetable import NodeTable
from .sampler import (ParamState, PosteriorDraws, PriorConfig, SamplerConfig,
                      run_chain)
from .scoring import score_model
from .surface import evaluate_potential_path
from .weights import WeightSpec, power_basis_spec


@dataclass
class Ar1Config:
    """Autoregressive generator: y_t = y_{t-1} + (x_t - x_{t-1})'beta + noise."""

    T: int = 15
    beta: tuple[float, float] = (1.3, 0.8)
    sigma2_0: float = 0.01
    innovation_sd: float = 0.5
    y0: float = 0.0
    x0: tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.T < 2:
            raise DomainError("T must be >= 2")
        if self.sigma2_0 < 0:
            raise DomainError("sigma2_0 must be >= 0")


def generate_ar1(config: Ar1Config, rng: np.random.Generator | None = None) -> NodeTable:
    """Node table over t = 1..T with time as the sole (planar) coordinate.

    The true potential x_t' beta is recorded on the table for coverage
    checks downstream.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    beta = np.asarray(config.beta, dtype=float)
    x = np.asarray(config.x0, dtype=float)
    y = config.y0
    rows_x, rows_y = [], []
    for _ in range(config.T):
        step = rng.normal(0.0, config.innovation_sd, size=len(beta))
        x_new = x + step
        y = rng.normal(y + (x_new - x) @ beta, np.sqrt(config.sigma2_0))
        x = x_new
        rows_x.append(x.copy())
        rows_y.append(y)
    X = np.array(rows_x)
    t = np.arange(1, config.T + 1, dtype=float)
    table = NodeTable(
        ids=np.arange(1, config.T + 1),
        coords=np.column_stack([t, np.zeros(config.T)]),
        times=t,
        covariates=X,
        covariate_names=[f"x_{k + 1}" for k in range(len(beta))],
        responses=np.array(rows_y),
        mode=CoordinateMode.PLANAR,
    )
    table.true_potential = X @ beta
    return table


@dataclass
class AppendixASeedResult:
    seed: int
    covered_plain: int          # time points inside the scenario-1 band
    covered_weighted: int       # time points inside the scenario-2 band
    inflation_dt1: float        # posterior mean of 1/w at raw dt = 1
    inflation_dt3: float
    band_plain: dict[str, np.ndarray]
    band_weighted: dict[str, np.ndarray]
    truth: np.ndarray
    crps_plain: float
    crps_weighted: float


@dataclass
class AppendixAReport:
    results: list[AppendixASeedResult]
    weight_matrix: np.ndarray       # posterior-mean w per (t_r, t_c), first seed
    times: np.ndarray
    iterations: int

    def coverage_counts(self) -> tuple[list[int], list[int]]:
        return ([r.covered_plain for r in self.results],
                [r.covered_weighted for r in self.results])


def _fit_ar1(table: NodeTable, spec: WeightSpec, seed: int, iterations: int):
    dyads = build_dyads(table, Dissimilarity(DissimilarityKind.SIGNED_DIFFERENCE))
    design = build_design(table, dyads)
    priors = PriorConfig(gamma_gamma=(10.0, 2.0))
    config = SamplerConfig(
        iterations=iterations, seed=seed,
        spatial_effects=False, node_effects=False, constraint=False,
    )
    draws = run_chain(dyads, design, spec, priors, config)
    return dyads, design, draws


def posterior_weight_matrix(draws: PosteriorDraws, spec: WeightSpec,
                            times: np.ndarray, dt_denominator: float) -> np.ndarray:
    """Posterior-mean composite weight per time pair; the dt = 0 diagonal is 0."""
    T = len(times)
    W = np.zeros((T, T))
    dts = np.abs(times[:, None] - times[None, :]) / dt_denominator
    for r in range(T):
        for c in range(T):
            if r == c:
                continue
            v = spec.basis_matrix(np.array([dts[r, c]]), np.array([0.0]))[0]
            if draws.gamma is None:
                W[r, c] = 1.0
            else:
                W[r, c] = float(np.mean(np.exp(-(draws.gamma @ v))))
    return W


def _inflation_at(draws: PosteriorDraws, spec: WeightSpec, dt_scaled: float) -> float:
    """Posterior mean of the variance inflation 1/w at one scaled lag."""
    if draws.gamma is None:
        return 1.0
    v = spec.basis_matrix(np.array([dt_scaled]), np.array([0.0]))[0]
    return float(np.mean(np.exp(draws.gamma @ v)))


def run_appendixA(seeds, iterations: int = 50_000,
                  out_dir: str | Path | None = None) -> AppendixAReport:
    """Fit both scenarios for each seed and collect coverage and weights."""
    seeds = list(seeds)
    spec_plain = WeightSpec()
    spec_weighted = power_basis_spec(6, 3.0, "dt")
    results = []
    weight_matrix = None
    times = None
    first_artifacts = None
    for seed in seeds:
        table = generate_ar1(Ar1Config(seed=seed))
        truth = table.true_potential
        dyads1, design1, draws1 = _fit_ar1(table, spec_plain, seed, iterations)
        dyads2, design2, draws2 = _fit_ar1(table, spec_weighted, seed, iterations)

        band1 = evaluate_potential_path(draws1, table.covariates)
        band2 = evaluate_potential_path(draws2, table.covariates)
        cov1 = int(np.sum((band1["lower"] <= truth) & (truth <= band1["upper"])))
        cov2 = int(np.sum((band2["lower"] <= truth) & (truth <= band2["upper"])))

        max_dt = dyads2.scale_denominators[1]
        score1 = score_model(dyads1, design1, draws1, spec_plain)
        score2 = score_model(dyads2, design2, draws2, spec_weighted)
        res = AppendixASeedResult(
            seed=seed, covered_plain=cov1, covered_weighted=cov2,
            inflation_dt1=_inflation_at(draws2, spec_weighted, 1.0 / max_dt),
            inflation_dt3=_inflation_at(draws2, spec_weighted, 3.0 / max_dt),
            band_plain=band1, band_weighted=band2, truth=truth,
            crps_plain=score1.crps, crps_weighted=score2.crps,
        )
        results.append(res)
        if weight_matrix is None:
            times = table.times
            weight_matrix = posterior_weight_matrix(draws2, spec_weighted, times, max_dt)
            first_artifacts = (table, dyads2, draws1, draws2, score1, score2)

    report = AppendixAReport(results=results, weight_matrix=weight_matrix,
                             times=times, iterations=iterations)
    if out_dir is not None:
        _write_appendixA_artifacts(Path(out_dir), report, first_artifacts)
    return report


def _write_appendixA_artifacts(out_dir: Path, report: AppendixAReport, first) -> None:
    from . import artifacts

    table, dyads, draws1, draws2, score1, score2 = first
    sim = out_dir / "sim"
    sim.mkdir(parents=True, exist_ok=True)
    r0 = report.results[0]

    artifacts.write_csv(sim / "truth.csv", ["t", "true_potential"],
                        [[repr(float(t)), repr(float(v))]
                         for t, v in zip(report.times, r0.truth)])
    rows = []
    for k, t in enumerate(report.times):
        rows.append([repr(float(t)), repr(float(r0.truth[k]))]
                    + [repr(float(r0.band_plain[key][k])) for key in ("mean", "lower", "upper")]
                    + [repr(float(r0.band_weighted[key][k])) for key in ("mean", "lower", "upper")])
    artifacts.write_csv(
        sim / "potential_band.csv",
        ["t", "truth", "plain_mean", "plain_lower", "plain_upper",
         "weighted_mean", "weighted_lower", "weighted_upper"], rows)
    artifacts.write_csv(
        sim / "weight_matrix.csv",
        ["t"] + [f"t{int(t)}" for t in report.times],
        [[repr(float(t))] + [repr(float(v)) for v in row]
         for t, row in zip(report.times, report.weight_matrix)])
    artifacts.write_csv(
        sim / "coverage.csv",
        ["seed", "covered_plain", "covered_weighted", "inflation_dt1", "inflation_dt3"],
        [[r.seed, r.covered_plain, r.covered_weighted,
          repr(r.inflation_dt1), repr(r.inflation_dt3)] for r in report.results])
    dyads.to_csv(out_dir / "dyads.csv")
    artifacts.write_draws(out_dir, [draws2])
    artifacts.write_scores(out_dir / "scores.csv", [score1, score2])


def generate_full_model(n: int, p: int, truth: ParamState, spec: WeightSpec,
                        rng: np.random.Generator,
                        box: float = 100.0,
                        time_span: float = 1.0) -> tuple[NodeTable, DyadSet, dict]:
    """Simulate node data and dyadic outcomes from the full hierarchical model.

    Locations are uniform in a planar box, times uniform, covariates iid
    standard normal; eta comes from the exponential-decay GP at truth.phi,
    theta is iid, and each dyadic outcome is drawn from the normalized
    weighted Gaussian. Returns the table, the dyad set with generated
    outcomes, and a ground-truth record for calibration tests.
    """
    if n < 3:
        raise DomainError("need n >= 3")
    coords = rng.uniform(0.0, box, size=(n, 2))
    times = rng.uniform(0.0, time_span, size=n)
    X = rng.standard_normal((n, p))
    table = NodeTable(
        ids=np.arange(1, n + 1),
        coords=coords, times=times, covariates=X,
        covariate_names=[f"x_{k + 1}" for k in range(p)],
        responses=np.zeros(n),
        mode=CoordinateMode.PLANAR,
    )
    dyads = build_dyads(table, Dissimilarity(DissimilarityKind.SIGNED_DIFFERENCE))

    eta = np.zeros(dyads.m)
    if truth.sigma2_eta > 0:
        dist = pairwise_distances(dyads.location_coords, CoordinateMode.PLANAR)
        support = PhiSupport((truth.phi,)) if truth.phi > 0 else PhiSupport((0.0,))
        entry = build_cache(dist, support).entry(truth.phi)
        eta = np.sqrt(truth.sigma2_eta) * (entry.chol @ rng.standard_normal(dyads.m))
    theta = (np.sqrt(truth.sigma2_theta) * rng.standard_normal(n)
             if truth.sigma2_theta > 0 else np.zeros(n))

    Xt = X[dyads.j_idx] - X[dyads.i_idx]
    mu = Xt @ truth.beta + (eta[dyads.loc_j] - eta[dyads.loc_i]) \
        + theta[dyads.i_idx] + theta[dyads.j_idx]
    V = spec.basis_matrix(dyads.dt_scaled, dyads.ds_scaled)
    w = np.exp(-(V @ truth.gamma)) if spec.q else np.ones(dyads.dyad_count)
    dyads.ytilde = rng.normal(mu, np.sqrt(truth.sigma2_y / w))

    record = {
        "beta": np.asarray(truth.beta, dtype=float), "eta": eta, "theta": theta,
        "sigma2_y": truth.sigma2_y, "sigma2_eta": truth.sigma2_eta,
        "sigma2_theta": truth.sigma2_theta, "phi": truth.phi,
        "gamma": np.asarray(truth.gamma, dtype=float), "w": w, "mu": mu,
    }
    return table, dyads, record
