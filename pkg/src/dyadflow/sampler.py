"""Posterior sampler for the hierarchical composite dyadic model.

One sweep updates, in order: eta (raw), the kriging constraint giving
eta*, beta, the confounding-adjusted beta*, theta, the three variances,
phi over its discrete support, and gamma by adaptive truncated-normal
Metropolis-Hastings. The constrained eta* enters every other conditional
and all stored output; beta* is the reported coefficient draw while the
unadjusted beta propagates through the chain unless configured otherwise.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, log_ndtr, ndtr, ndtri

from .errors import DomainError, NumericalError
from .gp import CovarianceCache
from .network import DesignMatrix, DyadSet
from .weights import WeightSpec, deterministic_sum, weights_from_basis

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class ParamState:
    """One MCMC state. ``eta_star`` is the constrained spatial effect."""

    beta: np.ndarray
    eta: np.ndarray | None
    eta_star: np.ndarray | None
    theta: np.ndarray | None
    sigma2_y: float
    sigma2_eta: float
    sigma2_theta: float
    phi: float
    gamma: np.ndarray


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the hierarchical model (Gamma priors are shape/rate)."""

    beta_variance: float = 1e6
    sigma2_y_ig: tuple[float, float] = (0.01, 0.01)
    sigma2_eta_ig: tuple[float, float] = (0.01, 0.01)
    sigma2_theta_ig: tuple[float, float] = (0.01, 0.01)
    phi_gamma: tuple[float, float] = (400.0, 250.0)
    gamma_gamma: tuple[float, float] = (2.0, 2.0)

    def __post_init__(self):
        vals = [self.beta_variance, *self.sigma2_y_ig, *self.sigma2_eta_ig,
                *self.sigma2_theta_ig, *self.phi_gamma, *self.gamma_gamma]
        if any(v <= 0 for v in vals):
            raise DomainError("all prior hyperparameters must be positive")


@dataclass
class SamplerConfig:
    iterations: int = 10_000
    burn_in: int | None = None          # default: iterations // 2
    thinning: int = 10
    seed: int = 0
    chains: int = 1
    adaptation_window: int = 50
    target_acceptance: float = 0.44
    constraint: bool = True
    deterministic_reduction: bool = True
    spatial_effects: bool = True
    node_effects: bool = True
    propagate_adjusted_beta: bool = False
    initial_proposal_scale: float = 0.25
    store_fitted_means: bool = False

    def __post_init__(self):
        if self.burn_in is None:
            self.burn_in = self.iterations // 2
        if not 0 <= self.burn_in < self.iterations:
            raise DomainError("burn-in must satisfy 0 <= burn_in < iterations")
        if self.thinning < 1:
            raise DomainError("thinning must be >= 1")
        if not 0.0 < self.target_acceptance < 1.0:
            raise DomainError("target acceptance must be in (0, 1)")


class SamplerData:
    """Precomputed incidence indices, basis matrix, and constraint directions.

    The eta incidence K (+1 at loc(j), -1 at loc(i)) and node incidence M
    (+1 at both nodes) are kept as index arrays; weighted Gram matrices are
    assembled by bincount scatter so a sweep costs O(N) plus the dense
    factorizations. K'K is a graph Laplacian of location co-occurrence and
    is always rank-deficient (constant null vector), so the constraint
    matrix C = (K'K)^+ K'X uses the pseudo-inverse by construction.
    """

    def __init__(self, dyads: DyadSet, design: DesignMatrix, weight_spec: WeightSpec):
        self.dyads = dyads
        self.design = design
        self.weight_spec = weight_spec
        self.y = dyads.ytilde
        self.X = design.matrix
        self.N = dyads.dyad_count
        self.n = dyads.n
        self.m = dyads.m
        self.p = design.p
        self.i_idx = dyads.i_idx
        self.j_idx = dyads.j_idx
        self.loc_i = dyads.loc_i
        self.loc_j = dyads.loc_j
        self.V = weight_spec.basis_matrix(dyads.dt_scaled, dyads.ds_scaled)
        self.free = weight_spec.free
        self.q_free = int(self.free.sum())

        off = self.loc_i != self.loc_j
        a, b = self.loc_i[off], self.loc_j[off]
        self._kwk_idx = np.concatenate([a * self.m + a, b * self.m + b,
                                        a * self.m + b, b * self.m + a])
        self._kwk_sign = np.concatenate([np.ones(a.size), np.ones(a.size),
                                         -np.ones(a.size), -np.ones(a.size)])
        self._kwk_off = off
        i, j = self.i_idx, self.j_idx
        self._mwm_idx = np.concatenate([i * self.n + i, j * self.n + j,
                                        i * self.n + j, j * self.n + i])

        self.C = self._constraint_matrix() if self.p else np.zeros((self.m, 0))
        if self.p:
            CtC = self.C.T @ self.C
            try:
                self.CtC_inv = np.linalg.inv(CtC)
            except np.linalg.LinAlgError:
                warnings.warn("C'C rank-deficient; using pseudo-inverse", stacklevel=2)
                self.CtC_inv = np.linalg.pinv(CtC)
        else:
            self.CtC_inv = np.zeros((0, 0))

    def _constraint_matrix(self) -> np.ndarray:
        KtK = np.bincount(self._kwk_idx, weights=self._kwk_sign,
                          minlength=self.m * self.m).reshape(self.m, self.m)
        KtX = self.K_t(self.X)
        rank = np.linalg.matrix_rank(KtK, tol=1e-10 * max(1.0, float(np.abs(KtK).max())))
        if rank < self.m - 1:
            warnings.warn(
                "K'K rank below m-1 (co-located nodes); constraint uses pseudo-inverse",
                stacklevel=3,
            )
        # rcond well above FP dust: the Laplacian null must be cut, never inverted
        return np.linalg.pinv(KtK, hermitian=True, rcond=1e-10) @ KtX

    # -- incidence products ------------------------------------------------
    def weights(self, gamma: np.ndarray) -> np.ndarray:
        return weights_from_basis(self.V, gamma)

    def K_apply(self, eta: np.ndarray) -> np.ndarray:
        return eta[self.loc_j] - eta[self.loc_i]

    def K_t(self, v: np.ndarray) -> np.ndarray:
        if v.ndim == 1:
            return (np.bincount(self.loc_j, weights=v, minlength=self.m)
                    - np.bincount(self.loc_i, weights=v, minlength=self.m))
        return np.column_stack([self.K_t(v[:, k]) for k in range(v.shape[1])])

    def M_apply(self, theta: np.ndarray) -> np.ndarray:
        return theta[self.i_idx] + theta[self.j_idx]

    def M_t(self, v: np.ndarray) -> np.ndarray:
        return (np.bincount(self.i_idx, weights=v, minlength=self.n)
                + np.bincount(self.j_idx, weights=v, minlength=self.n))

    def KWK(self, w: np.ndarray) -> np.ndarray:
        wo = w[self._kwk_off]
        vals = self._kwk_sign * np.concatenate([wo, wo, wo, wo])
        return np.bincount(self._kwk_idx, weights=vals,
                           minlength=self.m * self.m).reshape(self.m, self.m)

    def MWM(self, w: np.ndarray) -> np.ndarray:
        vals = np.concatenate([w, w, w, w])
        return np.bincount(self._mwm_idx, weights=vals,
                           minlength=self.n * self.n).reshape(self.n, self.n)

    def mean(self, beta, eta_star, theta) -> np.ndarray:
        mu = self.X @ beta if self.p else np.zeros(self.N)
        if eta_star is not None:
            mu = mu + self.K_apply(eta_star)
        if theta is not None:
            mu = mu + self.M_apply(theta)
        return mu


# -- linear-algebra helpers ---------------------------------------------------

def _chol(A: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NumericalError(f"factorization of {what} failed") from None


def _draw_from_precision(mean: np.ndarray, L: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
    # cov = (L L')^{-1}; solving L' x = z gives cov(x) = (L L')^{-1}
    z = rng.standard_normal(mean.shape[0])
    return mean + np.linalg.solve(L.T, z)


def _draw_from_covariance(mean: np.ndarray, cov: np.ndarray,
                          rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(mean.shape[0])
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh((cov + cov.T) / 2.0)
        L = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return mean + L @ z


def gamma_logpdf(x: float, shape: float, rate: float) -> float:
    """Log Gamma(shape, rate) density; -inf at x <= 0 (shape > 1)."""
    if x <= 0.0:
        if x == 0.0 and shape == 1.0:
            return math.log(rate)
        if x == 0.0 and shape < 1.0:
            raise NumericalError("gamma prior density diverges at 0 for shape < 1")
        return -math.inf
    return shape * math.log(rate) - gammaln(shape) + (shape - 1.0) * math.log(x) - rate * x


# -- full conditionals ---------------------------------------------------------

def beta_conditional(data: SamplerData, w, eta_star, theta, sigma2_y,
                     priors: PriorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the conjugate beta full conditional."""
    r = data.y.copy()
    if eta_star is not None:
        r -= data.K_apply(eta_star)
    if theta is not None:
        r -= data.M_apply(theta)
    Xw = data.X * w[:, None]
    A = Xw.T @ data.X / sigma2_y + np.eye(data.p) / priors.beta_variance
    b = Xw.T @ r / sigma2_y
    L = _chol(A, "beta precision")
    mean = np.linalg.solve(L.T, np.linalg.solve(L, b))
    cov = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(data.p)))
    return mean, cov


def update_beta(data: SamplerData, w, eta_star, theta, sigma2_y,
                priors: PriorConfig, rng: np.random.Generator) -> np.ndarray:
    mean, cov = beta_conditional(data, w, eta_star, theta, sigma2_y, priors)
    return _draw_from_covariance(mean, cov, rng)


def eta_conditional(data: SamplerData, w, beta, theta, sigma2_y, sigma2_eta,
                    cache_entry) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mean, Sigma_eta, chol of precision) for the spatial-effect conditional."""
    r = data.y - (data.X @ beta if data.p else 0.0)
    if theta is not None:
        r = r - data.M_apply(theta)
    A = data.KWK(w) / sigma2_y + cache_entry.inverse / sigma2_eta
    L = _chol(A, "eta precision")
    b = data.K_t(w * r) / sigma2_y
    mean = np.linalg.solve(L.T, np.linalg.solve(L, b))
    Sigma = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(data.m)))
    return mean, Sigma, L


def update_eta(data: SamplerData, w, beta, theta, sigma2_y, sigma2_eta,
               cache_entry, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Raw eta draw and its full-conditional covariance Sigma_eta."""
    mean, Sigma, L = eta_conditional(data, w, beta, theta, sigma2_y, sigma2_eta, cache_entry)
    return _draw_from_precision(mean, L, rng), Sigma


def constraint_matrix(K: np.ndarray, X: np.ndarray) -> np.ndarray:
    """C = (K'K)^+ K'X; pseudo-inverse because K'K is always singular."""
    return np.linalg.pinv(K.T @ K, hermitian=True, rcond=1e-10) @ (K.T @ X)


def apply_kriging_constraint(eta: np.ndarray, Sigma_eta: np.ndarray,
                             C: np.ndarray) -> np.ndarray:
    """Project eta so that C' eta* = 0: eta - Sigma C (C' Sigma C)^+ C' eta."""
    if C.shape[1] == 0:
        return eta.copy()
    SC = Sigma_eta @ C
    E = C.T @ SC
    E = (E + E.T) / 2.0
    Cte = C.T @ eta
    try:
        t = np.linalg.solve(E, Cte)
    except np.linalg.LinAlgError:
        warnings.warn("C'Sigma C rank-deficient; using pseudo-inverse", stacklevel=2)
        t = np.linalg.pinv(E, hermitian=True) @ Cte
    return eta - SC @ t


def adjust_beta(beta: np.ndarray, Sigma_eta: np.ndarray, C: np.ndarray,
                CtC_inv: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Widen beta for spatial confounding: N(beta, (C'C)^-1 C'Sigma C (C'C)^-1)."""
    if C.shape[1] == 0:
        return beta.copy()
    E = C.T @ Sigma_eta @ C
    cov = CtC_inv @ E @ CtC_inv
    return _draw_from_covariance(beta, (cov + cov.T) / 2.0, rng)


def theta_conditional(data: SamplerData, w, beta, eta_star, sigma2_y,
                      sigma2_theta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = data.y - (data.X @ beta if data.p else 0.0)
    if eta_star is not None:
        r = r - data.K_apply(eta_star)
    A = data.MWM(w) / sigma2_y + np.eye(data.n) / sigma2_theta
    L = _chol(A, "theta precision")
    b = data.M_t(w * r) / sigma2_y
    mean = np.linalg.solve(L.T, np.linalg.solve(L, b))
    cov = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(data.n)))
    return mean, cov, L


def update_theta(data: SamplerData, w, beta, eta_star, sigma2_y, sigma2_theta,
                 rng: np.random.Generator) -> np.ndarray:
    mean, _, L = theta_conditional(data, w, beta, eta_star, sigma2_y, sigma2_theta)
    return _draw_from_precision(mean, L, rng)


def _invgamma_draw(shape: float, scale: float, rng: np.random.Generator) -> float:
    return float(scale / rng.gamma(shape))


def variance_conditionals(data: SamplerData, w, resid, eta_star, theta,
                          cache_entry, priors: PriorConfig,
                          deterministic: bool = True) -> dict[str, tuple[float, float]]:
    """Posterior (shape, scale) of each inverse-gamma variance conditional."""
    a, b = priors.sigma2_y_ig
    wsq = w * resid ** 2
    s = deterministic_sum(wsq) if deterministic else float(np.sum(wsq))
    out = {"sigma2_y": (a + data.N / 2.0, b + s / 2.0)}
    if eta_star is not None:
        ae, be = priors.sigma2_eta_ig
        quad = float(eta_star @ cache_entry.inverse @ eta_star)
        out["sigma2_eta"] = (ae + data.m / 2.0, be + quad / 2.0)
    if theta is not None:
        at, bt = priors.sigma2_theta_ig
        out["sigma2_theta"] = (at + data.n / 2.0, bt + float(theta @ theta) / 2.0)
    return out


def update_variances(data: SamplerData, w, resid, eta_star, theta, cache_entry,
                     priors: PriorConfig, rng: np.random.Generator,
                     deterministic: bool = True) -> dict[str, float]:
    params = variance_conditionals(data, w, resid, eta_star, theta, cache_entry,
                                   priors, deterministic)
    return {name: _invgamma_draw(sh, sc, rng) for name, (sh, sc) in params.items()}


def phi_log_masses(eta_star: np.ndarray, sigma2_eta: float, cache: CovarianceCache,
                   priors: PriorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Normalized log posterior masses over the discrete phi support."""
    a, b = priors.phi_gamma
    phis = np.array(list(cache.support.values))
    logs = np.empty(len(phis))
    for k, phi in enumerate(phis):
        e = cache.entry(phi)
        quad = float(eta_star @ e.inverse @ eta_star)
        logs[k] = -0.5 * e.log_det - quad / (2.0 * sigma2_eta) + gamma_logpdf(float(phi), a, b)
    top = np.max(logs)
    if not np.isfinite(top):
        raise NumericalError(
            f"all phi posterior masses underflowed (log range {np.min(logs):g}..{top:g})"
        )
    probs = np.exp(logs - top)
    with np.errstate(divide="ignore"):
        logs = np.log(probs / probs.sum())
    return phis, logs


def update_phi(eta_star, sigma2_eta, cache: CovarianceCache, priors: PriorConfig,
               rng: np.random.Generator) -> float:
    phis, log_probs = phi_log_masses(eta_star, sigma2_eta, cache, priors)
    u = rng.uniform()
    cum = np.cumsum(np.exp(log_probs))
    return float(phis[int(np.searchsorted(cum, u))])


def gamma_log_target(gamma: np.ndarray, data: SamplerData, resid: np.ndarray,
                     sigma2_y: float, priors: PriorConfig,
                     deterministic: bool = True) -> float:
    """Log likelihood (up to gamma-free terms) plus log prior of free gammas."""
    w = data.weights(gamma)
    terms = 0.5 * np.log(w) - w * resid ** 2 / (2.0 * sigma2_y)
    total = deterministic_sum(terms) if deterministic else float(np.sum(terms))
    a, b = priors.gamma_gamma
    for k in range(data.weight_spec.q):
        if data.free[k]:
            total += gamma_logpdf(float(gamma[k]), a, b)
    return total


def update_gamma(gamma: np.ndarray, data: SamplerData, resid: np.ndarray,
                 sigma2_y: float, priors: PriorConfig, scale: float,
                 rng: np.random.Generator,
                 deterministic: bool = True) -> tuple[np.ndarray, bool]:
    """Joint truncated-normal random-walk MH step on the free coordinates.

    The acceptance ratio includes the truncation-normalizer asymmetry
    Phi(gamma/s) / Phi(gamma'/s) per coordinate.
    """
    free = np.flatnonzero(data.free)
    if free.size == 0:
        return gamma.copy(), False
    cur = gamma[free]
    u = rng.uniform(size=free.size)
    lo = ndtr(-cur / scale)
    prop = cur + scale * ndtri(lo + u * (1.0 - lo))
    proposal = gamma.copy()
    proposal[free] = prop

    log_alpha = (gamma_log_target(proposal, data, resid, sigma2_y, priors, deterministic)
                 - gamma_log_target(gamma, data, resid, sigma2_y, priors, deterministic)
                 + float(np.sum(log_ndtr(cur / scale) - log_ndtr(prop / scale))))
    accept = math.log(rng.uniform()) < log_alpha if log_alpha < 0 else True
    return (proposal, True) if accept else (gamma.copy(), False)


# -- chain runner --------------------------------------------------------------

@dataclass
class PosteriorDraws:
    """Thinned post-burn-in draws of one chain plus run metadata."""

    beta: np.ndarray
    sigma2_y: np.ndarray
    gamma: np.ndarray | None = None
    eta: np.ndarray | None = None
    theta: np.ndarray | None = None
    sigma2_eta: np.ndarray | None = None
    sigma2_theta: np.ndarray | None = None
    phi: np.ndarray | None = None
    fitted_means: np.ndarray | None = None
    beta_names: list[str] = field(default_factory=list)
    gamma_labels: list[str] = field(default_factory=list)
    acceptance_rate: float = float("nan")
    proposal_scale: float = float("nan")
    wall_seconds: float = 0.0
    sweeps_per_second: float = 0.0
    seed: int = 0

    @property
    def draw_count(self) -> int:
        return self.beta.shape[0]

    def blocks(self) -> dict[str, np.ndarray]:
        out = {"beta": self.beta, "sigma2_y": self.sigma2_y}
        for name in ("gamma", "eta", "theta", "sigma2_eta", "sigma2_theta", "phi"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out


def initial_state(data: SamplerData, priors: PriorConfig, config: SamplerConfig,
                  cache: CovarianceCache | None) -> ParamState:
    """Neutral start: zero effects, unit variances, median phi, prior-mean gamma."""
    q = data.weight_spec.q
    gamma0 = np.zeros(q)
    a, b = priors.gamma_gamma
    gamma0[data.free] = a / b
    spatial = config.spatial_effects
    return ParamState(
        beta=np.zeros(data.p),
        eta=np.zeros(data.m) if spatial else None,
        eta_star=np.zeros(data.m) if spatial else None,
        theta=np.zeros(data.n) if config.node_effects else None,
        sigma2_y=1.0, sigma2_eta=1.0, sigma2_theta=1.0,
        phi=cache.support.median if spatial and cache is not None else 0.0,
        gamma=gamma0,
    )


def run_chain(dyads: DyadSet, design: DesignMatrix, weight_spec: WeightSpec,
              priors: PriorConfig, config: SamplerConfig,
              cache: CovarianceCache | None = None,
              rng: np.random.Generator | None = None) -> PosteriorDraws:
    """Run one chain; fully reproducible given the seed."""
    data = SamplerData(dyads, design, weight_spec)
    if config.spatial_effects and cache is None:
        raise DomainError("spatial effects enabled but no covariance cache supplied")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    state = initial_state(data, priors, config, cache)
    det = config.deterministic_reduction

    kept = 1 + (config.iterations - config.burn_in - 1) // config.thinning
    store = {
        "beta": np.empty((kept, data.p)),
        "sigma2_y": np.empty(kept),
    }
    if data.q_free:
        store["gamma"] = np.empty((kept, data.weight_spec.q))
    if config.spatial_effects:
        store["eta"] = np.empty((kept, data.m))
        store["sigma2_eta"] = np.empty(kept)
        store["phi"] = np.empty(kept)
    if config.node_effects:
        store["theta"] = np.empty((kept, data.n))
        store["sigma2_theta"] = np.empty(kept)
    fitted = np.empty((kept, data.N)) if config.store_fitted_means else None

    scale = config.initial_proposal_scale
    accepted_window = 0
    window_count = 0
    batch_number = 0
    accepted_post = 0
    attempts_post = 0
    slot = 0

    t0 = time.perf_counter()
    for sweep in range(1, config.iterations + 1):
        w = data.weights(state.gamma)
        entry = cache.entry(state.phi) if config.spatial_effects else None

        if config.spatial_effects:
            eta, Sigma_eta = update_eta(
                data, w, state.beta, state.theta, state.sigma2_y,
                state.sigma2_eta, entry, rng)
            state.eta = eta
            state.eta_star = (apply_kriging_constraint(eta, Sigma_eta, data.C)
                              if config.constraint else eta)
        else:
            Sigma_eta = None

        beta = update_beta(data, w, state.eta_star, state.theta,
                           state.sigma2_y, priors, rng)
        if config.constraint and config.spatial_effects and data.p:
            beta_rep = adjust_beta(beta, Sigma_eta, data.C, data.CtC_inv, rng)
        else:
            beta_rep = beta
        state.beta = beta_rep if config.propagate_adjusted_beta else beta

        if config.node_effects:
            state.theta = update_theta(data, w, state.beta, state.eta_star,
                                       state.sigma2_y, state.sigma2_theta, rng)

        resid = data.y - data.mean(state.beta, state.eta_star, state.theta)
        drawn = update_variances(data, w, resid, state.eta_star, state.theta,
                                 entry, priors, rng, deterministic=det)
        state.sigma2_y = drawn["sigma2_y"]
        state.sigma2_eta = drawn.get("sigma2_eta", state.sigma2_eta)
        state.sigma2_theta = drawn.get("sigma2_theta", state.sigma2_theta)

        if config.spatial_effects:
            state.phi = update_phi(state.eta_star, state.sigma2_eta, cache, priors, rng)

        if data.q_free:
            state.gamma, accepted = update_gamma(
                state.gamma, data, resid, state.sigma2_y, priors, scale, rng,
                deterministic=det)
            if sweep <= config.burn_in:
                accepted_window += accepted
                window_count += 1
                if window_count == config.adaptation_window:
                    batch_number += 1
                    delta = min(0.05, 1.0 / math.sqrt(batch_number))
                    rate = accepted_window / window_count
                    scale *= math.exp(delta if rate > config.target_acceptance else -delta)
                    accepted_window = 0
                    window_count = 0
            else:
                attempts_post += 1
                accepted_post += accepted

        if sweep > config.burn_in and (sweep - config.burn_in - 1) % config.thinning == 0:
            store["beta"][slot] = beta_rep
            store["sigma2_y"][slot] = state.sigma2_y
            if "gamma" in store:
                store["gamma"][slot] = state.gamma
            if config.spatial_effects:
                store["eta"][slot] = state.eta_star
                store["sigma2_eta"][slot] = state.sigma2_eta
                store["phi"][slot] = state.phi
            if config.node_effects:
                store["theta"][slot] = state.theta
                store["sigma2_theta"][slot] = state.sigma2_theta
            if fitted is not None:
                fitted[slot] = data.mean(beta_rep, state.eta_star, state.theta)
            slot += 1
    wall = time.perf_counter() - t0

    return PosteriorDraws(
        beta=store["beta"], sigma2_y=store["sigma2_y"],
        gamma=store.get("gamma"), eta=store.get("eta"), theta=store.get("theta"),
        sigma2_eta=store.get("sigma2_eta"), sigma2_theta=store.get("sigma2_theta"),
        phi=store.get("phi"), fitted_means=fitted,
        beta_names=list(design.column_names),
        gamma_labels=[b.label for b in weight_spec.bases],
        acceptance_rate=(accepted_post / attempts_post) if attempts_post else float("nan"),
        proposal_scale=scale,
        wall_seconds=wall,
        sweeps_per_second=config.iterations / wall if wall > 0 else float("inf"),
        seed=config.seed,
    )


def run_chains(dyads: DyadSet, design: DesignMatrix, weight_spec: WeightSpec,
               priors: PriorConfig, config: SamplerConfig,
               cache: CovarianceCache | None = None) -> list[PosteriorDraws]:
    """Run config.chains chains with independent streams spawned from the seed."""
    seqs = np.random.SeedSequence(config.seed).spawn(config.chains)
    out = []
    for c, seq in enumerate(seqs):
        draws = run_chain(dyads, design, weight_spec, priors, config, cache,
                          rng=np.random.default_rng(seq))
        draws.seed = config.seed
        out.append(draws)
    return out
