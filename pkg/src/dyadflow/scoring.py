"""Closed-form Gaussian CRPS, model scoring, and chain diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError
from .network import DesignMatrix, DyadSet
from .sampler import PosteriorDraws
from .weights import WeightSpec, mean_structure

INV_SQRT_PI = 1.0 / np.sqrt(np.pi)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def crps_gaussian(y, mu, sigma):
    """CRPS of a Normal(mu, sigma^2) forecast against observation y.

    sigma [z(2*Phi(z) - 1) + 2*phi(z) - 1/sqrt(pi)] with z = (y - mu)/sigma;
    the sigma = 0 limit is |y - mu|.
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise DomainError("sigma must be >= 0")
    err = np.abs(y - mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, (y - mu) / np.where(sigma > 0, sigma, 1.0), 0.0)
        pdf = INV_SQRT_2PI * np.exp(-0.5 * z * z)
        val = sigma * (z * (2.0 * ndtr(z) - 1.0) + 2.0 * pdf - INV_SQRT_PI)
    out = np.where(sigma > 0, val, err)
    return float(out) if out.ndim == 0 else out


@dataclass
class ModelScore:
    label: str
    crps: float
    per_dyad: np.ndarray
    draws_used: int


def score_model(dyads: DyadSet, design: DesignMatrix, draws: PosteriorDraws,
                spec: WeightSpec, mode: str = "mixture", thin: int = 1,
                subset: np.ndarray | None = None) -> ModelScore:
    """Mean CRPS of the posterior predictive over dyads.

    Per draw the predictive is Normal(mu_ij, sigma2_y / w_ij) with the
    heterogeneous variance, so large-lag dyads are penalized through their
    inflated predictive spread. ``mixture`` averages CRPS over draws;
    ``plugin`` scores once at the posterior means. ``subset`` restricts to
    held-out dyad indices (lags stay on the stored training scale).
    """
    if mode not in ("mixture", "plugin"):
        raise DomainError(f"unknown scoring mode {mode!r}")
    sel = np.arange(dyads.dyad_count) if subset is None else np.asarray(subset)
    y = dyads.ytilde[sel]
    V = spec.basis_matrix(dyads.dt_scaled[sel], dyads.ds_scaled[sel])

    idx = np.arange(0, draws.draw_count, max(1, thin))

    def mu_at(beta, eta, theta):
        full = mean_structure(dyads, design.matrix, beta, eta, theta)
        return full[sel]

    if mode == "plugin":
        beta = draws.beta.mean(axis=0)
        eta = draws.eta.mean(axis=0) if draws.eta is not None else None
        theta = draws.theta.mean(axis=0) if draws.theta is not None else None
        gamma = draws.gamma.mean(axis=0) if draws.gamma is not None else np.zeros(spec.q)
        s2 = float(draws.sigma2_y.mean())
        w = np.exp(-(V @ gamma)) if spec.q else np.ones(len(sel))
        per = crps_gaussian(y, mu_at(beta, eta, theta), np.sqrt(s2 / w))
        return ModelScore(spec.label, float(per.mean()), per, 1)

    acc = np.zeros(len(sel))
    for k in idx:
        beta = draws.beta[k]
        eta = draws.eta[k] if draws.eta is not None else None
        theta = draws.theta[k] if draws.theta is not None else None
        gamma = draws.gamma[k] if draws.gamma is not None else np.zeros(spec.q)
        w = np.exp(-(V @ gamma)) if spec.q else np.ones(len(sel))
        sd = np.sqrt(draws.sigma2_y[k] / w)
        acc += crps_gaussian(y, mu_at(beta, eta, theta), sd)
    per = acc / len(idx)
    return ModelScore(spec.label, float(per.mean()), per, len(idx))


# -- chain diagnostics ---------------------------------------------------------

def _split_chains(chains: np.ndarray) -> np.ndarray:
    """(C, S) -> (2C, S//2); drops the last draw of odd-length chains."""
    c, s = chains.shape
    half = s // 2
    return np.concatenate([chains[:, :half], chains[:, s - half:]], axis=0)


def split_rhat(chains: np.ndarray) -> float:
    """Split-chain potential scale reduction for one scalar parameter."""
    x = _split_chains(np.atleast_2d(np.asarray(chains, dtype=float)))
    c, s = x.shape
    if s < 2:
        return float("nan")
    means = x.mean(axis=1)
    w = float(np.mean(x.var(axis=1, ddof=1)))
    b_over_n = float(np.var(means, ddof=1))
    if w <= 1e-300:
        return 1.0
    var_hat = (s - 1) / s * w + b_over_n
    return float(np.sqrt(var_hat / w))


def effective_sample_size(chains: np.ndarray) -> float:
    """Autocorrelation-based ESS with Geyer's initial monotone sequence."""
    x = np.atleast_2d(np.asarray(chains, dtype=float))
    c, s = x.shape
    if s < 4:
        return float("nan")
    centered = x - x.mean(axis=1, keepdims=True)
    nfft = int(2 ** np.ceil(np.log2(2 * s)))
    f = np.fft.rfft(centered, n=nfft, axis=1)
    acov = np.fft.irfft(f * np.conj(f), n=nfft, axis=1)[:, :s].real / s
    w = float(np.mean(x.var(axis=1, ddof=1)))
    b_over_n = float(np.var(x.mean(axis=1), ddof=1)) if c > 1 else 0.0
    var_hat = (s - 1) / s * w + b_over_n
    if var_hat <= 1e-300:
        return float("nan")
    rho = 1.0 - (w - acov.mean(axis=0)) / var_hat
    # Geyer: sum consecutive pairs while positive, enforce monotone decay
    tau = 1.0
    prev_pair = np.inf
    t = 1
    while t + 1 < s:
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        pair = min(pair, prev_pair)
        tau += 2.0 * pair
        prev_pair = pair
        t += 2
    return float(c * s / tau)


def chain_summary(chains: PosteriorDraws | list[PosteriorDraws]) -> list[dict]:
    """Per-parameter table: mean, sd, percentiles, split-Rhat, ESS."""
    if isinstance(chains, PosteriorDraws):
        chains = [chains]
    rows = []
    blocks = chains[0].blocks()
    for name, first in blocks.items():
        width = first.shape[1] if first.ndim == 2 else 1
        for k in range(width):
            if first.ndim == 2:
                series = np.stack([c.blocks()[name][:, k] for c in chains])
                label = _param_label(chains[0], name, k)
            else:
                series = np.stack([c.blocks()[name] for c in chains])
                label = name
            pooled = series.ravel()
            rows.append({
                "parameter": label,
                "mean": float(pooled.mean()),
                "sd": float(pooled.std(ddof=1)) if pooled.size > 1 else 0.0,
                "q2.5": float(np.percentile(pooled, 2.5)),
                "q50": float(np.percentile(pooled, 50)),
                "q97.5": float(np.percentile(pooled, 97.5)),
                "rhat": split_rhat(series),
                "ess": effective_sample_size(series),
            })
    return rows


def _param_label(draws: PosteriorDraws, block: str, k: int) -> str:
    if block == "beta" and k < len(draws.beta_names):
        return f"beta[{draws.beta_names[k]}]"
    if block == "gamma" and k < len(draws.gamma_labels):
        return f"gamma[{draws.gamma_labels[k]}]"
    return f"{block}[{k}]"
