"""Composite weights and the normalized weighted Gaussian data model.

Powering a Gaussian density by w and renormalizing yields another Gaussian
with the same mean and variance sigma2/w, so the weighted model is simply a
heteroskedastic Gaussian. Weights decay exponentially in monotone basis
functions of the scaled lags: w = exp(-V @ gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BasisFunction:
    """Monotone basis over one scaled lag: value = lag ** exponent."""

    lag: str                 # "dt" or "ds"
    exponent: float = 1.0

    def __post_init__(self):
        if self.lag not in ("dt", "ds"):
            raise DomainError(f"basis lag must be 'dt' or 'ds', got {self.lag!r}")
        if self.exponent <= 0:
            raise DomainError("basis exponent must be > 0")

    @property
    def label(self) -> str:
        return self.lag if self.exponent == 1.0 else f"{self.lag}^{self.exponent:g}"


@dataclass(frozen=True)
class WeightSpec:
    """Basis list plus a mask fixing individual coefficients to zero."""

    bases: tuple[BasisFunction, ...] = ()
    fixed_mask: tuple[bool, ...] = ()

    def __post_init__(self):
        bases = tuple(self.bases)
        mask = tuple(self.fixed_mask) if self.fixed_mask else (False,) * len(bases)
        if len(mask) != len(bases):
            raise DomainError("fixed_mask length must match basis count")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "fixed_mask", mask)

    @property
    def q(self) -> int:
        return len(self.bases)

    @property
    def free(self) -> np.ndarray:
        return ~np.array(self.fixed_mask, dtype=bool) if self.q else np.zeros(0, dtype=bool)

    @property
    def label(self) -> str:
        if self.q == 0 or all(self.fixed_mask):
            return "w=1"
        parts = [b.label for b, fixed in zip(self.bases, self.fixed_mask) if not fixed]
        return "exp(-[" + ",".join(parts) + "]'gamma)"

    def basis_matrix(self, dt_scaled: np.ndarray, ds_scaled: np.ndarray) -> np.ndarray:
        """(N, q) evaluation of every basis at the given scaled lags."""
        dt_scaled = np.asarray(dt_scaled, dtype=float)
        ds_scaled = np.asarray(ds_scaled, dtype=float)
        if np.any(dt_scaled < 0) or np.any(ds_scaled < 0):
            raise DomainError("lags must be nonnegative")
        cols = []
        for b in self.bases:
            lag = dt_scaled if b.lag == "dt" else ds_scaled
            cols.append(lag if b.exponent == 1.0 else lag ** b.exponent)
        if not cols:
            return np.zeros(np.broadcast(dt_scaled, ds_scaled).shape + (0,))
        return np.stack(np.broadcast_arrays(*cols), axis=-1)


def four_weight_models() -> dict[str, WeightSpec]:
    """The four competing weight configurations: none/temporal/spatial/both."""
    dt = BasisFunction("dt")
    ds = BasisFunction("ds")
    return {
        "none": WeightSpec(bases=(dt, ds), fixed_mask=(True, True)),
        "temporal": WeightSpec(bases=(dt, ds), fixed_mask=(False, True)),
        "spatial": WeightSpec(bases=(dt, ds), fixed_mask=(True, False)),
        "spatiotemporal": WeightSpec(bases=(dt, ds), fixed_mask=(False, False)),
    }


def power_basis_spec(max_power: int = 6, denominator: float = 3.0, lag: str = "dt") -> WeightSpec:
    """Power bases lag**(p/denominator) for p = 1..max_power."""
    return WeightSpec(bases=tuple(
        BasisFunction(lag, exponent=p / denominator) for p in range(1, max_power + 1)
    ))


def composite_weight(dt_scaled, ds_scaled, spec: WeightSpec, gamma: np.ndarray):
    """w = exp(-sum_p gamma_p * basis_p(lags)); 1 when lags or gamma vanish."""
    V = spec.basis_matrix(dt_scaled, ds_scaled)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape[-1:] != (spec.q,):
        raise DomainError(f"gamma length {gamma.shape} != basis count {spec.q}")
    out = np.exp(-(V @ gamma)) if spec.q else np.ones(V.shape[:-1])
    return float(out) if np.ndim(out) == 0 else out


def weights_from_basis(V: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Weights from a precomputed basis matrix (the sampler's hot path)."""
    if V.shape[1] == 0:
        return np.ones(V.shape[0])
    return np.exp(-(V @ gamma))


def log_density(y, mu, sigma2: float, w) -> float | np.ndarray:
    """Log density of the normalized weighted Gaussian: N(mu, sigma2/w) at y."""
    if np.any(np.asarray(sigma2) <= 0):
        raise DomainError("sigma2 must be > 0")
    if np.any(np.asarray(w) <= 0):
        raise DomainError("composite weight must be > 0")
    var = np.asarray(sigma2, dtype=float) / np.asarray(w, dtype=float)
    out = -0.5 * (LOG_2PI + np.log(var) + (np.asarray(y) - np.asarray(mu)) ** 2 / var)
    return float(out) if np.ndim(out) == 0 else out


def deterministic_sum(values: np.ndarray) -> float:
    """Exact (order-independent) float sum; used for reproducible reductions."""
    return math.fsum(values.tolist())


def mean_structure(dyads, design_matrix: np.ndarray, beta: np.ndarray,
                   eta: np.ndarray | None = None,
                   theta: np.ndarray | None = None) -> np.ndarray:
    """Per-dyad mean x'beta + eta_loc(j) - eta_loc(i) + theta_i + theta_j."""
    mu = design_matrix @ beta if design_matrix.shape[1] else np.zeros(dyads.dyad_count)
    if eta is not None:
        mu = mu + eta[dyads.loc_j] - eta[dyads.loc_i]
    if theta is not None:
        mu = mu + theta[dyads.i_idx] + theta[dyads.j_idx]
    return mu


def total_log_likelihood(dyads, design, state, spec: WeightSpec,
                         deterministic: bool = True):
    """(per-dyad log densities, total) under the current parameter state."""
    mu = mean_structure(dyads, design.matrix, state.beta, state.eta_star, state.theta)
    w = composite_weight(dyads.dt_scaled, dyads.ds_scaled, spec, state.gamma)
    per_dyad = log_density(dyads.ytilde, mu, state.sigma2_y, w)
    total = deterministic_sum(per_dyad) if deterministic else float(np.sum(per_dyad))
    return per_dyad, total
