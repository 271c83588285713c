"""Exponential-decay spatial correlation over distinct locations.

R(phi)_kl = exp(-ds_kl / phi) for phi > 0; phi = 0 is the independence
limit R = I. Factors, inverses, and log-determinants are cached for every
candidate range up front so the discrete phi update costs O(m^2) per entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError

DEFAULT_JITTER = 1e-8
MAX_JITTER = 1e-4


@dataclass(frozen=True)
class PhiSupport:
    """Ascending candidate spatial ranges, 0 meaning independence."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DomainError("phi support must be nonempty")
        if any(v < 0 for v in vals):
            raise DomainError("phi support values must be >= 0")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise DomainError("phi support must be strictly ascending")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_max_distance(cls, max_ds: float, increment: float = 10.0) -> "PhiSupport":
        """0 to max_ds/3 in fixed increments."""
        if increment <= 0:
            raise DomainError("phi increment must be > 0")
        top = max_ds / 3.0
        vals = [0.0]
        k = 1
        while k * increment <= top:
            vals.append(k * increment)
            k += 1
        return cls(tuple(vals))

    @property
    def median(self) -> float:
        return self.values[len(self.values) // 2]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


@dataclass
class CacheEntry:
    phi: float
    corr: np.ndarray
    chol: np.ndarray
    inverse: np.ndarray
    log_det: float
    jitter_used: float


@dataclass
class CovarianceCache:
    """Per-phi correlation matrices with factorizations, shared read-only."""

    support: PhiSupport
    entries: dict[float, CacheEntry] = field(default_factory=dict)

    def entry(self, phi: float) -> CacheEntry:
        try:
            return self.entries[float(phi)]
        except KeyError:
            raise DomainError(f"phi={phi} not in cached support") from None

    @property
    def m(self) -> int:
        return next(iter(self.entries.values())).corr.shape[0]

    @property
    def jitter_events(self) -> list[dict]:
        return [
            {"phi": e.phi, "jitter": e.jitter_used}
            for e in self.entries.values() if e.jitter_used > 0.0
        ]


def build_cache(dist: np.ndarray, support: PhiSupport,
                jitter: float = DEFAULT_JITTER) -> CovarianceCache:
    """Build R(phi), its Cholesky factor, inverse, and log|R| for each phi.

    On factorization failure the jitter added to the diagonal escalates
    tenfold up to 1e-4 before raising; the jitter actually used is recorded
    per entry.
    """
    if jitter < 0:
        raise DomainError("jitter must be >= 0")
    dist = np.asarray(dist, dtype=float)
    m = dist.shape[0]
    if dist.shape != (m, m):
        raise DomainError("distance matrix must be square")
    cache = CovarianceCache(support=support)
    for phi in support:
        if phi == 0.0:
            R = np.eye(m)
        else:
            R = np.exp(-dist / phi)
        used = 0.0
        level = jitter if jitter > 0 else DEFAULT_JITTER
        Rj = R
        while True:
            try:
                L = np.linalg.cholesky(Rj)
                break
            except np.linalg.LinAlgError:
                if used >= MAX_JITTER:
                    raise NumericalError(
                        f"correlation matrix for phi={phi} not positive definite "
                        f"after jitter {used:g}"
                    ) from None
                used = level
                Rj = R + used * np.eye(m)
                level *= 10.0
        log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
        identity = np.eye(m)
        inv = np.linalg.solve(L.T, np.linalg.solve(L, identity))
        cache.entries[float(phi)] = CacheEntry(
            phi=float(phi), corr=Rj, chol=L, inverse=inv,
            log_det=log_det, jitter_used=used,
        )
    return cache


def gp_simulate(entry: CacheEntry, sigma2_eta: float, rng: np.random.Generator) -> np.ndarray:
    """One mean-zero draw with covariance sigma2_eta * R(phi)."""
    if sigma2_eta < 0:
        raise DomainError("sigma2_eta must be >= 0")
    m = entry.corr.shape[0]
    z = rng.standard_normal(m)
    return np.sqrt(sigma2_eta) * (entry.chol @ z)


def krige_weights(dists_to_locs: np.ndarray, entry: CacheEntry) -> np.ndarray:
    """Rows r*' R(phi)^-1 for prediction points given their distances.

    A point coinciding with location k (distance exactly 0) gets the unit
    row e_k so interpolation is exact even with jitter; with phi = 0 any
    off-support point gets a zero row.
    """
    d = np.atleast_2d(np.asarray(dists_to_locs, dtype=float))
    if entry.phi == 0.0:
        W = np.zeros_like(d)
    else:
        W = np.exp(-d / entry.phi) @ entry.inverse
    hit_rows, hit_cols = np.nonzero(d == 0.0)
    if hit_rows.size:
        W[hit_rows] = 0.0
        W[hit_rows, hit_cols] = 1.0
    return W


def krige_predict(dists_to_locs: np.ndarray, eta: np.ndarray, entry: CacheEntry) -> float:
    """Conditional-mean prediction of the spatial effect at one point."""
    W = krige_weights(np.asarray(dists_to_locs, dtype=float).reshape(1, -1), entry)
    return float(W[0] @ eta)
