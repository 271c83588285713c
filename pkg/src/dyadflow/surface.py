"""Gridded posterior mean and variance of the potential rho(s) = x(s)'beta + eta(s).

Each retained draw contributes x'beta plus the kriged spatial effect at the
grid point under that draw's phi; cells average over draws, and the
uncertainty is the square root of the average squared deviation (divisor =
draw count, so a single draw gives sd 0).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError
from .geometry import CoordinateMode, distances_to
from .gp import CovarianceCache
from .sampler import PosteriorDraws


@dataclass
class GridTable:
    """Prediction grid: coordinates, covariates, and a missing-data mask."""

    coords: np.ndarray            # (G, 2)
    covariates: np.ndarray        # (G, p) with NaN on masked cells
    covariate_names: list[str]
    mask: np.ndarray              # (G,) True where covariates missing


@dataclass
class SurfaceGrid:
    coords: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    mask: np.ndarray

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lon", "lat", "mean", "sd", "masked"])
            for g in range(len(self.mean)):
                if self.mask[g]:
                    writer.writerow([repr(float(self.coords[g, 0])),
                                     repr(float(self.coords[g, 1])), "", "", 1])
                else:
                    writer.writerow([repr(float(self.coords[g, 0])),
                                     repr(float(self.coords[g, 1])),
                                     repr(float(self.mean[g])),
                                     repr(float(self.sd[g])), 0])


def read_grid_csv(path: str | Path) -> GridTable:
    """Read a raster table: lon,lat plus x_* covariates; blanks mask the cell."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ("lon", "lat"):
            if col not in header:
                raise DomainError(f"grid CSV missing required column {col!r}")
        x_cols = [c for c in header if c.startswith("x_")]
        rows = list(reader)
    if not rows:
        raise DomainError(f"{path}: no grid rows")
    coords = np.array([[float(r["lon"]), float(r["lat"])] for r in rows])
    cov = np.full((len(rows), len(x_cols)), np.nan)
    for g, r in enumerate(rows):
        for k, c in enumerate(x_cols):
            v = (r[c] or "").strip()
            if v:
                cov[g, k] = float(v)
    mask = ~np.all(np.isfinite(cov), axis=1) if x_cols else np.zeros(len(rows), bool)
    return GridTable(coords=coords, covariates=cov, covariate_names=x_cols, mask=mask)


def _potential_draws(draws: PosteriorDraws, covariates: np.ndarray,
                     dists: np.ndarray | None, cache: CovarianceCache | None,
                     thin: int) -> np.ndarray:
    """(draws_used, points) matrix of rho draws at the given points."""
    idx = np.arange(0, draws.draw_count, max(1, thin))
    beta = draws.beta[idx]
    rho = beta @ covariates.T if covariates.shape[1] else np.zeros((len(idx), len(covariates)))
    if draws.eta is not None:
        if dists is None or cache is None:
            raise DomainError("spatial draws present but no distances/cache for kriging")
        from .gp import krige_weights
        eta = draws.eta[idx]
        phi = draws.phi[idx]
        for value in np.unique(phi):
            rows = np.flatnonzero(phi == value)
            W = krige_weights(dists, cache.entry(float(value)))
            rho[rows] += eta[rows] @ W.T
    return rho


def estimate_surface(draws: PosteriorDraws, grid: GridTable,
                     design_columns: list[str],
                     location_coords: np.ndarray | None = None,
                     cache: CovarianceCache | None = None,
                     mode: CoordinateMode = CoordinateMode.GEODESIC,
                     thin: int = 1) -> SurfaceGrid:
    """Posterior mean and sd of the potential over the grid."""
    if grid.covariate_names != list(design_columns):
        raise DomainError(
            f"grid covariate columns {grid.covariate_names} do not match the "
            f"fitted design {list(design_columns)}")
    live = ~grid.mask
    coords = grid.coords[live]
    cov = grid.covariates[live]
    dists = None
    if draws.eta is not None:
        if location_coords is None:
            raise DomainError("location coordinates required to krige spatial draws")
        dists = distances_to(coords, location_coords, mode)
    rho = _potential_draws(draws, cov, dists, cache, thin)
    mean = rho.mean(axis=0)
    sd = np.sqrt(np.mean((rho - mean) ** 2, axis=0))
    full_mean = np.full(len(grid.mask), np.nan)
    full_sd = np.full(len(grid.mask), np.nan)
    full_mean[live] = mean
    full_sd[live] = sd
    return SurfaceGrid(coords=grid.coords, mean=full_mean, sd=full_sd,
                       mask=grid.mask.copy())


def evaluate_potential_path(draws: PosteriorDraws, covariates: np.ndarray,
                            dists: np.ndarray | None = None,
                            cache: CovarianceCache | None = None,
                            thin: int = 1) -> dict[str, np.ndarray]:
    """Posterior mean and 2.5/97.5 percentile band of rho along ordered points."""
    covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
    rho = _potential_draws(draws, covariates, dists, cache, thin)
    return {
        "mean": rho.mean(axis=0),
        "lower": np.percentile(rho, 2.5, axis=0),
        "upper": np.percentile(rho, 97.5, axis=0),
    }
