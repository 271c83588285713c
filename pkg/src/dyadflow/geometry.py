"""Geometry and dissimilarity primitives for dyadic outcomes.

Distances are great-circle (haversine) meters in geodesic mode or plain
Euclidean units in planar mode. Dissimilarities turn two node responses
into one edge weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

EARTH_RADIUS_M = 6_371_000.0


class CoordinateMode(str, Enum):
    GEODESIC = "geodesic"
    PLANAR = "planar"


def _check_lonlat(lon: np.ndarray, lat: np.ndarray) -> None:
    if np.any((lon < -180.0) | (lon > 180.0)):
        raise DomainError("longitude outside [-180, 180]")
    if np.any((lat < -90.0) | (lat > 90.0)):
        raise DomainError("latitude outside [-90, 90]")


def distance(a, b, mode: CoordinateMode) -> float:
    """Distance between two coordinate pairs (meters in geodesic mode)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mode == CoordinateMode.GEODESIC:
        _check_lonlat(a[..., 0], a[..., 1])
        _check_lonlat(b[..., 0], b[..., 1])
        return float(_haversine(a[0], a[1], b[0], b[1]))
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def _haversine(lon1, lat1, lon2, lat2):
    lon1, lat1, lon2, lat2 = (np.radians(np.asarray(v, dtype=float)) for v in (lon1, lat1, lon2, lat2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def pairwise_distances(coords: np.ndarray, mode: CoordinateMode) -> np.ndarray:
    """Symmetric distance matrix for an (n, 2) coordinate array."""
    coords = np.asarray(coords, dtype=float)
    if mode == CoordinateMode.GEODESIC:
        _check_lonlat(coords[:, 0], coords[:, 1])
        lon = coords[:, 0][:, None]
        lat = coords[:, 1][:, None]
        d = _haversine(lon, lat, lon.T, lat.T)
    else:
        diff = coords[:, None, :] - coords[None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(d, 0.0)
    return d


def distances_to(points: np.ndarray, coords: np.ndarray, mode: CoordinateMode) -> np.ndarray:
    """(k, m) distances from each of k points to each of m coordinates."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    coords = np.asarray(coords, dtype=float)
    if mode == CoordinateMode.GEODESIC:
        _check_lonlat(points[:, 0], points[:, 1])
        _check_lonlat(coords[:, 0], coords[:, 1])
        return _haversine(points[:, 0][:, None], points[:, 1][:, None],
                          coords[:, 0][None, :], coords[:, 1][None, :])
    diff = points[:, None, :] - coords[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


class DissimilarityKind(str, Enum):
    SIGNED_DIFFERENCE = "signed-difference"
    WEIGHTED_EUCLIDEAN = "weighted-euclidean"
    MANHATTAN = "manhattan"


@dataclass(frozen=True)
class Dissimilarity:
    """How two node responses combine into a dyadic outcome.

    ``signed-difference`` needs scalar responses and keeps the sign
    (later minus earlier). The embedding kinds need equal-length vectors;
    ``weights`` (nonnegative, defaulting to 1) only apply to
    ``weighted-euclidean``.
    """

    kind: DissimilarityKind = DissimilarityKind.SIGNED_DIFFERENCE
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0):
                raise DomainError("dissimilarity weights must be nonnegative")
            object.__setattr__(self, "weights", w)


def dissimilarity(y_i, y_j, spec: Dissimilarity) -> float:
    """Dyadic outcome between the earlier response ``y_i`` and later ``y_j``."""
    if spec.kind == DissimilarityKind.SIGNED_DIFFERENCE:
        if np.ndim(y_i) != 0 or np.ndim(y_j) != 0:
            raise DomainError("signed-difference requires scalar responses")
        return float(y_j) - float(y_i)
    a = np.asarray(y_i, dtype=float)
    b = np.asarray(y_j, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"embedding length mismatch: {a.shape} vs {b.shape}")
    if spec.kind == DissimilarityKind.MANHATTAN:
        return float(np.sum(np.abs(b - a)))
    w = spec.weights
    if w is None:
        w = np.ones_like(a)
    elif w.shape != a.shape:
        raise DomainError(f"weight length mismatch: {w.shape} vs {a.shape}")
    return float(np.sqrt(np.sum(w * (b - a) ** 2)))


def project_embedding(raw: np.ndarray, loadings: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Project a raw vector into embedding space: loadings @ (raw - center)."""
    raw = np.asarray(raw, dtype=float)
    loadings = np.asarray(loadings, dtype=float)
    center = np.asarray(center, dtype=float)
    if raw.shape != center.shape:
        raise DomainError(f"raw/center length mismatch: {raw.shape} vs {center.shape}")
    if loadings.ndim != 2 or loadings.shape[1] != raw.shape[0]:
        raise DomainError(f"loadings shape {loadings.shape} incompatible with vector of length {raw.shape[0]}")
    return loadings @ (raw - center)
