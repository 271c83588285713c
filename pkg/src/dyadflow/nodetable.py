"""Node tables: spatially/temporally referenced observations with covariates.

CSV layout: required columns ``id,lon,lat,time``; covariates as ``x_*``
columns (file order preserved); scalar response as ``y``; embeddings as
``e_1..e_D`` with optional ``ew_1..ew_D`` per-dimension weights.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError
from .geometry import CoordinateMode

REQUIRED_COLUMNS = ("id", "lon", "lat", "time")


@dataclass(frozen=True)
class Node:
    """One observation: location, time, covariates, and a response."""

    id: int
    location: tuple[float, float]
    time: float
    covariates: np.ndarray
    response: float | np.ndarray | None = None
    embedding_weights: np.ndarray | None = None


@dataclass
class NodeTable:
    """Columnar container for n nodes.

    ``responses`` is an (n,) scalar array or an (n, D) embedding matrix;
    ``embedding_weights`` (D,) applies only in the embedding case.
    """

    ids: np.ndarray
    coords: np.ndarray          # (n, 2) lon/lat or planar x/y
    times: np.ndarray
    covariates: np.ndarray      # (n, p)
    covariate_names: list[str]
    responses: np.ndarray | None = None
    embedding_weights: np.ndarray | None = None
    mode: CoordinateMode = CoordinateMode.PLANAR
    true_potential: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.coords = np.asarray(self.coords, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        self.covariates = np.atleast_2d(np.asarray(self.covariates, dtype=float))
        if self.covariates.shape[0] != self.n:
            self.covariates = self.covariates.reshape(self.n, -1)
        if len(np.unique(self.ids)) != self.n:
            raise DomainError("node ids must be unique")
        if not np.all(np.isfinite(self.covariates)):
            raise DomainError("covariates must be finite")
        if not np.all(np.isfinite(self.times)):
            raise DomainError("times must be finite")
        if self.mode == CoordinateMode.GEODESIC:
            lon, lat = self.coords[:, 0], self.coords[:, 1]
            if np.any((lon < -180) | (lon > 180)) or np.any((lat < -90) | (lat > 90)):
                raise DomainError("geodesic coordinates out of range")
        if self.embedding_weights is not None:
            w = np.asarray(self.embedding_weights, dtype=float)
            if np.any(w < 0):
                raise DomainError("embedding weights must be nonnegative")
            self.embedding_weights = w

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def has_embeddings(self) -> bool:
        return self.responses is not None and self.responses.ndim == 2

    def node(self, idx: int) -> Node:
        resp = None if self.responses is None else self.responses[idx]
        if resp is not None and np.ndim(resp) == 0:
            resp = float(resp)
        return Node(
            id=int(self.ids[idx]),
            location=(float(self.coords[idx, 0]), float(self.coords[idx, 1])),
            time=float(self.times[idx]),
            covariates=self.covariates[idx],
            response=resp,
            embedding_weights=self.embedding_weights,
        )


def _numbered_columns(header: list[str], prefix: str) -> list[str]:
    cols = [c for c in header if c.startswith(prefix) and c[len(prefix):].isdigit()]
    cols.sort(key=lambda c: int(c[len(prefix):]))
    expected = [f"{prefix}{k}" for k in range(1, len(cols) + 1)]
    if cols != expected:
        raise DomainError(f"{prefix}* columns must be contiguous from {prefix}1, got {cols}")
    return cols


def read_node_csv(path: str | Path, mode: CoordinateMode = CoordinateMode.GEODESIC) -> NodeTable:
    """Load a node table from CSV (UTF-8, '.' decimal separator)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise DomainError(f"missing required column(s): {', '.join(missing)}")
        x_cols = [c for c in header if c.startswith("x_")]
        e_cols = _numbered_columns(header, "e_")
        ew_cols = _numbered_columns(header, "ew_")
        if ew_cols and len(ew_cols) != len(e_cols):
            raise DomainError("ew_* columns must match e_* columns in count")
        has_y = "y" in header
        rows = list(reader)
    if not rows:
        raise DomainError(f"{path}: no data rows")

    def fcol(col):
        try:
            return np.array([float(r[col]) for r in rows])
        except (TypeError, ValueError) as exc:
            raise DomainError(f"column {col!r} contains a non-numeric value") from exc

    ids = np.array([int(float(r["id"])) for r in rows], dtype=np.int64)
    coords = np.column_stack([fcol("lon"), fcol("lat")])
    times = fcol("time")
    covariates = (np.column_stack([fcol(c) for c in x_cols])
                  if x_cols else np.zeros((len(rows), 0)))
    responses = None
    emb_weights = None
    if e_cols:
        responses = np.column_stack([fcol(c) for c in e_cols])
        if ew_cols:
            first = rows[0]
            emb_weights = np.array([float(first[c]) for c in ew_cols])
    elif has_y:
        responses = fcol("y")
    return NodeTable(
        ids=ids, coords=coords, times=times,
        covariates=covariates, covariate_names=x_cols,
        responses=responses, embedding_weights=emb_weights, mode=mode,
    )


def write_node_csv(table: NodeTable, path: str | Path) -> None:
    """Write a NodeTable back out in the documented CSV layout."""
    path = Path(path)
    header = ["id", "lon", "lat", "time"] + list(table.covariate_names)
    scalar = table.responses is not None and table.responses.ndim == 1
    if scalar:
        header.append("y")
    elif table.has_embeddings:
        header += [f"e_{k + 1}" for k in range(table.responses.shape[1])]
        if table.embedding_weights is not None:
            header += [f"ew_{k + 1}" for k in range(len(table.embedding_weights))]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(table.n):
            row = [int(table.ids[i]), repr(float(table.coords[i, 0])),
                   repr(float(table.coords[i, 1])), repr(float(table.times[i]))]
            row += [repr(float(v)) for v in table.covariates[i]]
            if scalar:
                row.append(repr(float(table.responses[i])))
            elif table.has_embeddings:
                row += [repr(float(v)) for v in table.responses[i]]
                if table.embedding_weights is not None:
                    row += [repr(float(v)) for v in table.embedding_weights]
            writer.writerow(row)
