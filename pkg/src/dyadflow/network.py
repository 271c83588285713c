"""Fully-connected dyad construction with lags, scaling, and incidence maps.

Each unordered node pair becomes one dyad oriented so that j is the later
node (ties broken by ascending node id). The signed location incidence K
and the node incidence M drive the spatial and node random-effect updates.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError
from .geometry import CoordinateMode, Dissimilarity, dissimilarity, pairwise_distances
from .nodetable import NodeTable


@dataclass
class DyadSet:
    """All n(n-1)/2 dyads of a node table, in deterministic (i, j) order.

    ``i_idx``/``j_idx`` are node positions (i earlier), ``loc_i``/``loc_j``
    the distinct-location indices, and ``scale_denominators`` the raw lag
    maxima reused when scoring held-out dyads.
    """

    i_idx: np.ndarray
    j_idx: np.ndarray
    ytilde: np.ndarray
    ds: np.ndarray
    dt: np.ndarray
    ds_scaled: np.ndarray
    dt_scaled: np.ndarray
    location_index: np.ndarray      # node position -> location index
    location_coords: np.ndarray     # (m, 2) first-seen representatives
    node_ids: np.ndarray
    scale_denominators: tuple[float, float]
    mode: CoordinateMode

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def dyad_count(self) -> int:
        return len(self.ytilde)

    @property
    def m(self) -> int:
        return len(self.location_coords)

    @property
    def loc_i(self) -> np.ndarray:
        return self.location_index[self.i_idx]

    @property
    def loc_j(self) -> np.ndarray:
        return self.location_index[self.j_idx]

    def eta_incidence(self) -> np.ndarray:
        """Dense N x m signed mapping: +1 at loc(j), -1 at loc(i)."""
        K = np.zeros((self.dyad_count, self.m))
        rows = np.arange(self.dyad_count)
        np.add.at(K, (rows, self.loc_j), 1.0)
        np.add.at(K, (rows, self.loc_i), -1.0)
        return K

    def theta_incidence(self) -> np.ndarray:
        """Dense N x n mapping: +1 at i and at j."""
        M = np.zeros((self.dyad_count, self.n))
        rows = np.arange(self.dyad_count)
        M[rows, self.i_idx] += 1.0
        M[rows, self.j_idx] += 1.0
        return M

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "y", "ds", "dt", "ds_scaled", "dt_scaled"])
            for r in range(self.dyad_count):
                writer.writerow([
                    int(self.node_ids[self.i_idx[r]]),
                    int(self.node_ids[self.j_idx[r]]),
                    repr(float(self.ytilde[r])),
                    repr(float(self.ds[r])),
                    repr(float(self.dt[r])),
                    repr(float(self.ds_scaled[r])),
                    repr(float(self.dt_scaled[r])),
                ])


@dataclass
class DesignMatrix:
    """Differenced covariates x_j - x_i per dyad, zero-variance columns dropped."""

    matrix: np.ndarray
    column_names: list[str]
    dropped_columns: list[str]

    @property
    def p(self) -> int:
        return self.matrix.shape[1]


def distinct_locations(table: NodeTable, tol: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Group nodes whose pairwise distance is <= tol into shared locations.

    Grouping is the transitive closure of the within-tol relation
    (union-find); indices follow first appearance. Returns (node -> index
    map, (m, 2) representative coordinates).
    """
    if tol < 0:
        raise DomainError("location tolerance must be >= 0")
    n = table.n
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    if tol == 0.0:
        # exact coordinate match; avoids the O(n^2) distance sweep
        seen: dict[tuple[float, float], int] = {}
        for a in range(n):
            key = (float(table.coords[a, 0]), float(table.coords[a, 1]))
            if key in seen:
                parent[a] = find(seen[key])
            else:
                seen[key] = a
    else:
        d = pairwise_distances(table.coords, table.mode)
        for a in range(n):
            for b in range(a + 1, n):
                if d[a, b] <= tol:
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)

    roots = np.array([find(a) for a in range(n)])
    index_of_root: dict[int, int] = {}
    loc_index = np.empty(n, dtype=np.int64)
    reps = []
    for a in range(n):
        r = int(roots[a])
        if r not in index_of_root:
            index_of_root[r] = len(reps)
            reps.append(table.coords[r])
        loc_index[a] = index_of_root[r]
    return loc_index, np.array(reps, dtype=float)


def build_dyads(table: NodeTable, dissim: Dissimilarity,
                location_tol: float = 0.0) -> DyadSet:
    """Construct the fully-connected dyad set for a node table."""
    n = table.n
    if n < 2:
        raise DomainError("need at least 2 nodes to build dyads")
    if table.responses is None:
        raise DomainError("node table has no responses; cannot compute dyadic outcomes")

    spec = dissim
    if table.has_embeddings and spec.kind.value == "weighted-euclidean" and spec.weights is None \
            and table.embedding_weights is not None:
        spec = Dissimilarity(kind=spec.kind, weights=table.embedding_weights)

    a_idx, b_idx = np.triu_indices(n, k=1)
    # orientation: j is the later node; equal times break by ascending id
    t_a, t_b = table.times[a_idx], table.times[b_idx]
    id_a, id_b = table.ids[a_idx], table.ids[b_idx]
    swap = (t_a > t_b) | ((t_a == t_b) & (id_a > id_b))
    i_idx = np.where(swap, b_idx, a_idx)
    j_idx = np.where(swap, a_idx, b_idx)
    order = np.lexsort((j_idx, i_idx))
    i_idx, j_idx = i_idx[order], j_idx[order]

    dist = pairwise_distances(table.coords, table.mode)
    ds = dist[i_idx, j_idx]
    dt = np.abs(table.times[j_idx] - table.times[i_idx])

    ytilde = np.array([
        dissimilarity(_resp(table, i), _resp(table, j), spec)
        for i, j in zip(i_idx, j_idx)
    ])

    max_ds = float(ds.max())
    max_dt = float(dt.max())
    ds_scaled = ds / max_ds if max_ds > 0 else np.zeros_like(ds)
    dt_scaled = dt / max_dt if max_dt > 0 else np.zeros_like(dt)

    loc_index, loc_coords = distinct_locations(table, tol=location_tol)
    return DyadSet(
        i_idx=i_idx, j_idx=j_idx, ytilde=ytilde,
        ds=ds, dt=dt, ds_scaled=ds_scaled, dt_scaled=dt_scaled,
        location_index=loc_index, location_coords=loc_coords,
        node_ids=table.ids.copy(),
        scale_denominators=(max_ds, max_dt), mode=table.mode,
    )


def _resp(table: NodeTable, idx: int):
    r = table.responses[idx]
    return float(r) if np.ndim(r) == 0 else r


def build_design(table: NodeTable, dyads: DyadSet) -> DesignMatrix:
    """Differenced covariate matrix aligned with the dyad ordering."""
    if dyads.n != table.n or not np.array_equal(dyads.node_ids, table.ids):
        raise DomainError("dyad set was not built from this node table")
    X = table.covariates[dyads.j_idx] - table.covariates[dyads.i_idx]
    names = list(table.covariate_names) or [f"x_{k}" for k in range(X.shape[1])]
    zero = np.all(X == 0.0, axis=0)
    dropped = [names[k] for k in range(len(names)) if zero[k]]
    if dropped:
        warnings.warn(
            f"dropping zero-variance design column(s): {', '.join(dropped)}",
            stacklevel=2,
        )
    keep = ~zero
    return DesignMatrix(
        matrix=np.ascontiguousarray(X[:, keep]),
        column_names=[nm for nm, k in zip(names, keep) if k],
        dropped_columns=dropped,
    )
