"""Nearest-neighbour stencils."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import InsufficientNodesError


def stencil_size(m, d):
    """Recommended stencil size ``2 * binom(m + d, d)``."""
    if m < 0 or d < 1:
        raise ValueError("need m >= 0 and d >= 1")
    return 2 * comb(m + d, d)


@dataclass(frozen=True)
class Stencil:
    center_index: int
    neighbor_indices: np.ndarray
    radius: float


class SpatialIndex:
    """Exact k-NN queries with ties at equal distance broken by ascending index."""

    def __init__(self, points):
        self.points = np.ascontiguousarray(points, dtype=float)
        if self.points.ndim != 2 or len(self.points) == 0:
            raise ValueError("SpatialIndex needs a nonempty (N, d) point array")
        self._tree = cKDTree(self.points)

    def __len__(self):
        return len(self.points)

    def query(self, x, k):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        N = len(self.points)
        if k > N:
            raise InsufficientNodesError(f"requested {k} neighbours but only {N} nodes exist")
        if k < 1:
            raise ValueError("k must be positive")
        extra = min(N, k + 4)
        dist, idx = self._query(x, extra)
        # widen the query where a tie may straddle the k-th position
        while extra < N:
            tied = dist[:, k - 1] >= dist[:, extra - 1] * (1 - 1e-12)
            if not tied.any():
                break
            extra = min(N, 2 * extra)
            d2, i2 = self._query(x[tied], extra)
            dist = np.pad(dist, ((0, 0), (0, extra - dist.shape[1])), constant_values=np.inf)
            idx = np.pad(idx, ((0, 0), (0, extra - idx.shape[1])), constant_values=N)
            dist[tied], idx[tied] = d2, i2
        order = _rowwise_lexsort(dist, idx)
        idx = np.take_along_axis(idx, order, 1)[:, :k]
        dist = np.take_along_axis(dist, order, 1)[:, :k]
        return dist, idx

    def _query(self, x, k):
        dist, idx = self._tree.query(x, k)
        dist, idx = np.asarray(dist).reshape(len(x), k), np.asarray(idx).reshape(len(x), k)
        # recompute distances so ties are exact and match a brute-force evaluation
        dist = np.linalg.norm(self.points[idx] - x[:, None, :], axis=-1)
        return dist, idx


def _rowwise_lexsort(dist, idx):
    # sort by index first, then stable sort by distance
    o1 = np.argsort(idx, axis=1, kind="stable")
    d1 = np.take_along_axis(dist, o1, 1)
    o2 = np.argsort(d1, axis=1, kind="stable")
    return np.take_along_axis(o1, o2, 1)


def build_index(nodes):
    positions = getattr(nodes, "positions", nodes)
    return SpatialIndex(positions)


@dataclass(frozen=True)
class Stencils:
    """All stencils of a node set; row ``i`` lists node ``i`` first, then neighbours by distance."""

    indices: np.ndarray
    distances: np.ndarray

    @property
    def radius(self):
        return self.distances[:, -1]

    @property
    def size(self):
        return self.indices.shape[1]

    def __len__(self):
        return self.indices.shape[0]

    def __getitem__(self, i):
        return Stencil(int(i), self.indices[i], float(self.distances[i, -1]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node"] + [f"nb{j}" for j in range(self.size)])
            for i, row in enumerate(self.indices):
                w.writerow([i, *row.tolist()])


def find_stencils(nodes, n, index=None):
    """The ``n`` nearest nodes (center included) for every node."""
    positions = getattr(nodes, "positions", nodes)
    N = len(positions)
    if n > N:
        raise InsufficientNodesError(f"stencil size {n} exceeds node count {N}")
    if index is None:
        index = build_index(positions)
    dist, idx = index.query(positions, n)
    if not np.all(idx[:, 0] == np.arange(N)):
        raise ValueError("duplicate node positions; stencil centers are ambiguous")
    return Stencils(idx, dist)
