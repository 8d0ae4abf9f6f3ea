"""Global sparse systems from per-node shapes, Dirichlet boundaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .approximation.basis import LAPLACIAN, second_partial
from .exceptions import AssemblyError


@dataclass
class SparseSystem:
    """``matrix @ u = rhs`` with unknown ``(node, component)`` at row ``node * n_components + component``."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    n_nodes: int
    n_components: int = 1

    def row(self, node, component=0):
        return node * self.n_components + component

    @property
    def shape(self):
        return self.matrix.shape

    def unpack(self, x):
        """Solution vector as ``(n_nodes,)`` or ``(n_nodes, n_components)``."""
        x = np.asarray(x)
        return x if self.n_components == 1 else x.reshape(self.n_nodes, self.n_components)

    def to_matrix_market(self, path, rhs_path=None):
        scipy.io.mmwrite(str(path), self.matrix.tocoo())
        if rhs_path is not None:
            scipy.io.mmwrite(str(rhs_path), self.rhs[:, None])


def _eval(fn, x):
    if callable(fn):
        return np.asarray(fn(x), dtype=float)
    return np.broadcast_to(np.asarray(fn, dtype=float), (len(x),) + np.shape(fn)).copy()


def assemble_poisson(nodes, shapes, f_lap, g):
    """Laplacian collocation in the interior, ``u = g`` on the boundary.

    ``f_lap`` and ``g`` are callables of an ``(M, d)`` position array or constants.
    """
    N = len(nodes)
    interior, boundary = nodes.interior, nodes.boundary
    if len(interior):
        shapes.require([LAPLACIAN], interior)
    n = shapes.indices.shape[1]
    rows = np.concatenate([np.repeat(interior, n), boundary])
    cols = np.concatenate([shapes.indices[interior].ravel(), boundary])
    vals = np.concatenate([shapes.weights[LAPLACIAN][interior].ravel(), np.ones(len(boundary))])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    b = np.empty(N)
    b[interior] = _eval(f_lap, nodes.positions[interior])
    b[boundary] = _eval(g, nodes.positions[boundary])
    return SparseSystem(A, b, N, 1)


def assemble_cauchy_navier(nodes, shapes, lam, mu, body_force, bc):
    """Navier equations ``(lam + mu) grad(div u) + mu lap(u) = f`` with Dirichlet displacement ``bc``."""
    if not mu > 0:
        raise AssemblyError(f"shear modulus must be positive, got {mu}")
    N, d = len(nodes), nodes.dim
    interior, boundary = nodes.interior, nodes.boundary
    seconds = {(a, b): second_partial(a, b) for a in range(d) for b in range(a, d)}
    if len(interior):
        shapes.require(list(seconds.values()), interior)
    if LAPLACIAN in shapes.weights:
        lap = shapes.weights[LAPLACIAN]
    else:
        lap = sum(shapes.weights[seconds[a, a]] for a in range(d))
    idx = shapes.indices[interior]
    n = idx.shape[1]

    rows, cols, vals = [], [], []
    for i in range(d):
        row = np.repeat(d * interior + i, n)
        for j in range(d):
            w = (lam + mu) * shapes.weights[seconds[min(i, j), max(i, j)]][interior]
            if i == j:
                w = w + mu * lap[interior]
            rows.append(row)
            cols.append((d * idx + j).ravel())
            vals.append(w.ravel())
        rows.append(d * boundary + i)
        cols.append(d * boundary + i)
        vals.append(np.ones(len(boundary)))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(d * N, d * N))
    b = np.zeros((N, d))
    if body_force is not None and len(interior):
        b[interior] = _eval(body_force, nodes.positions[interior]).reshape(len(interior), d)
    if len(boundary):
        b[boundary] = _eval(bc, nodes.positions[boundary]).reshape(len(boundary), d)
    return SparseSystem(A, b.ravel(), N, d)
