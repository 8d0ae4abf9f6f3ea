"""scikit-learn style front end to the shape computation."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .approximation import (
    Engine,
    EngineAssignment,
    Operator,
    RBFConfig,
    WLSConfig,
    assign_engines,
    compute_shapes,
)
from .stencil import find_stencils, stencil_size as default_stencil_size


def check_positions(X):
    """Finite float array of shape ``(N, d)`` with ``1 <= d <= 3``."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if not 1 <= X.shape[1] <= 3:
        raise ValueError(f"node positions must be 1-, 2- or 3-dimensional, got d={X.shape[1]}")
    return X


def check_nodal_values(U, n_nodes):
    U = np.asarray(U, dtype=np.float64)
    if U.ndim not in (1, 2) or U.shape[0] != n_nodes:
        raise ValueError(f"expected values at {n_nodes} nodes, got shape {U.shape}")
    return U


def _as_operator(op):
    return op if isinstance(op, Operator) else Operator.from_name(op)


class MeshlessDifferentiator(TransformerMixin, BaseEstimator):
    """Differential operators on scattered nodes by WLS, RBF-FD or the hybrid of both.

    ``fit(X)`` takes node positions and computes the shapes of every operator
    in ``operators``; ``transform(U)`` applies them to nodal values ``U``
    (shape ``(N,)`` or ``(N, k)``), returning one column per operator and field.

    Parameters
    ----------
    operators : sequence of str or Operator
        Names such as ``"lap"``, ``"dx"``, ``"dxy"``.
    engine : {"wls", "rbffd", "hybrid"}
    order : int
        Degree of the monomial basis (WLS) or augmentation (RBF-FD).
    phs_order : int
        Polyharmonic spline exponent.
    n_neighbors : int or None
        Stencil size; ``2 * binom(order + d, d)`` if None.
    rbf_center, rbf_radius
        Hybrid only: nodes strictly within ``rbf_radius`` of ``rbf_center`` use RBF-FD.
    wls_weight, wls_sigma
        WLS weight function and Gaussian width in units of the closest-node distance.
    """

    def __init__(self, operators=("lap",), engine="hybrid", order=2, phs_order=5, n_neighbors=None,
                 rbf_center=None, rbf_radius=0.15, wls_weight="gaussian", wls_sigma=1.0):
        self.operators = operators
        self.engine = engine
        self.order = order
        self.phs_order = phs_order
        self.n_neighbors = n_neighbors
        self.rbf_center = rbf_center
        self.rbf_radius = rbf_radius
        self.wls_weight = wls_weight
        self.wls_sigma = wls_sigma

    def fit(self, X, y=None):
        X = check_positions(X)
        N, d = X.shape
        if self.engine not in ("wls", "rbffd", "hybrid"):
            raise ValueError(f"unknown engine {self.engine!r}")
        self.operators_ = [_as_operator(op) for op in self.operators]
        n = self.n_neighbors or default_stencil_size(self.order, d)
        self.stencils_ = find_stencils(X, min(n, N) if self.n_neighbors is None else n)
        if self.engine == "hybrid":
            center = np.zeros(d) if self.rbf_center is None else np.asarray(self.rbf_center, float)
            self.assignment_ = assign_engines(X, center, self.rbf_radius)
        else:
            self.assignment_ = EngineAssignment.uniform(N, Engine.WLS if self.engine == "wls" else Engine.RBFFD)
        self.shapes_ = compute_shapes(
            X, self.stencils_, self.operators_, self.assignment_,
            WLSConfig(m=self.order, weight=self.wls_weight, sigma=self.wls_sigma),
            RBFConfig(m=self.order, k=self.phs_order),
        )
        self.positions_ = X
        self.n_features_in_ = d
        return self

    def transform(self, U):
        check_is_fitted(self, "shapes_")
        U = check_nodal_values(U, len(self.positions_))
        cols = [self.shapes_.apply(op, U) for op in self.operators_]
        cols = [c[:, None] if c.ndim == 1 else c for c in cols]
        return np.hstack(cols)

    def operator_matrix(self, op):
        """Sparse ``(N, N)`` matrix ``D`` with ``D @ u`` approximating ``op`` applied to ``u``."""
        check_is_fitted(self, "shapes_")
        op = _as_operator(op)
        sh = self.shapes_
        N, n = sh.indices.shape
        return sp.csr_matrix((sh.weights[op].ravel(), (np.repeat(np.arange(N), n), sh.indices.ravel())),
                             shape=(N, N))

    @property
    def n_rbffd_(self):
        check_is_fitted(self, "assignment_")
        return self.assignment_.n_rbffd
