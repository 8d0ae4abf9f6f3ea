"""WLS and PHS RBF-FD weight computation.

Both engines work on batches of equally sized stencils. Coordinates are shifted
to the stencil center and divided by the stencil radius before any matrix is
formed; weights of an order-``q`` operator are rescaled by ``radius**-q``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..exceptions import ConfigError, DegenerateStencil
from .basis import MonomialBasis, phs_apply_operator, phs_eval

# relative singular value threshold for the rank check
RANK_RTOL = 1e-12
CHUNK = 1024


@dataclass(frozen=True)
class WLSConfig:
    m: int = 2
    weight: str = "uniform"
    sigma: float = 1.0
    scale: str = "closest"
    solver: str = "svd"
    allow_degenerate: bool = False

    def __post_init__(self):
        if self.weight not in ("uniform", "gaussian"):
            raise ConfigError(f"unknown WLS weight {self.weight!r}")
        if self.weight == "gaussian" and not self.sigma > 0:
            raise ConfigError("Gaussian WLS weight needs sigma > 0")
        if self.scale not in ("closest", "radius"):
            raise ConfigError(f"unknown WLS weight scale {self.scale!r}")
        if self.solver not in ("svd", "qr"):
            raise ConfigError(f"unknown WLS solver {self.solver!r}")
        if self.m < 0:
            raise ConfigError("monomial degree must be >= 0")


@dataclass(frozen=True)
class RBFConfig:
    m: int = 2
    k: int = 5
    allow_degenerate: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("PHS order must be >= 1")
        if self.m < 0:
            raise ConfigError("monomial degree must be >= 0")


def local_coordinates(positions, indices):
    """Stencil coordinates relative to the center, scaled to the unit ball.

    Returns ``(X, radius)`` with ``X.shape == indices.shape + (d,)``.
    """
    X = positions[indices] - positions[indices[:, :1]]
    radius = np.sqrt((X * X).sum(axis=-1)).max(axis=1)
    radius = np.where(radius > 0, radius, 1.0)
    return X / radius[:, None, None], radius


def _scale(w, radius, ops):
    orders = np.array([op.order for op in ops])
    return w * (radius[:, None] ** -orders)[:, None, :]


def _operator_rhs(basis, ops):
    return np.column_stack([basis.apply_operator(op) for op in ops])


def wls_batch(positions, indices, ops, cfg, node_ids=None):
    """WLS weights for a batch of stencils; returns ``(B, n, len(ops))``.

    Solves the normal form ``P^T W P psi = l_p`` and sets ``w = W P psi``, via
    the SVD of ``sqrt(W) P`` (or pivoted QR when ``cfg.solver == 'qr'``).
    """
    ops = list(ops)
    B, n = indices.shape
    d = positions.shape[1]
    basis = MonomialBasis(cfg.m, d)
    s = basis.size
    if n < s and not cfg.allow_degenerate:
        raise ConfigError(f"stencil size {n} below monomial basis size {s}")
    lp = _operator_rhs(basis, ops)
    out = np.empty((B, n, len(ops)))
    for start in range(0, B, CHUNK):
        sl = slice(start, start + CHUNK)
        X, radius = local_coordinates(positions, indices[sl])
        P = basis.evaluate(X)
        if cfg.weight == "gaussian":
            r2 = (X * X).sum(axis=-1)
            if cfg.scale == "closest":
                r2 = r2 / r2[:, 1:2]
            sw = np.exp(-0.5 * r2 / cfg.sigma**2)
        else:
            sw = np.ones(X.shape[:2])
        A = sw[:, :, None] * P
        ids = None if node_ids is None else node_ids[sl]
        if cfg.solver == "svd":
            w = _wls_svd(A, lp, cfg.allow_degenerate, ids)
        else:
            w = np.stack([_wls_qr(a, lp, cfg.allow_degenerate, None if ids is None else ids[i])
                          for i, a in enumerate(A)])
        out[sl] = _scale(sw[:, :, None] * w, radius, ops)
    return out


def _wls_svd(A, lp, allow_degenerate, ids):
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    keep = S > RANK_RTOL * S[:, :1]
    if not allow_degenerate and not keep.all():
        bad = int(np.flatnonzero(~keep.all(axis=1))[0])
        raise DegenerateStencil("WLS monomial matrix is rank deficient",
                                node=bad if ids is None else int(ids[bad]))
    Sinv = np.where(keep, 1.0 / np.where(keep, S, 1.0), 0.0)
    return U @ (Sinv[:, :, None] * (Vt @ lp))


def _wls_qr(A, lp, allow_degenerate, node):
    # w = A (A^T A)^+ lp; with A P = Q R:  w = Q R^-T P^T lp
    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int((diag > RANK_RTOL * diag[0]).sum())
    if rank < A.shape[1]:
        if not allow_degenerate:
            raise DegenerateStencil("WLS monomial matrix is rank deficient", node=node)
        return np.linalg.pinv(A.T) @ lp
    y = scipy.linalg.solve_triangular(R, lp[piv], trans="T")
    return Q @ y


def rbffd_batch(positions, indices, ops, cfg, node_ids=None):
    """PHS RBF-FD weights with monomial augmentation; returns ``(B, n, len(ops))``.

    Solves the saddle system ``[[Phi, P], [P^T, 0]] [w; lam] = [l_phi; l_p]``
    by LU with partial pivoting and discards the multipliers.
    """
    ops = list(ops)
    B, n = indices.shape
    d = positions.shape[1]
    basis = MonomialBasis(cfg.m, d)
    s = basis.size
    if n < s and not cfg.allow_degenerate:
        raise ConfigError(f"stencil size {n} below monomial basis size {s}")
    lp = _operator_rhs(basis, ops)
    out = np.empty((B, n, len(ops)))
    for start in range(0, B, CHUNK):
        sl = slice(start, start + CHUNK)
        X, radius = local_coordinates(positions, indices[sl])
        b = X.shape[0]
        diff = X[:, :, None, :] - X[:, None, :, :]
        Phi = phs_eval(cfg.k, np.sqrt((diff * diff).sum(axis=-1)))
        P = basis.evaluate(X)
        M = np.zeros((b, n + s, n + s))
        M[:, :n, :n] = Phi
        M[:, :n, n:] = P
        M[:, n:, :n] = P.transpose(0, 2, 1)
        rhs = np.empty((b, n + s, len(ops)))
        for j, op in enumerate(ops):
            rhs[:, :n, j] = phs_apply_operator(op, cfg.k, -X)
        rhs[:, n:, :] = lp
        ids = None if node_ids is None else node_ids[sl]
        out[sl] = _scale(_saddle_solve(M, rhs, cfg.allow_degenerate, ids)[:, :n], radius, ops)
    return out


def _saddle_solve(M, rhs, allow_degenerate, ids):
    if allow_degenerate:
        return np.stack([np.linalg.lstsq(m, r, rcond=None)[0] for m, r in zip(M, rhs)])
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        for i, m in enumerate(M):
            try:
                np.linalg.solve(m, rhs[i])
            except np.linalg.LinAlgError:
                raise DegenerateStencil("RBF-FD augmented matrix is singular",
                                        node=i if ids is None else int(ids[i])) from None
        raise


def wls_weights(stencil, nodes, op, cfg):
    """Weights of a single stencil (convenience wrapper over :func:`wls_batch`)."""
    positions = getattr(nodes, "positions", nodes)
    idx = np.asarray(stencil.neighbor_indices)[None, :]
    return wls_batch(np.asarray(positions, float), idx, [op], cfg,
                     node_ids=np.array([stencil.center_index]))[0, :, 0]


def rbffd_weights(stencil, nodes, op, cfg):
    positions = getattr(nodes, "positions", nodes)
    idx = np.asarray(stencil.neighbor_indices)[None, :]
    return rbffd_batch(np.asarray(positions, float), idx, [op], cfg,
                       node_ids=np.array([stencil.center_index]))[0, :, 0]
