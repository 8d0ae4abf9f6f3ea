"""Sparse direct LU and ILUT-preconditioned BiCGSTAB."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ConfigError, SingularSystem

CONVERGED = "converged"
MAX_ITER = "max_iter"
BREAKDOWN = "breakdown"
DIVERGED = "diverged"
PRECONDITIONER_FAILED = "preconditioner_failed"


@dataclass(frozen=True)
class SolverConfig:
    method: str = "lu"
    tol: float = 1e-14
    max_iter: int = 500
    ilut_drop_tol: float = 1e-5
    ilut_fill_factor: float = 30
    divergence_factor: float = 1e3  # stop once the scaled residual exceeds this
    equilibrate: bool = True  # row scaling before the incomplete factorization

    def __post_init__(self):
        if self.method not in ("lu", "bicgstab"):
            raise ConfigError(f"unknown solver method {self.method!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.ilut_fill_factor < 1:
            raise ConfigError("ilut_fill_factor must be >= 1")
        if not self.divergence_factor > 1:
            raise ConfigError("divergence_factor must be > 1")


@dataclass
class SolveReport:
    method: str
    status: str
    iterations: int
    residual: float
    wall_time: float
    threads: int = 1

    @property
    def converged(self):
        return self.status == CONVERGED

    def to_dict(self):
        return asdict(self)


def relative_residual(A, x, b):
    bn = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return float(r / bn) if bn > 0 else float(r)


def solve(system, cfg=None):
    """Solve ``system.matrix @ x = system.rhs``; returns ``(x, SolveReport)``.

    Iterative non-convergence is reported through ``SolveReport.status`` and
    the last iterate is returned. The reported residual is recomputed from ``x``.
    """
    cfg = cfg or SolverConfig()
    A, b = system.matrix, np.asarray(system.rhs, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ConfigError(f"system must be square, got {A.shape}")
    A = sp.csc_matrix(A)
    t0 = time.perf_counter()
    if cfg.method == "lu":
        x, status, iters = _solve_lu(A, b), CONVERGED, 0
    else:
        x, status, iters = _solve_bicgstab(A, b, cfg)
    wall = time.perf_counter() - t0
    with np.errstate(all="ignore"):
        res = relative_residual(A, x, b)
    if cfg.method == "lu" and not np.isfinite(res):
        status = BREAKDOWN
    return x, SolveReport(cfg.method, status, iters, res, wall)


def _solve_lu(A, b):
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from exc
    return lu.solve(b)


def _row_equilibrate(A, b):
    # boundary identity rows and h^-2 interior rows differ by orders of magnitude;
    # the incomplete factorization breaks down without this
    s = np.asarray(abs(A).max(axis=1).todense()).ravel()
    s = 1.0 / np.where(s > 0, s, 1.0)
    return sp.csc_matrix(sp.diags(s) @ A), s * b


class _Diverged(Exception):
    def __init__(self, x):
        self.x = x


def _solve_bicgstab(A, b, cfg):
    As, bs = _row_equilibrate(A, b) if cfg.equilibrate else (A, b)
    try:
        ilu = spla.spilu(As, drop_tol=cfg.ilut_drop_tol, fill_factor=cfg.ilut_fill_factor)
    except RuntimeError:
        return np.full_like(b, np.nan), PRECONDITIONER_FAILED, 0
    M = spla.LinearOperator(As.shape, ilu.solve)
    x0 = ilu.solve(bs)
    count = [0]
    bnorm = np.linalg.norm(bs) or 1.0

    def _cb(xk):
        count[0] += 1
        r = np.linalg.norm(bs - As @ xk) / bnorm
        if not np.isfinite(r) or r > cfg.divergence_factor:
            raise _Diverged(xk)

    with np.errstate(all="ignore"):
        try:
            x, info = spla.bicgstab(As, bs, x0=x0, rtol=cfg.tol, atol=0.0, maxiter=cfg.max_iter, M=M,
                                    callback=_cb)
        except _Diverged as exc:
            x, info = exc.x, cfg.max_iter
        res = relative_residual(A, x, b)
    if not np.all(np.isfinite(x)):
        status = BREAKDOWN
    elif info == 0 or res <= cfg.tol:
        status = CONVERGED
    elif info < 0:
        status = BREAKDOWN
    elif res > 1.0:
        status = DIVERGED
    else:
        status = MAX_ITER
    return x, status, count[0]
