"""Scattered node generation with spatially variable spacing.

Boundary nodes are placed first (arcs/edges by inverting the cumulative
density ``1/h``, box faces by a constrained advancing front), then the
interior is filled by an advancing front: each accepted node proposes
candidates at distance ``h`` in randomly rotated directions and a candidate is
kept iff it lies inside the domain and no node is closer than
``accept_factor * h(candidate)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .exceptions import ConfigError, DiscretizationError

_KIND_BALL = 0
_KIND_BOX = 1


@dataclass(frozen=True)
class Disc2D:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if len(self.center) != 2:
            raise ConfigError("Disc2D center must be a 2D point")
        if not self.radius > 0:
            raise ConfigError("Disc2D radius must be positive")

    @property
    def dim(self):
        return 2

    @property
    def diameter(self):
        return 2.0 * self.radius

    def contains(self, x, tol=1e-12):
        x = np.atleast_2d(x)
        return np.linalg.norm(x - np.asarray(self.center), axis=1) <= self.radius + tol

    def surface_distance(self, x):
        """Signed distance to the rim, positive inside."""
        x = np.atleast_2d(x)
        return self.radius - np.linalg.norm(x - np.asarray(self.center), axis=1)

    def outward_normal(self, x):
        x = np.atleast_2d(x)
        r = x - np.asarray(self.center)
        return r / np.linalg.norm(r, axis=1, keepdims=True)


@dataclass(frozen=True)
class Box3D:
    lo: tuple = (0.0, 0.0, 0.0)
    hi: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if len(self.lo) != 3 or len(self.hi) != 3:
            raise ConfigError("Box3D corners must be 3D points")
        if not all(a < b for a, b in zip(self.lo, self.hi)):
            raise ConfigError("Box3D requires lo < hi componentwise")

    @property
    def dim(self):
        return 3

    @property
    def diameter(self):
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def contains(self, x, tol=1e-12):
        x = np.atleast_2d(x)
        return np.all((x >= np.asarray(self.lo) - tol) & (x <= np.asarray(self.hi) + tol), axis=1)

    def surface_distance(self, x):
        x = np.atleast_2d(x)
        return np.minimum(x - np.asarray(self.lo), np.asarray(self.hi) - x).min(axis=1)

    def outward_normal(self, x, tol=1e-12):
        """Normal on faces; normalized sum of face normals on edges and corners."""
        x = np.atleast_2d(x)
        n = np.zeros_like(x)
        n[np.abs(x - np.asarray(self.lo)) <= tol] = -1.0
        n[np.abs(x - np.asarray(self.hi)) <= tol] = 1.0
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)


@dataclass(frozen=True)
class SpacingFunction:
    """Nodal spacing ``h(x) = min(dx + (Dx - dx) * |x - x_s|**exponent, Dx)``."""

    dx: float
    Dx: float
    x_s: tuple
    exponent: float = 1.5

    def __post_init__(self):
        if not (0 < self.dx <= self.Dx):
            raise ConfigError(f"need 0 < dx <= Dx, got dx={self.dx}, Dx={self.Dx}")

    @classmethod
    def constant(cls, h, dim):
        return cls(h, h, (0.0,) * dim)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x - np.asarray(self.x_s, dtype=float), axis=-1)
        return np.minimum(self.dx + (self.Dx - self.dx) * r**self.exponent, self.Dx)


def eval_spacing(sf, x):
    return float(sf(x)) if np.ndim(x) == 1 else sf(x)


@dataclass
class NodeSet:
    positions: np.ndarray
    boundary_mask: np.ndarray
    normals: np.ndarray
    spacing: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=float)
        self.boundary_mask = np.asarray(self.boundary_mask, dtype=bool)
        self.normals = np.asarray(self.normals, dtype=float)
        self.spacing = np.asarray(self.spacing, dtype=float)
        for arr in (self.positions, self.boundary_mask, self.normals, self.spacing):
            arr.setflags(write=False)

    def __len__(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]

    @property
    def boundary(self):
        return np.flatnonzero(self.boundary_mask)

    @property
    def interior(self):
        return np.flatnonzero(~self.boundary_mask)

    def to_csv(self, path):
        axes = "xyz"[: self.dim]
        header = list(axes) + ["boundary"] + [f"n{a}" for a in axes] + ["h"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for p, b, nv, h in zip(self.positions, self.boundary_mask, self.normals, self.spacing):
                w.writerow([repr(float(v)) for v in p] + [int(b)] + [repr(float(v)) for v in nv] + [repr(float(h))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
        d = header.index("boundary")
        return cls(data[:, :d], data[:, d].astype(bool), data[:, d + 1 : 2 * d + 1], data[:, -1])


# --- numba kernel ----------------------------------------------------------


@numba.njit(cache=True)
def _spacing(p, dx, Dx, xs, expo):
    r = np.sqrt(((p - xs) ** 2).sum())
    return min(dx + (Dx - dx) * r**expo, Dx)


@numba.njit(cache=True)
def _inside(p, kind, a, b, tol):
    if kind == _KIND_BALL:
        return np.sqrt(((p - a) ** 2).sum()) <= b[0] + tol
    for i in range(3):
        if p[i] < a[i] - tol or p[i] > b[i] + tol:
            return False
    return True


@numba.njit(cache=True)
def _surface_distance(p, kind, a, b):
    if kind == _KIND_BALL:
        return b[0] - np.sqrt(((p - a) ** 2).sum())
    d = np.inf
    for i in range(3):
        if b[i] > a[i]:  # degenerate (face) axes carry no boundary
            d = min(d, p[i] - a[i], b[i] - p[i])
    return d


@numba.njit(cache=True)
def _random_rotation3():
    q = np.random.standard_normal(4)
    q /= np.sqrt((q * q).sum())
    w, x, y, z = q[0], q[1], q[2], q[3]
    R = np.empty((3, 3))
    R[0, 0] = 1 - 2 * (y * y + z * z)
    R[0, 1] = 2 * (x * y - z * w)
    R[0, 2] = 2 * (x * z + y * w)
    R[1, 0] = 2 * (x * y + z * w)
    R[1, 1] = 1 - 2 * (x * x + z * z)
    R[1, 2] = 2 * (y * z - x * w)
    R[2, 0] = 2 * (x * z - y * w)
    R[2, 1] = 2 * (y * z + x * w)
    R[2, 2] = 1 - 2 * (x * x + y * y)
    return R


@numba.njit(cache=True)
def _advance_front(existing, expand_from, kind, a, b, tangents, dirs, dx, Dx, xs, expo,
                   accept, margin, seed, max_new):
    np.random.seed(seed)
    k = tangents.shape[0]
    n_cand = dirs.shape[0]

    lo = np.empty(3)
    hi = np.empty(3)
    if kind == _KIND_BALL:
        # only used for the planar disc: the grid is flat in z
        for i in range(2):
            lo[i] = a[i] - b[0]
            hi[i] = a[i] + b[0]
        lo[2] = hi[2] = a[2]
    else:
        lo[:] = a
        hi[:] = b
    cs = accept * dx
    shape = np.empty(3, dtype=np.int64)
    for i in range(3):
        shape[i] = max(1, int(np.ceil((hi[i] - lo[i]) / cs)) + 1)
    head = -np.ones(shape[0] * shape[1] * shape[2], dtype=np.int64)

    cap = existing.shape[0] + 1024
    pts = np.empty((cap, 3))
    nxt = -np.ones(cap, dtype=np.int64)
    count = 0

    for j in range(existing.shape[0]):
        pts[count] = existing[j]
        c0 = min(max(int((pts[count, 0] - lo[0]) / cs), 0), shape[0] - 1)
        c1 = min(max(int((pts[count, 1] - lo[1]) / cs), 0), shape[1] - 1)
        c2 = min(max(int((pts[count, 2] - lo[2]) / cs), 0), shape[2] - 1)
        cell = (c0 * shape[1] + c1) * shape[2] + c2
        nxt[count] = head[cell]
        head[cell] = count
        count += 1
    n_existing = count

    queue = np.empty(cap, dtype=np.int64)
    qn = 0
    for j in range(expand_from.shape[0]):
        queue[qn] = expand_from[j]
        qn += 1
    qi = 0

    cand = np.empty(3)
    d3 = np.empty(3)
    while qi < qn and count - n_existing < max_new:
        p = pts[queue[qi]].copy()
        qi += 1
        hp = _spacing(p, dx, Dx, xs, expo)
        if k == 3:
            R = _random_rotation3()
        else:
            phi = 2.0 * np.pi * np.random.random()
            cph, sph = np.cos(phi), np.sin(phi)
        for c in range(n_cand):
            d3[:] = 0.0
            if k == 3:
                for i in range(3):
                    s = R[i, 0] * dirs[c, 0] + R[i, 1] * dirs[c, 1] + R[i, 2] * dirs[c, 2]
                    d3 += s * tangents[i]
            elif k == 2:
                u = cph * dirs[c, 0] - sph * dirs[c, 1]
                v = sph * dirs[c, 0] + cph * dirs[c, 1]
                d3 += u * tangents[0] + v * tangents[1]
            else:
                d3 += dirs[c, 0] * tangents[0]
            for i in range(3):
                cand[i] = p[i] + hp * d3[i]
            if not _inside(cand, kind, a, b, 1e-12):
                continue
            hc = _spacing(cand, dx, Dx, xs, expo)
            if _surface_distance(cand, kind, a, b) < margin * hc:
                continue
            r = accept * hc
            ok = True
            i0 = max(int((cand[0] - r - lo[0]) / cs), 0)
            i1 = min(int((cand[0] + r - lo[0]) / cs), shape[0] - 1)
            j0 = max(int((cand[1] - r - lo[1]) / cs), 0)
            j1 = min(int((cand[1] + r - lo[1]) / cs), shape[1] - 1)
            l0 = max(int((cand[2] - r - lo[2]) / cs), 0)
            l1 = min(int((cand[2] + r - lo[2]) / cs), shape[2] - 1)
            r2 = r * r
            for ci in range(i0, i1 + 1):
                if not ok:
                    break
                for cj in range(j0, j1 + 1):
                    if not ok:
                        break
                    for cl in range(l0, l1 + 1):
                        q = head[(ci * shape[1] + cj) * shape[2] + cl]
                        while q >= 0:
                            dd = (pts[q, 0] - cand[0]) ** 2 + (pts[q, 1] - cand[1]) ** 2 + (pts[q, 2] - cand[2]) ** 2
                            if dd < r2:
                                ok = False
                                break
                            q = nxt[q]
                        if not ok:
                            break
            if not ok:
                continue
            if count == cap:
                cap *= 2
                pts2 = np.empty((cap, 3))
                pts2[:count] = pts[:count]
                pts = pts2
                nxt2 = -np.ones(cap, dtype=np.int64)
                nxt2[:count] = nxt[:count]
                nxt = nxt2
                queue2 = np.empty(cap, dtype=np.int64)
                queue2[:qn] = queue[:qn]
                queue = queue2
            pts[count] = cand
            c0 = min(max(int((cand[0] - lo[0]) / cs), 0), shape[0] - 1)
            c1 = min(max(int((cand[1] - lo[1]) / cs), 0), shape[1] - 1)
            c2 = min(max(int((cand[2] - lo[2]) / cs), 0), shape[2] - 1)
            cell = (c0 * shape[1] + c1) * shape[2] + c2
            nxt[count] = head[cell]
            head[cell] = count
            queue[qn] = count
            qn += 1
            count += 1
    return pts[n_existing:count].copy()


def _circle_dirs(n):
    t = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(t), np.sin(t)])


def _sphere_dirs(n):
    """Fibonacci lattice on the unit sphere."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + 5**0.5) * i
    r = np.sqrt(1.0 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _pad3(x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.hstack([x, np.zeros((x.shape[0], 3 - x.shape[1]))])


def _sf_args(sf, dim):
    xs = np.zeros(3)
    xs[:dim] = np.asarray(sf.x_s, dtype=float)[:dim]
    return float(sf.dx), float(sf.Dx), xs, float(sf.exponent)


def _fill_segment(a, b, sf, include_ends=False, samples=2048):
    """Nodes along segment a->b with spacing ~h, by equidistributing the density 1/h."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    t = np.linspace(0.0, 1.0, samples)
    pts = a + t[:, None] * (b - a)
    dens = np.linalg.norm(b - a) / sf(pts)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(t))])
    nseg = max(1, int(round(cum[-1])))
    targets = cum[-1] * np.arange(0 if include_ends else 1, nseg + (1 if include_ends else 0)) / nseg
    tt = np.interp(targets, cum, t)
    return a + tt[:, None] * (b - a)


def _check_coarseness(domain, sf, sample):
    if np.min(sf(sample)) > domain.diameter:
        raise DiscretizationError("spacing exceeds domain diameter; no boundary nodes can be placed")


def fill_boundary(domain, sf, seed=0, n_candidates=None, accept_factor=0.9):
    """Place nodes on the domain boundary with local spacing ~h and outward normals."""
    rng = np.random.default_rng(seed)
    if isinstance(domain, Disc2D):
        c, R = np.asarray(domain.center, float), domain.radius
        samples = 4096
        th = np.linspace(0.0, 2.0 * np.pi, samples)
        ring = c + R * np.column_stack([np.cos(th), np.sin(th)])
        _check_coarseness(domain, sf, ring)
        theta0 = rng.uniform(0.0, 2.0 * np.pi)
        th = theta0 + th
        ring = c + R * np.column_stack([np.cos(th), np.sin(th)])
        dens = R / sf(ring)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(th))])
        n = max(1, int(round(cum[-1])))
        ang = np.interp(cum[-1] * np.arange(n) / n, cum, th)
        pos = c + R * np.column_stack([np.cos(ang), np.sin(ang)])
        normals = domain.outward_normal(pos)
    elif isinstance(domain, Box3D):
        lo, hi = np.asarray(domain.lo, float), np.asarray(domain.hi, float)
        corners = np.array([[(lo, hi)[(i >> a) & 1][a] for a in range(3)] for i in range(8)])
        grid = np.stack(np.meshgrid(*[np.linspace(lo[a], hi[a], 9) for a in range(3)], indexing="ij"), -1)
        _check_coarseness(domain, sf, grid.reshape(-1, 3))
        pts = [corners]
        for i in range(8):
            for a in range(3):
                j = i | (1 << a)
                if j != i:
                    pts.append(_fill_segment(corners[i], corners[j], sf))
        pts = np.vstack(pts)
        n_cand = n_candidates or 15
        dx, Dx, xs, expo = _sf_args(sf, 3)
        for axis in range(3):
            for side in (lo, hi):
                flo, fhi = lo.copy(), hi.copy()
                flo[axis] = fhi[axis] = side[axis]
                on_face = np.flatnonzero(np.abs(pts[:, axis] - side[axis]) <= 1e-12)
                tangents = np.eye(3)[[t for t in range(3) if t != axis]]
                new = _advance_front(pts, on_face.astype(np.int64), _KIND_BOX, flo, fhi, tangents,
                                     _circle_dirs(n_cand), dx, Dx, xs, expo, accept_factor, 0.5,
                                     int(rng.integers(2**31)), 10**8)
                pts = np.vstack([pts, new])
        pos = pts
        normals = domain.outward_normal(pos)
    else:
        raise ConfigError(f"unsupported domain {domain!r}")
    return NodeSet(pos, np.ones(len(pos), bool), normals, sf(pos))


def fill_interior(domain, sf, boundary, seed=0, n_candidates=None, accept_factor=0.9, margin=0.5,
                  max_nodes=10**8):
    """Advancing-front fill of the interior, seeded from the boundary nodes."""
    d = domain.dim
    if n_candidates is None:
        n_candidates = 15 if d == 2 else 30
    rng = np.random.default_rng([seed, 1])
    if isinstance(domain, Disc2D):
        kind, a, b = _KIND_BALL, _pad3(domain.center)[0], np.array([domain.radius, 0.0, 0.0])
        dirs, tangents = _circle_dirs(n_candidates), np.eye(3)[:2]
    else:
        kind, a, b = _KIND_BOX, np.asarray(domain.lo, float), np.asarray(domain.hi, float)
        dirs, tangents = _sphere_dirs(n_candidates), np.eye(3)
    dx, Dx, xs, expo = _sf_args(sf, d)
    existing = _pad3(boundary.positions)
    new = _advance_front(existing, np.arange(len(existing), dtype=np.int64), kind, a, b, tangents, dirs,
                         dx, Dx, xs, expo, accept_factor, margin, int(rng.integers(2**31)), max_nodes)
    new = new[:, :d]
    pos = np.vstack([boundary.positions, new])
    mask = np.concatenate([np.ones(len(boundary), bool), np.zeros(len(new), bool)])
    normals = np.vstack([boundary.normals, np.zeros((len(new), d))])
    return NodeSet(pos, mask, normals, sf(pos))


def discretize(domain, sf, seed=0, n_candidates=None, accept_factor=0.9):
    """Boundary then interior; deterministic for a fixed seed."""
    bnd = fill_boundary(domain, sf, seed=seed, accept_factor=accept_factor)
    nodes = fill_interior(domain, sf, bnd, seed=seed, n_candidates=n_candidates, accept_factor=accept_factor)
    nodes.meta.update(seed=seed, dx=sf.dx, Dx=sf.Dx)
    return nodes
