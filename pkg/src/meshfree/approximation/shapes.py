"""Per-node engine assignment and the shape store."""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ..exceptions import AssemblyError
from ..stencil import Stencils
from .basis import Operator
from .engines import RBFConfig, WLSConfig, rbffd_batch, wls_batch


class Engine(IntEnum):
    WLS = 0
    RBFFD = 1


@dataclass(frozen=True)
class EngineAssignment:
    labels: np.ndarray
    center: tuple | None = None
    radius: float | None = None

    @property
    def n_rbffd(self):
        return int((self.labels == Engine.RBFFD).sum())

    @property
    def n_wls(self):
        return int((self.labels == Engine.WLS).sum())

    def __len__(self):
        return len(self.labels)

    @classmethod
    def uniform(cls, n_nodes, engine):
        return cls(np.full(n_nodes, int(Engine(engine)), dtype=np.int8))


def assign_engines(nodes, x_s, r_s):
    """RBF-FD for nodes strictly closer than ``r_s`` to ``x_s``, WLS elsewhere."""
    if r_s < 0:
        raise ValueError("r_s must be non-negative")
    positions = getattr(nodes, "positions", nodes)
    dist = np.linalg.norm(positions - np.asarray(x_s, dtype=float), axis=1)
    labels = np.where(dist < r_s, Engine.RBFFD, Engine.WLS).astype(np.int8)
    return EngineAssignment(labels, tuple(map(float, x_s)), float(r_s))


@dataclass
class ShapeStore:
    """Operator weights per node.

    ``indices`` and each ``weights[op]`` have shape ``(N, n_max)``; stencils
    shorter than ``n_max`` are padded with the center index and zero weights.
    """

    indices: np.ndarray
    sizes: np.ndarray
    weights: dict
    engine: np.ndarray
    computed: np.ndarray
    t_shape: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def operators(self):
        return list(self.weights)

    def __len__(self):
        return len(self.indices)

    def weights_of(self, node, op):
        n = self.sizes[node]
        return self.indices[node, :n], self.weights[op][node, :n]

    def apply(self, op, values):
        """Approximate ``op`` applied to nodal ``values`` at every node with shapes."""
        values = np.asarray(values, dtype=float)
        w = self.weights[op]
        out = np.einsum("ij,ij...->i...", w, values[self.indices])
        out[~self.computed] = np.nan
        return out

    def require(self, ops, nodes=None):
        missing = [op for op in ops if op not in self.weights]
        if missing:
            raise AssemblyError(f"shape store lacks operators {missing}")
        if nodes is not None and not self.computed[nodes].all():
            bad = int(np.asarray(nodes)[~self.computed[nodes]][0])
            raise AssemblyError(f"no shapes computed for node {bad}")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "operator", "engine", "indices", "weights"])
            for i in np.flatnonzero(self.computed):
                n = self.sizes[i]
                for op, W in self.weights.items():
                    w.writerow([i, op.name, Engine(self.engine[i]).name,
                                " ".join(map(str, self.indices[i, :n])),
                                " ".join(repr(float(v)) for v in W[i, :n])])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        nodes = sorted({int(r["node"]) for r in rows})
        N = max(nodes) + 1 if nodes else 0
        n_max = max((len(r["indices"].split()) for r in rows), default=0)
        indices = np.tile(np.arange(N)[:, None], (1, n_max))
        sizes = np.zeros(N, dtype=int)
        engine = np.zeros(N, dtype=np.int8)
        computed = np.zeros(N, dtype=bool)
        weights = {}
        for r in rows:
            i, op = int(r["node"]), Operator.from_name(r["operator"])
            idx = np.array(r["indices"].split(), dtype=int)
            W = weights.setdefault(op, np.zeros((N, n_max)))
            W[i, : len(idx)] = np.array(r["weights"].split(), dtype=float)
            indices[i, : len(idx)] = idx
            sizes[i] = len(idx)
            engine[i] = Engine[r["engine"]]
            computed[i] = True
        return cls(indices, sizes, weights, engine, computed)


def compute_shapes(nodes, stencils, ops, assignment, wls_cfg=None, rbf_cfg=None, only=None):
    """Weights for every requested operator, each node handled by its assigned engine.

    ``stencils`` is a :class:`Stencils` shared by both engines or a mapping
    ``{Engine: Stencils}`` when the engines use different stencil sizes.
    ``only`` optionally restricts the computation to a subset of nodes.
    Wall-clock time of the whole pass is stored in ``t_shape``.
    """
    positions = np.asarray(getattr(nodes, "positions", nodes), dtype=float)
    N = len(positions)
    ops = list(ops)
    if len(assignment) != N:
        raise ValueError("engine assignment does not cover all nodes")
    if isinstance(stencils, Stencils):
        per_engine = {Engine.WLS: stencils, Engine.RBFFD: stencils}
    else:
        per_engine = {Engine(k): v for k, v in stencils.items()}
    mask = np.ones(N, bool) if only is None else np.zeros(N, bool)
    if only is not None:
        mask[only] = True
    labels = np.asarray(assignment.labels)
    used = [e for e in Engine if (mask & (labels == e)).any()]
    n_max = max(per_engine[e].size for e in used) if used else 1

    indices = np.tile(np.arange(N)[:, None], (1, n_max))
    sizes = np.zeros(N, dtype=int)
    weights = {op: np.zeros((N, n_max)) for op in ops}

    t0 = time.perf_counter()
    for e in used:
        sel = np.flatnonzero(mask & (labels == e))
        st = per_engine[e]
        idx = st.indices[sel]
        if e == Engine.WLS:
            w = wls_batch(positions, idx, ops, wls_cfg or WLSConfig(), node_ids=sel)
        else:
            w = rbffd_batch(positions, idx, ops, rbf_cfg or RBFConfig(), node_ids=sel)
        n = st.size
        indices[sel, :n] = idx
        sizes[sel] = n
        for j, op in enumerate(ops):
            weights[op][sel, :n] = w[:, :, j]
    t_shape = time.perf_counter() - t0

    return ShapeStore(indices, sizes, weights, labels.copy(), mask, t_shape,
                      info={"n_rbffd": int((mask & (labels == Engine.RBFFD)).sum()),
                            "n_wls": int((mask & (labels == Engine.WLS)).sum()),
                            "threads": 1})
