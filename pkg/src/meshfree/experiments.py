"""Benchmark drivers: 2D strong-source Poisson study and 3D Boussinesq problem."""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .approximation import (
    LAPLACIAN,
    Engine,
    EngineAssignment,
    RBFConfig,
    WLSConfig,
    assign_engines,
    compute_shapes,
    first_partials,
    second_partials,
)
from .assembly import assemble_cauchy_navier, assemble_poisson
from .domain import Box3D, Disc2D, SpacingFunction, discretize
from .exceptions import ConfigError, MeshfreeError
from .problems import BoussinesqProblem, PoissonProblem
from .solver import CONVERGED, SolverConfig, solve
from .stencil import find_stencils, stencil_size

log = logging.getLogger(__name__)

ENGINES = ("wls", "rbffd", "hybrid")
CSV_COLUMNS = ["problem", "engine", "m", "Dx", "seed", "N", "N_rbffd", "e_inf", "t_shape_s", "t_solve_s",
               "solver_status", "t_stencil_s", "iterations", "residual"]
TIMING_COLUMNS = ("t_shape_s", "t_solve_s", "t_stencil_s")


@dataclass
class ExperimentConfig:
    problem: str = "poisson2d"
    orders: tuple = (2, 4, 6)
    engines: tuple = ENGINES
    phs_k: int = 5
    r_s: float | None = None
    Dx_values: tuple | None = None
    dx_min: float = 0.016
    dx_max: float = 0.1
    dx_count: int = 30
    refinement: float = 5.0
    exponent: float = 1.5
    runs: int = 100
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    wls_weight: str = "gaussian"
    wls_sigma: float | None = None
    alpha: float = 1e3
    source: tuple = (0.5, 0.5)
    dump_system: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.problem not in ("poisson2d", "boussinesq3d"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        bad = set(self.engines) - set(ENGINES)
        if bad:
            raise ConfigError(f"unknown engines {sorted(bad)}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.dx_count < 1 or not 0 < self.dx_min <= self.dx_max:
            raise ConfigError("need 0 < dx_min <= dx_max and dx_count >= 1")
        self.orders = tuple(int(m) for m in self.orders)
        self.engines = tuple(self.engines)
        self.source = tuple(float(v) for v in self.source)
        if self.Dx_values is not None:
            self.Dx_values = tuple(float(v) for v in self.Dx_values)

    @classmethod
    def boussinesq(cls, **kw):
        """Defaults for the 3D problem: m = 4, r_s = 0.5, BiCGSTAB + ILUT, Gaussian WLS with sigma 1.5.

        Dx = 0.046 with dx = Dx / 3 and exponent 1.5 gives about 19000 nodes,
        a third of them within r_s of the loaded corner.
        """
        base = dict(problem="boussinesq3d", orders=(4,), r_s=0.5, dx_min=0.046, dx_max=0.046, dx_count=1,
                    refinement=3.0, exponent=1.5, runs=1, wls_sigma=1.5,
                    solver=SolverConfig(method="bicgstab"))
        base.update(kw)
        return cls(**base)

    @property
    def dim(self):
        return 2 if self.problem == "poisson2d" else 3

    @property
    def rs(self):
        return self.r_s if self.r_s is not None else (0.15 if self.dim == 2 else 0.5)

    @property
    def sigma(self):
        return self.wls_sigma if self.wls_sigma is not None else (1.0 if self.dim == 2 else 1.5)

    @property
    def Dx_sweep(self):
        if self.Dx_values is not None:
            return tuple(float(v) for v in self.Dx_values)
        return tuple(float(v) for v in np.geomspace(self.dx_max, self.dx_min, self.dx_count))

    def to_dict(self):
        d = asdict(self)
        d["solver"] = asdict(self.solver)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if isinstance(d.get("solver"), dict):
            d["solver"] = SolverConfig(**d["solver"])
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunRecord:
    problem: str
    engine: str
    m: int
    Dx: float
    seed: int
    N: int
    N_rbffd: int  # nodes labelled RBF-FD, boundary nodes included
    e_inf: float
    t_shape_s: float
    t_solve_s: float
    solver_status: str
    t_stencil_s: float = 0.0
    iterations: int = 0
    residual: float = float("nan")

    @property
    def N_wls(self):
        return self.N - self.N_rbffd


def error_inf(numeric, analytic):
    """Relative max-norm error; vector fields are compared through their magnitudes."""
    numeric = np.asarray(numeric, dtype=float)
    analytic = np.asarray(analytic, dtype=float)
    if numeric.shape != analytic.shape:
        raise ValueError(f"shape mismatch {numeric.shape} vs {analytic.shape}")
    if numeric.ndim == 2:
        numeric = np.linalg.norm(numeric, axis=1)
        analytic = np.linalg.norm(analytic, axis=1)
    scale = np.max(np.abs(analytic))
    if not scale > 0:
        raise ValueError("analytic field is identically zero")
    diff = np.abs(numeric - analytic)
    if np.isnan(diff).any():
        return float("nan")
    return float(diff.max() / scale)


def run_seed(base, *keys):
    return int(np.random.SeedSequence([int(base), *map(int, keys)]).generate_state(1)[0] & 0x7FFFFFFF)


def _assignment(engine, nodes, center, r_s):
    if engine == "wls":
        return EngineAssignment.uniform(len(nodes), Engine.WLS)
    if engine == "rbffd":
        return EngineAssignment.uniform(len(nodes), Engine.RBFFD)
    return assign_engines(nodes, center, r_s)


def poisson_nodes(cfg, Dx, seed):
    sf = SpacingFunction(Dx / cfg.refinement, Dx, tuple(cfg.source), cfg.exponent)
    return discretize(Disc2D(), sf, seed=seed)


def _solve_record(problem, engine, m, Dx, seed, nodes, assignment, shapes, system, analytic, cfg, t_stencil,
                  dump=None):
    x, rep = solve(system, cfg.solver)
    if dump is not None:
        system.to_matrix_market(dump.with_suffix(".mtx"), dump.with_name(dump.name + "_rhs.mtx"))
    e = error_inf(system.unpack(x), analytic) if rep.status == CONVERGED else float("nan")
    return RunRecord(problem, engine, m, Dx, seed, len(nodes), assignment.n_rbffd, e, shapes.t_shape,
                     rep.wall_time, rep.status, t_stencil, rep.iterations, rep.residual)


def _failed(problem, engine, m, Dx, seed, N, exc):
    log.warning("%s %s m=%d Dx=%g seed=%d failed: %s", problem, engine, m, Dx, seed, exc)
    return RunRecord(problem, engine, m, Dx, seed, N, 0, float("nan"), float("nan"), float("nan"),
                     f"error:{type(exc).__name__}")


def run_poisson_study(cfg, progress=None):
    """Convergence/spread sweep: every Dx, every run, every order and engine.

    Each run re-discretizes with a fresh seed; all orders and engines of one
    run share the node set so engines are compared on identical geometry.
    """
    pb = PoissonProblem(cfg.alpha, tuple(cfg.source))
    records = []
    with threadpool_limits(1):
        for i, Dx in enumerate(cfg.Dx_sweep):
            for run in range(cfg.runs):
                seed = run_seed(cfg.seed, i, run)
                nodes = poisson_nodes(cfg, Dx, seed)
                u = pb.u(nodes.positions)
                for m in cfg.orders:
                    t0 = time.perf_counter()
                    try:
                        st = find_stencils(nodes, stencil_size(m, 2))
                    except MeshfreeError as exc:
                        records.extend(_failed(cfg.problem, e, m, Dx, seed, len(nodes), exc) for e in cfg.engines)
                        continue
                    t_st = time.perf_counter() - t0
                    for engine in cfg.engines:
                        try:
                            a = _assignment(engine, nodes, cfg.source, cfg.rs)
                            sh = compute_shapes(nodes, st, [LAPLACIAN], a,
                                                WLSConfig(m=m, weight=cfg.wls_weight, sigma=cfg.sigma),
                                                RBFConfig(m=m, k=cfg.phs_k), only=nodes.interior)
                            system = assemble_poisson(nodes, sh, pb.f_lap, pb.u)
                            dump = _dump_path(cfg, engine, m, i, run)
                            rec = _solve_record(cfg.problem, engine, m, Dx, seed, nodes, a, sh, system, u, cfg,
                                                t_st, dump)
                        except (MeshfreeError, np.linalg.LinAlgError) as exc:
                            rec = _failed(cfg.problem, engine, m, Dx, seed, len(nodes), exc)
                        records.append(rec)
                        if progress:
                            progress(rec)
    return records


def _dump_path(cfg, engine, m, i, run):
    if not (cfg.dump_system and cfg.out):
        return None
    d = Path(cfg.out) / "systems"
    d.mkdir(parents=True, exist_ok=True)
    return d / f"{cfg.problem}_{engine}_m{m}_dx{i}_run{run}"


def boussinesq_nodes(cfg, seed, Dx=None):
    Dx = cfg.Dx_sweep[0] if Dx is None else Dx
    corner = (-0.1, -0.1, -0.1)
    sf = SpacingFunction(Dx / cfg.refinement, Dx, corner, cfg.exponent)
    return discretize(Box3D((-1.0, -1.0, -1.0), corner), sf, seed=seed)


def run_boussinesq(cfg, progress=None):
    """One record per engine (and per run/Dx/order when configured): the Table I quantities."""
    pb = BoussinesqProblem()
    corner = (-0.1, -0.1, -0.1)
    ops = first_partials(3) + second_partials(3)
    records = []
    with threadpool_limits(1):
        for i, Dx in enumerate(cfg.Dx_sweep):
            for run in range(cfg.runs):
                seed = run_seed(cfg.seed, i, run)
                nodes = boussinesq_nodes(cfg, seed, Dx)
                u = pb.displacement(nodes.positions)
                for m in cfg.orders:
                    t0 = time.perf_counter()
                    st = find_stencils(nodes, stencil_size(m, 3))
                    t_st = time.perf_counter() - t0
                    for engine in cfg.engines:
                        try:
                            a = _assignment(engine, nodes, corner, cfg.rs)
                            sh = compute_shapes(nodes, st, ops, a,
                                                WLSConfig(m=m, weight=cfg.wls_weight, sigma=cfg.sigma),
                                                RBFConfig(m=m, k=cfg.phs_k), only=nodes.interior)
                            system = assemble_cauchy_navier(nodes, sh, pb.lam, pb.mu, None, pb.displacement)
                            dump = _dump_path(cfg, engine, m, i, run)
                            rec = _solve_record(cfg.problem, engine, m, Dx, seed, nodes, a, sh, system, u, cfg,
                                                t_st, dump)
                        except (MeshfreeError, np.linalg.LinAlgError) as exc:
                            rec = _failed(cfg.problem, engine, m, Dx, seed, len(nodes), exc)
                        records.append(rec)
                        if progress:
                            progress(rec)
    return records


def run_timing_study(cfg, Dx, repeats=10, m=4):
    """Mean shape time per engine over ``repeats`` passes on one fixed 2D discretization."""
    nodes = poisson_nodes(cfg, Dx, run_seed(cfg.seed, 0, 0))
    st = find_stencils(nodes, stencil_size(m, 2))
    out = {}
    with threadpool_limits(1):
        for engine in cfg.engines:
            a = _assignment(engine, nodes, cfg.source, cfg.rs)
            times = []
            for _ in range(repeats):
                sh = compute_shapes(nodes, st, [LAPLACIAN], a,
                                    WLSConfig(m=m, weight=cfg.wls_weight, sigma=cfg.sigma),
                                    RBFConfig(m=m, k=cfg.phs_k), only=nodes.interior)
                times.append(sh.t_shape)
            out[engine] = {"N": len(nodes), "N_rbffd": a.n_rbffd, "t_shape_mean": float(np.mean(times)),
                           "t_shape_all": times}
    return out


# --- aggregation and output ------------------------------------------------


def normalized_spread(values):
    """Inter-decile range over the median."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if len(v) == 0:
        return float("nan")
    med = np.median(v)
    return float((np.percentile(v, 90) - np.percentile(v, 10)) / med) if med > 0 else float("nan")


def aggregate(records):
    groups = {}
    for r in records:
        groups.setdefault((r.problem, r.engine, r.m, r.Dx), []).append(r)
    rows = []
    for (problem, engine, m, Dx), rs in groups.items():
        e = np.array([r.e_inf for r in rs])
        finite = e[np.isfinite(e)]
        rows.append({
            "problem": problem, "engine": engine, "m": m, "Dx": Dx, "runs": len(rs),
            "failed": int(len(rs) - len(finite)),
            "N_median": float(np.median([r.N for r in rs])),
            "N_rbffd_percent": float(np.mean([100.0 * r.N_rbffd / r.N for r in rs])),
            "e_inf_median": float(np.median(finite)) if len(finite) else float("nan"),
            "e_inf_spread": normalized_spread(e),
            "t_shape_mean": float(np.nanmean([r.t_shape_s for r in rs])),
        })
    return rows


def convergence_order(rows, engine, m, dim=2):
    """Observed order p of ``median e_inf ~ h**p`` with ``h ~ N**(-1/dim)`` (least-squares fit)."""
    sel = [r for r in rows if r["engine"] == engine and r["m"] == m and np.isfinite(r["e_inf_median"])]
    if len(sel) < 2:
        return float("nan")
    N = np.array([r["N_median"] for r in sel])
    e = np.array([r["e_inf_median"] for r in sel])
    slope = np.polyfit(np.log(N), np.log(e), 1)[0]
    return float(-dim * slope)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_runs_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])


def read_runs_csv(path):
    ints = {"m", "seed", "N", "N_rbffd", "iterations"}
    strs = {"problem", "engine", "solver_status"}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {k: (v if k in strs else int(v) if k in ints else float(v)) for k, v in row.items()}
            out.append(RunRecord(**kw))
    return out


def emit_results(records, path, cfg=None, extra=None):
    """Write ``runs.csv`` and ``aggregate.json`` into directory ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    write_runs_csv(records, path / "runs.csv")
    rows = aggregate(records)
    dim = cfg.dim if cfg is not None else 2
    orders = {}
    for engine in sorted({r["engine"] for r in rows}):
        for m in sorted({r["m"] for r in rows}):
            orders[f"{engine}/m{m}"] = convergence_order(rows, engine, m, dim)
    payload = {"config": cfg.to_dict() if cfg is not None else None, "groups": rows,
               "convergence_order": orders}
    if extra:
        payload.update(extra)
    with open(path / "aggregate.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
    return path / "runs.csv", path / "aggregate.json"
