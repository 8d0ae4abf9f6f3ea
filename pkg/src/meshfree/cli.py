"""Command line entry point: ``meshfree {poisson2d,boussinesq3d,timing2d}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .experiments import ENGINES, ExperimentConfig, emit_results, run_boussinesq, run_poisson_study, run_timing_study
from .solver import SolverConfig

log = logging.getLogger("meshfree")


def _load_config_file(path):
    text = Path(path).read_text()
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    return {k.replace("-", "_"): v for k, v in (data or {}).items()}


def _parser():
    p = argparse.ArgumentParser(prog="meshfree", description="Mesh-free WLS / RBF-FD / hybrid benchmarks")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("poisson2d", "strong-source Poisson convergence study on the unit disc"),
                        ("boussinesq3d", "Boussinesq point-load problem on a refined box"),
                        ("timing2d", "shape computation times on one fixed 2D discretization")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="YAML or JSON file with the same keys as the flags")
        s.add_argument("--engine", action="append", choices=ENGINES, help="repeatable; default: all three")
        s.add_argument("--order", action="append", type=int, help="monomial degree m; repeatable")
        s.add_argument("--phs-k", type=int)
        s.add_argument("--rs", type=float, help="hybrid RBF-FD radius around the refinement center")
        s.add_argument("--dx-min", type=float, help="finest coarse spacing Dx of the sweep")
        s.add_argument("--dx-max", type=float, help="coarsest Dx of the sweep")
        s.add_argument("--dx-count", type=int, help="number of geometrically spaced Dx values")
        s.add_argument("--refinement", type=float, help="ratio Dx/dx")
        s.add_argument("--exponent", type=float, help="spacing function exponent")
        s.add_argument("--runs", type=int, help="re-discretizations per Dx (repeats for timing2d)")
        s.add_argument("--seed", type=int)
        s.add_argument("--sigma", type=float, help="Gaussian WLS width in closest-node units")
        s.add_argument("--solver", choices=("lu", "bicgstab"))
        s.add_argument("--tol", type=float)
        s.add_argument("--max-iter", type=int)
        s.add_argument("--out", default=None, help="output directory")
        s.add_argument("--dump-system", action="store_true", help="write MatrixMarket systems")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def build_config(args):
    if args.command == "boussinesq3d":
        cfg = ExperimentConfig.boussinesq()
    else:
        cfg = ExperimentConfig(orders=(4,), runs=10) if args.command == "timing2d" else ExperimentConfig()
    if args.config:
        merged = cfg.to_dict()
        merged.update(_load_config_file(args.config))
        cfg = ExperimentConfig.from_dict(merged)
    kw = {}
    for flag, key in (("phs_k", "phs_k"), ("rs", "r_s"), ("dx_min", "dx_min"), ("dx_max", "dx_max"),
                      ("dx_count", "dx_count"), ("refinement", "refinement"), ("exponent", "exponent"),
                      ("runs", "runs"), ("seed", "seed"), ("sigma", "wls_sigma"), ("out", "out")):
        v = getattr(args, flag)
        if v is not None:
            kw[key] = v
    if args.engine:
        kw["engines"] = tuple(dict.fromkeys(args.engine))
    if args.order:
        kw["orders"] = tuple(args.order)
    if args.dump_system:
        kw["dump_system"] = True
    if args.dx_min is not None or args.dx_max is not None or args.dx_count is not None:
        kw["Dx_values"] = None
    solver_kw = {k: v for k, v in (("method", args.solver), ("tol", args.tol), ("max_iter", args.max_iter))
                 if v is not None}
    if solver_kw:
        kw["solver"] = replace(cfg.solver, **solver_kw)
    return replace(cfg, **kw)


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    cfg = build_config(args)
    out = Path(cfg.out or f"results/{args.command}")

    def progress(r):
        log.info("%s m=%d Dx=%.4g N=%d e_inf=%.3e t_shape=%.3fs %s", r.engine, r.m, r.Dx, r.N, r.e_inf,
                 r.t_shape_s, r.solver_status)

    if args.command == "timing2d":
        Dx = cfg.Dx_sweep[-1]
        res = run_timing_study(cfg, Dx, repeats=cfg.runs, m=cfg.orders[0])
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "timing.json", "w") as fh:
            json.dump({"config": cfg.to_dict(), "Dx": Dx, "m": cfg.orders[0], "engines": res}, fh, indent=2)
        for engine, r in res.items():
            print(f"{engine:7s} N={r['N']} N_rbffd={r['N_rbffd']} mean t_shape={r['t_shape_mean']:.4f}s")
        return 0

    runner = run_poisson_study if args.command == "poisson2d" else run_boussinesq
    records = runner(cfg, progress=progress)
    runs_csv, agg = emit_results(records, out, cfg)
    print(f"wrote {runs_csv} ({len(records)} runs) and {agg}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
