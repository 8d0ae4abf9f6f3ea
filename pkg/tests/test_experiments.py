import csv
import json

import numpy as np
import pytest

from meshfree.cli import build_config, main, _parser
from meshfree.experiments import (
    CSV_COLUMNS,
    TIMING_COLUMNS,
    ExperimentConfig,
    RunRecord,
    aggregate,
    convergence_order,
    emit_results,
    error_inf,
    normalized_spread,
    read_runs_csv,
    run_boussinesq,
    run_poisson_study,
    write_runs_csv,
)


def test_error_inf_examples():
    assert error_inf([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert error_inf([1.1, 2.0], [1.0, 2.0]) == pytest.approx(0.05)
    assert np.isnan(error_inf([np.nan, 2.0], [1.0, 2.0]))
    with pytest.raises(ValueError):
        error_inf([1.0], [0.0])
    # vector fields compare magnitudes: a rotated vector has zero error
    assert error_inf([[0.0, 1.0, 0.0]], [[1.0, 0.0, 0.0]]) == 0.0


def test_normalized_spread():
    v = np.arange(1.0, 12.0)
    assert normalized_spread(v) == pytest.approx((10.0 - 2.0) / 6.0)
    assert normalized_spread(np.full(5, 3.0)) == 0.0
    assert np.isnan(normalized_spread([np.nan]))


def test_convergence_order_recovers_slope():
    rows = [{"engine": "wls", "m": 2, "N_median": N, "e_inf_median": N ** -1.0} for N in (1e3, 4e3, 1.6e4)]
    assert convergence_order(rows, "wls", 2, dim=2) == pytest.approx(2.0)


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        ExperimentConfig(runs=0)
    cfg = ExperimentConfig(Dx_values=(0.1, 0.05), orders=(2,))
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    sweep = ExperimentConfig(dx_min=0.02, dx_max=0.08, dx_count=3).Dx_sweep
    np.testing.assert_allclose(sweep, [0.08, 0.04, 0.02])


def _small_cfg(tmp_path, **kw):
    base = dict(Dx_values=(0.2, 0.12), runs=2, orders=(2,), out=str(tmp_path))
    base.update(kw)
    return ExperimentConfig(**base)


def _strip_timing(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in rows]


def test_poisson_study_rows_and_outputs(tmp_path):
    cfg = _small_cfg(tmp_path)
    recs = run_poisson_study(cfg)
    assert len(recs) == 2 * 2 * 1 * 3
    assert all(r.solver_status == "converged" and np.isfinite(r.e_inf) for r in recs)
    # engines within one run share the node set
    first = [r for r in recs if r.Dx == 0.2 and r.seed == recs[0].seed]
    assert len({r.N for r in first}) == 1
    hyb = [r for r in recs if r.engine == "hybrid"]
    assert all(0 < r.N_rbffd < r.N for r in hyb)
    runs_csv, agg = emit_results(recs, tmp_path, cfg)
    header = runs_csv.read_text().splitlines()[0].split(",")
    assert header == CSV_COLUMNS
    back = read_runs_csv(runs_csv)
    assert back == recs
    payload = json.loads(agg.read_text())
    assert len(payload["groups"]) == 2 * 3
    assert set(payload["convergence_order"]) == {"hybrid/m2", "rbffd/m2", "wls/m2"}


def test_poisson_study_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        cfg = _small_cfg(d, Dx_values=(0.15,))
        emit_results(run_poisson_study(cfg), d, cfg)
    assert _strip_timing(a / "runs.csv") == _strip_timing(b / "runs.csv")
    c = tmp_path / "c"
    cfg = _small_cfg(c, Dx_values=(0.15,), seed=1)
    emit_results(run_poisson_study(cfg), c, cfg)
    assert _strip_timing(a / "runs.csv") != _strip_timing(c / "runs.csv")


def test_failed_solves_are_recorded_not_raised(tmp_path):
    # stencils larger than the node set fail per run instead of aborting the sweep
    cfg = _small_cfg(tmp_path, Dx_values=(0.9,), runs=1, orders=(6,), refinement=1.0)
    recs = run_poisson_study(cfg)
    assert len(recs) == 3
    assert all(r.solver_status.startswith("error:") and np.isnan(r.e_inf) for r in recs)


def test_boussinesq_small(tmp_path):
    cfg = ExperimentConfig.boussinesq(Dx_values=(0.3,), out=str(tmp_path))
    recs = run_boussinesq(cfg)
    assert [r.engine for r in recs] == ["wls", "rbffd", "hybrid"]
    assert len({r.N for r in recs}) == 1
    assert recs[1].N_rbffd > recs[2].N_rbffd > 0 == recs[0].N_rbffd
    for r in recs:
        assert r.solver_status == "converged" or np.isnan(r.e_inf)


def test_records_csv_round_trip_with_nan(tmp_path):
    recs = [RunRecord("poisson2d", "wls", 2, 0.1, 3, 100, 0, float("nan"), 0.5, 0.1, "max_iter",
                      residual=2e-3),
            RunRecord("poisson2d", "rbffd", 2, 0.1, 3, 100, 97, 1e-3, 0.25, 0.1, "converged",
                      residual=1e-15)]
    write_runs_csv(recs, tmp_path / "r.csv")
    back = read_runs_csv(tmp_path / "r.csv")
    assert np.isnan(back[0].e_inf) and back[0].residual == 2e-3 and back[1] == recs[1]
    rows = aggregate(recs)
    assert {r["engine"]: r["failed"] for r in rows} == {"wls": 1, "rbffd": 0}


def test_cli_flags_map_onto_config():
    args = _parser().parse_args(["poisson2d", "--engine", "wls", "--engine", "hybrid", "--order", "4",
                                 "--dx-min", "0.02", "--dx-max", "0.05", "--dx-count", "4", "--runs", "3",
                                 "--solver", "bicgstab", "--tol", "1e-10", "--rs", "0.2"])
    cfg = build_config(args)
    assert cfg.engines == ("wls", "hybrid") and cfg.orders == (4,)
    assert len(cfg.Dx_sweep) == 4 and cfg.runs == 3 and cfg.rs == 0.2
    assert cfg.solver.method == "bicgstab" and cfg.solver.tol == 1e-10
    b = build_config(_parser().parse_args(["boussinesq3d"]))
    assert b.problem == "boussinesq3d" and b.orders == (4,) and b.rs == 0.5


def test_cli_config_file(tmp_path):
    (tmp_path / "c.yaml").write_text("runs: 2\norders: [2]\nDx_values: [0.2]\n")
    cfg = build_config(_parser().parse_args(["poisson2d", "--config", str(tmp_path / "c.yaml"), "--runs", "1"]))
    assert cfg.runs == 1 and cfg.orders == (2,) and cfg.Dx_sweep == (0.2,)


def test_cli_smoke(tmp_path, capsys):
    out = tmp_path / "res"
    rc = main(["poisson2d", "--order", "2", "--dx-min", "0.2", "--dx-max", "0.2", "--dx-count", "1",
               "--runs", "1", "--out", str(out), "--dump-system"])
    assert rc == 0
    assert (out / "runs.csv").exists() and (out / "aggregate.json").exists()
    assert len(list((out / "systems").glob("*.mtx"))) == 6
    assert "runs.csv" in capsys.readouterr().out
    rc = main(["timing2d", "--dx-min", "0.2", "--dx-max", "0.2", "--dx-count", "1", "--runs", "2",
               "--out", str(tmp_path / "t")])
    assert rc == 0
    timing = json.loads((tmp_path / "t" / "timing.json").read_text())
    assert set(timing["engines"]) == {"wls", "rbffd", "hybrid"}
