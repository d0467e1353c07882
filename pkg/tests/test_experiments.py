import json
from pathlib import Path

import numpy as np
import pytest

from spinsqueeze.cli import main as cli_main
from spinsqueeze.experiments import (ExperimentConfig, run_experiment, run_point,
                                     seed_schedule, vacuum_ensemble)
from spinsqueeze.model import simulation_setup


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------

def test_seed_schedule_distinct_and_stable():
    assert seed_schedule(1, 0) != seed_schedule(1, 1)
    assert seed_schedule(1, 0) != seed_schedule(2, 0)
    assert seed_schedule(1, 0, "vacuum") != seed_schedule(1, 0, "thermal-chain")
    # identical regardless of any scheduling context
    assert seed_schedule(123, 45) == seed_schedule(123, 45)


def test_seed_schedule_no_collisions_over_a_million():
    seeds = {seed_schedule(777, i) for i in range(1_000_000)}
    assert len(seeds) == 1_000_000


def test_vacuum_ensemble_reproducible(small_setup):
    params, grid = small_setup
    a = vacuum_ensemble(grid, 5, base_seed=3)
    b = vacuum_ensemble(grid, 5, base_seed=3)
    assert np.array_equal(a, b)
    c = vacuum_ensemble(grid, 5, base_seed=4)
    assert not np.array_equal(a, c)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_config_round_trip_and_hash():
    cfg = ExperimentConfig(kind="sweep", realizations=10, base_seed=5)
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()
    other = ExperimentConfig(kind="sweep", realizations=11, base_seed=5)
    assert other.config_hash() != cfg.config_hash()


def test_config_rejects_empty_grids():
    cfg = ExperimentConfig(t_over_mu=[])
    with pytest.raises(ValueError):
        cfg.validate()
    cfg2 = ExperimentConfig(time_horizon=0.0)
    with pytest.raises(ValueError):
        cfg2.validate()
    cfg3 = ExperimentConfig(kind="figure", figure=9)
    with pytest.raises(ValueError):
        cfg3.validate()


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------

TINY = dict(realizations=16, time_horizon=6.0, time_spacing=1.0, base_seed=11,
            burn_in=48, decorrelation=2, n_chains=2)


def test_run_point_deterministic_rerun():
    a = run_point(1.32e-2, 0.5, 4, **TINY)
    b = run_point(1.32e-2, 0.5, 4, **TINY)
    np.testing.assert_array_equal(a["curve"].xi2, b["curve"].xi2)
    assert a["obs"]["norm_drift"] < 1e-10
    # t = 0 is measured and the ensemble starts near the standard quantum limit
    assert a["curve"].times[0] == 0.0


def test_run_point_memory_cap():
    with pytest.raises(MemoryError):
        run_point(1.32e-2, 0.5, 12, realizations=10 ** 6, time_horizon=1.0,
                  time_spacing=1.0, base_seed=0, memory_cap_mb=10.0)


def test_sweep_bundle_with_failure_marks_incomplete(tmp_path):
    cfg = ExperimentConfig(kind="sweep", sqrt_rho_a3=[1.32e-2, -1.0],
                           t_over_mu=[0.5], n_max=[4], realizations=8,
                           time_horizon=3.0, time_spacing=1.0,
                           burn_in_sweeps=32, decorrelation_sweeps=2,
                           n_chains=2, out_dir=str(tmp_path))
    manifest = run_experiment(cfg)
    assert not manifest["complete"]
    assert len(manifest["failures"]) == 1
    assert any(name.startswith("summary") for name in manifest["outputs"])
    # the good point still produced its curve table
    assert any(name.startswith("curve") for name in manifest["outputs"])


def test_analytics_bundle_and_provenance(tmp_path):
    cfg = ExperimentConfig(kind="analytics", sqrt_rho_a3=[1e-3],
                           t_over_mu=[0.5, 1.0], out_dir=str(tmp_path))
    manifest = run_experiment(cfg)
    assert manifest["complete"]
    table = Path(tmp_path) / f"analytics-{cfg.config_hash()}" / "analytics.csv"
    lines = table.read_text().strip().splitlines()
    header = lines[0].split(",")
    assert "config_hash" in header and "code_version" in header
    assert len(lines) == 3  # header + two temperatures
    for line in lines[1:]:
        assert cfg.config_hash() in line


def test_sample_bundle_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("SPINSQUEEZE_CACHE", str(tmp_path / "cache"))
    cfg = ExperimentConfig(kind="sample", sqrt_rho_a3=[1.32e-2], t_over_mu=[0.5],
                           n_max=[4], realizations=3, burn_in_sweeps=32,
                           decorrelation_sweeps=2, n_chains=1,
                           out_dir=str(tmp_path))
    manifest = run_experiment(cfg)
    assert manifest["complete"]
    from spinsqueeze import cache
    params, grid = simulation_setup(1.32e-2, 0.5, 4)
    root = Path(tmp_path / "cache") / f"samples-{cfg.config_hash()}"
    rec = cache.read_record(root / "r000001", grid)
    assert rec["psi_a"].shape == grid.fft_shape
    # bit-exact reload: writing the record again must reproduce the bytes
    blob1 = (root / "r000001.bin").read_bytes()
    cache.write_record(tmp_path / "again", grid, rec["psi_a"], rec["psi_b"],
                       seed=rec["seed"], time=rec["time"])
    assert (tmp_path / "again.bin").read_bytes() == blob1


def test_cache_rejects_wrong_grid(tmp_path):
    from spinsqueeze import cache
    params, grid = simulation_setup(1.32e-2, 0.5, 4)
    rng = np.random.default_rng(0)
    psi = rng.normal(size=grid.fft_shape) + 1j * rng.normal(size=grid.fft_shape)
    cache.write_record(tmp_path / "rec", grid, psi)
    other_params, other = simulation_setup(1.32e-2, 0.5, 6)
    with pytest.raises(ValueError):
        cache.read_record(tmp_path / "rec", other)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_figure3_analytics(tmp_path, capsys):
    code = cli_main(["figure", "3", "--out", str(tmp_path)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["complete"]
    assert any("figure3" in name for name in out["bundle"])


def test_cli_run_with_config_and_overrides(tmp_path, capsys):
    cfg = ExperimentConfig(kind="run", sqrt_rho_a3=[1.32e-2], t_over_mu=[0.5],
                           n_max=[4], realizations=8, time_horizon=3.0,
                           time_spacing=1.0, burn_in_sweeps=32,
                           decorrelation_sweeps=2, n_chains=2)
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    code = cli_main(["run", "--config", str(path), "--seed", "99",
                     "--out", str(tmp_path)])
    assert code == 0
    bundles = list(Path(tmp_path).glob("run-*/manifest.json"))
    assert len(bundles) == 1
    manifest = json.loads(bundles[0].read_text())
    assert manifest["config"]["base_seed"] == 99


def test_cli_partial_failure_exit_code(tmp_path, capsys):
    cfg = ExperimentConfig(kind="sweep", sqrt_rho_a3=[-1.0], t_over_mu=[0.5],
                           n_max=[4], realizations=8, time_horizon=3.0,
                           time_spacing=1.0, burn_in_sweeps=16,
                           decorrelation_sweeps=1, n_chains=1)
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    code = cli_main(["sweep", "--config", str(path), "--out", str(tmp_path)])
    assert code == 2
