"""Sweep execution, CSV schema, config parsing and preset structure."""

import os

import numpy as np
import pytest

from stablekbo.harness import (
    ExperimentSpec,
    S52_DEFAULTS,
    SweepResult,
    _benchmark_presets,
    emit_csv,
    parse_config,
    parse_config_text,
    preset_names,
    render_csv,
    run_experiment,
    run_preset,
)

FAST = dict(n_t=200, n_particles=30, m_runs=2, j_stall=100)


def _fast_spec(**kw):
    base = dict(objective="sphere", dim=2, sweep="gamma", values=(0.0, 1.0),
                sigma=1.0, beta=1e5, init_lo=1.0, init_hi=2.0, base_seed=7,
                diffusion_mode="isotropic", **FAST)
    base.update(kw)
    return ExperimentSpec(**base)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(sweep="tau", values=(1.0,))
    with pytest.raises(ValueError):
        ExperimentSpec(values=())
    with pytest.raises(ValueError):
        ExperimentSpec(m_runs=0, values=(1.0,))
    with pytest.raises(ValueError):
        _fast_spec(objective="nope").validate()
    with pytest.raises(ValueError):
        _fast_spec(sigma=-1.0).validate()  # gamma is the swept axis here


def test_degenerate_single_value_single_run():
    spec = _fast_spec(values=(1.0,), m_runs=1)
    results = run_experiment(spec, workers=1)
    assert len(results) == 1
    assert results[0].success_rate in (0.0, 1.0)
    assert results[0].m_runs == 1


def test_run_experiment_reproducible_and_worker_independent():
    spec = _fast_spec()
    r1 = run_experiment(spec, workers=1)
    r2 = run_experiment(spec, workers=2)
    r3 = run_experiment(spec, workers=1)
    assert render_csv(r1) == render_csv(r2) == render_csv(r3)
    for a, b in zip(r1, r2):
        assert a.records == b.records


def test_sweep_axis_values_map_to_configs():
    spec = _fast_spec(sweep="dim", values=(2, 3))
    name, cfg = spec.axis_objective_and_config(3)
    assert cfg.dim == 3 and name == "sphere"
    spec = _fast_spec(sweep="objective", values=("sphere", "l1_norm"))
    name, cfg = spec.axis_objective_and_config("l1_norm")
    assert name == "l1_norm" and cfg.dim == 2


def test_objective_sweep_runs():
    spec = _fast_spec(sweep="objective", values=("sphere", "l1_norm"), m_runs=1)
    results = run_experiment(spec, workers=1)
    assert [r.axis for r in results] == ["sphere", "l1_norm"]


def test_emit_csv_schema(tmp_path):
    path = tmp_path / "out.csv"
    emit_csv([], path)
    assert path.read_text() == "axis,success_rate,mean_iterations,m_runs,seed\n"
    one = SweepResult(axis=2.0, success_rate=0.85, mean_iterations=1234.5,
                      m_runs=20, seed=3)
    emit_csv([one], path)
    text = path.read_text()
    assert text.splitlines() == [
        "axis,success_rate,mean_iterations,m_runs,seed",
        "2.0,0.85,1234.5,20,3",
    ]


def test_emit_csv_rerun_identical(tmp_path):
    spec = _fast_spec()
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_experiment(spec, workers=1), p1)
    emit_csv(run_experiment(spec, workers=2), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_emit_csv_bad_path():
    with pytest.raises(OSError):
        emit_csv([], "/nonexistent-dir/x.csv")


def test_parse_config_defaults_match_benchmark_protocol():
    spec = parse_config_text("")
    assert spec.objective == "rastrigin"
    assert spec.beta == 5e6
    assert spec.n_particles == 200
    assert spec.n_t == 10_000
    assert spec.dt == 0.1
    assert spec.j_stall == 1000
    assert spec.delta_stall == 1e-4
    assert spec.nu == 1.0
    assert spec.alpha == 1.5
    assert (spec.init_lo, spec.init_hi) == (-5.12, -2.0)
    assert spec.m_runs == 20


def test_parse_config_rejects_negative_gamma():
    with pytest.raises(ValueError, match="gamma"):
        parse_config_text("gamma = -1")


def test_parse_config_unknown_key_reports_line():
    with pytest.raises(ValueError, match=r"<config>:2.*frobnicate"):
        parse_config_text("gamma = 1.0\nfrobnicate = 3")


def test_parse_config_type_error_reports_key():
    with pytest.raises(ValueError, match=r"n_t"):
        parse_config_text("n_t = soon")


def test_parse_config_flag_override(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("objective = sphere\ndt = 0.05\n# comment\nvalues = 1.0, 2.0\n")
    spec = parse_config(path, overrides={"dt": 0.2, "dim": 3})
    assert spec.dt == 0.2
    assert spec.dim == 3
    assert spec.objective == "sphere"
    assert spec.values == (1.0, 2.0)


def test_parse_config_degenerate_values_default():
    spec = parse_config_text("sweep = sigma\nsigma = 3.0")
    assert spec.values == (3.0,)
    spec = parse_config_text("sweep = objective\nobjective = sphere\ndim = 2")
    assert spec.values == ("sphere",)


def test_iters_success_only_switch():
    spec = _fast_spec(values=(0.0,), iters_success_only=True, m_runs=2)
    with_switch = run_experiment(spec, workers=1)
    plain = run_experiment(_fast_spec(values=(0.0,), m_runs=2), workers=1)
    if with_switch[0].success_rate == 1.0:
        assert with_switch[0].mean_iterations == plain[0].mean_iterations
    elif with_switch[0].success_rate == 0.0:
        assert np.isnan(with_switch[0].mean_iterations)


def test_preset_names_and_grids():
    assert preset_names() == ["test1", "test2", "test3", "test4", "validate"]
    presets = _benchmark_presets(base_seed=1)
    labels1 = [label for label, _ in presets["test1"]]
    assert labels1 == ["test1_sigma0", "test1_sigma3"]
    gamma_spec = presets["test1"][0][1]
    assert gamma_spec.values == tuple(np.arange(1.0, 5.01, 0.5))
    assert gamma_spec.dim == 20 and gamma_spec.objective == "rastrigin"
    dims_spec = presets["test2"][0][1]
    assert dims_spec.values == (1, 2, 5, 10, 15, 20, 30, 40, 50)
    assert {(s.gamma, s.sigma) for _, s in presets["test2"]} == {(2.0, 0.0), (0.0, 3.0), (2.0, 3.0)}
    sigma_spec = presets["test3"][1][1]
    assert sigma_spec.values == tuple(np.arange(0.0, 6.01, 0.5))
    assert sigma_spec.gamma == 2.0
    test4 = presets["test4"]
    assert len(test4) == 6
    suites = {s.values for _, s in test4}
    assert ("rastrigin", "rosenbrock", "sphere") in suites
    assert ("modified_alpine", "l1_norm") in suites
    # distinct experiments get distinct seeds
    seeds = [s.base_seed for group in presets.values() for _, s in group]
    assert len(seeds) == len(set(seeds))


def test_run_preset_unknown_name():
    with pytest.raises(ValueError, match="unknown preset"):
        run_preset("test9")


def test_run_preset_scaled(tmp_path):
    files = run_preset("test3", out_dir=tmp_path, workers=2,
                       overrides=dict(m_runs=1, n_t=50, n_particles=20))
    assert sorted(files) == ["test3_gamma0.csv", "test3_gamma2.csv"]
    for fname, text in files.items():
        lines = text.strip().splitlines()
        assert lines[0] == "axis,success_rate,mean_iterations,m_runs,seed"
        assert len(lines) == 1 + 13  # sigma grid 0..6 step 0.5
        assert (tmp_path / fname).read_text() == text


def test_run_preset_validate_scaled(tmp_path):
    files = run_preset("validate", out_dir=tmp_path, overrides=dict(
        n_particles=5000, n_values=(500, 1000, 2000), n_seeds=1))
    names = sorted(files)
    assert names == ["validate_density_t0.1.csv", "validate_density_t1.csv",
                     "validate_density_t2.csv", "validate_error.csv"]
    err_lines = files["validate_error.csv"].strip().splitlines()
    assert err_lines[0] == "n_particles,linf_error"
    assert [int(line.split(",")[0]) for line in err_lines[1:]] == [500, 1000, 2000]
    dens_lines = files["validate_density_t2.csv"].strip().splitlines()
    assert dens_lines[0] == "x_center,f_numeric,f_exact"
    assert len(dens_lines) == 1 + 1024
