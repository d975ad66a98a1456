"""CLI behavior via the in-process service client."""

import pytest

from stablekbo.cli import main

FAST_RUN_FLAGS = [
    "--objective", "sphere", "--dim", "2", "--sweep", "gamma",
    "--values", "0,1", "--m-runs", "2", "--base-seed", "7",
    "--sigma", "1.0", "--beta", "1e5", "--init-lo", "1.0", "--init-hi", "2.0",
    "--diffusion-mode", "isotropic", "--n-t", "200", "--n-particles", "30",
    "--j-stall", "100", "--workers", "1",
]


def test_constants_command(capsys):
    code = main(["constants", "--d", "1", "--p", "1.2", "--alpha", "1.5",
                 "--nu", "1.0", "--gamma", "0.0"])
    out = capsys.readouterr().out
    assert code == 0
    assert "b_p_alpha = 2.680996" in out
    assert "c_p_alpha = 1.2" in out
    assert "omega_d = 2.0" in out
    assert "condition_ok = True" in out


def test_constants_command_bad_strip(capsys):
    code = main(["constants", "--d", "1", "--p", "0.5", "--alpha", "1.5"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_objectives_command(capsys):
    assert main(["objectives"]) == 0
    out = capsys.readouterr().out
    assert "rastrigin (differentiable)" in out
    assert "l1_norm (non-differentiable)" in out


def test_run_command_writes_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(["run", *FAST_RUN_FLAGS, "--output", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "axis,success_rate,mean_iterations,m_runs,seed"
    assert len(lines) == 3


def test_run_command_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", *FAST_RUN_FLAGS, "--output", str(a)]) == 0
    flags_two_workers = [*FAST_RUN_FLAGS]
    flags_two_workers[flags_two_workers.index("--workers") + 1] = "2"
    assert main(["run", *flags_two_workers, "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_command_stdout_default(capsys):
    code = main(["run", *FAST_RUN_FLAGS[:-2], "--workers", "1", "--m-runs", "1",
                 "--values", "1"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("axis,success_rate")


def test_run_command_config_file(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "objective = sphere\ndim = 2\nsweep = gamma\nvalues = 0, 1\n"
        "m_runs = 1\nbase_seed = 7\nsigma = 1.0\nbeta = 1e5\n"
        "init_lo = 1.0\ninit_hi = 2.0\ndiffusion_mode = isotropic\n"
        "n_t = 100\nn_particles = 20\nj_stall = 50\n"
    )
    out = tmp_path / "from_config.csv"
    code = main(["run", "--config", str(cfg), "--workers", "1", "--output", str(out)])
    assert code == 0
    assert out.exists()


def test_run_command_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("gamma = fast\n")
    assert main(["run", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "gamma" in err and "bad.cfg:1" in err


def test_run_command_unknown_objective(capsys):
    assert main(["run", "--objective", "nope", "--values", "1", "--m-runs", "1"]) == 1
    assert "unknown objective" in capsys.readouterr().err


def test_validate_command(tmp_path, capsys):
    code = main(["validate", "--n-particles", "4000", "--n-values", "500,1000,2000",
                 "--n-seeds", "1", "--out-dir", str(tmp_path)])
    assert code == 0
    for name in ("validate_density_t0.1.csv", "validate_density_t1.csv",
                 "validate_density_t2.csv", "validate_error.csv"):
        assert (tmp_path / name).exists()
    out = capsys.readouterr().out
    assert "convergence slope=" in out


def test_preset_command_scaled_and_deterministic(tmp_path):
    d1, d2 = tmp_path / "w1", tmp_path / "w2"
    scaled = ["preset", "test3", "--m-runs", "1", "--n-t", "50",
              "--n-particles", "20"]
    assert main([*scaled, "--workers", "1", "--out-dir", str(d1)]) == 0
    assert main([*scaled, "--workers", "2", "--out-dir", str(d2)]) == 0
    names = sorted(p.name for p in d1.iterdir())
    assert names == ["test3_gamma0.csv", "test3_gamma2.csv"]
    for name in names:
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_preset_command_unknown_name(capsys):
    with pytest.raises(SystemExit):
        main(["preset", "test9"])  # argparse rejects unknown choices
