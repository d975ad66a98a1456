"""End-to-end acceptance suite.

Each test prints one `[criterion N] ... PASS/FAIL` line (run pytest with
``-s`` to see them as they happen).  Criteria with stated runtime budgets
assert them.  Criterion 4b is expected to fail: the quadratic-coefficient
jump dynamics eject ~12% of the heavy-tailed initial mass to infinity, so
the density error floors near the missing-mass level instead of decaying
like 1/sqrt(N); the assertion is kept at its stated range rather than
widened to mask that.
"""

import time

import numpy as np
import pytest

from stablekbo.core import KboConfig, ParticleEnsemble, consensus_point, drift_step
from stablekbo.diagnostics import (
    MomentParams,
    b_p_alpha,
    fit_decay_rate,
    omega_d,
    v_p_moment,
)
from stablekbo.harness import ExperimentSpec, run_experiment, run_preset
from stablekbo.objectives import make_objective
from stablekbo.rng import RngStream, StableLaw, empirical_char_fn, sample_stable_vector
from stablekbo.validation import ValidationConfig, convergence_study, run_validation


def _report(num: str, name: str, ok: bool, detail: str = ""):
    line = f"[criterion {num}] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line, flush=True)
    assert ok, line


def test_criterion_1_sampler_law():
    t0 = time.monotonic()
    n = 10**6
    worst = 0.0
    for alpha in (1.0, 1.25, 1.5, 1.75, 2.0):
        draws = sample_stable_vector(StableLaw(alpha), n, RngStream(1001))
        for kappa in (0.25, 0.5, 1.0, 2.0):
            target = np.exp(-abs(kappa) ** alpha)
            worst = max(worst, abs(empirical_char_fn(draws, kappa) - target))
    elapsed = time.monotonic() - t0
    ok = worst <= 5e-3 + 5e-3 and elapsed < 30.0
    _report("1", "sampler law", ok, f"max char-fn deviation {worst:.5f}, {elapsed:.1f}s")


def test_criterion_2_consensus_laplace():
    t0 = time.monotonic()
    rng = np.random.default_rng(1002)
    positions = rng.uniform(-3.0, 3.0, (100, 3))
    obj = make_objective("sphere", 3)
    energies = obj(positions)
    assert len(np.unique(energies)) == 100
    ens = ParticleEnsemble(positions)

    best = positions[np.argmin(energies)]
    laplace_err = float(np.max(np.abs(consensus_point(ens, obj, 1e8).point - best)))

    shifted = make_objective("sphere", 3)
    shifted = type(shifted)(name="s", dim=3, fn=lambda x: obj.fn(x) + 11.3,
                            minimizer=obj.minimizer)
    shift_err = 0.0
    perm_err = 0.0
    for beta in (10.0, 1e4, 1e8):
        a = consensus_point(ens, obj, beta).point
        b = consensus_point(ens, shifted, beta).point
        shift_err = max(shift_err, float(np.max(np.abs(a - b))))
        perm = rng.permutation(100)
        c = consensus_point(ParticleEnsemble(positions[perm]), obj, beta).point
        perm_err = max(perm_err, float(np.max(np.abs(a - c))))
    elapsed = time.monotonic() - t0
    ok = laplace_err <= 1e-6 and shift_err <= 1e-12 and perm_err <= 1e-12 and elapsed < 1.0
    _report("2", "consensus Laplace limit and invariances", ok,
            f"laplace {laplace_err:.2e}, shift {shift_err:.2e}, perm {perm_err:.2e}, "
            f"{elapsed:.2f}s")


def test_criterion_3_drift_decay_oracle():
    t0 = time.monotonic()
    p, nu, dt = 1.5, 1.0, 0.1
    target = np.zeros(2)
    ens = ParticleEnsemble(np.random.default_rng(1003).uniform(1.0, 2.0, (200, 2)))
    traj = [(0.0, v_p_moment(ens, MomentParams(p, target)))]
    for n in range(1, 61):
        ens = drift_step(ens, target, nu, dt)
        traj.append((n * dt, v_p_moment(ens, MomentParams(p, target))))
    rate = fit_decay_rate(traj)
    expected = -p * np.log(1.0 - nu * dt) / dt
    rel = abs(rate - expected) / expected
    elapsed = time.monotonic() - t0
    ok = rel <= 1e-6 and elapsed < 1.0
    _report("3", "drift-only decay rate", ok,
            f"rate {rate:.10f} vs {expected:.10f}, rel err {rel:.2e}, {elapsed:.2f}s")


def test_criterion_4a_validation_density_tracking():
    t0 = time.monotonic()
    cfg = ValidationConfig(n_particles=10**5, seed=1004)
    res = run_validation(cfg)
    details = []
    ok = True
    for t in (0.1, 1.0, 2.0):
        err = res.errors[t]
        thresh = 0.1 * (1.0 / (np.pi * np.exp(-t) / (2.0 - np.exp(-t))))
        details.append(f"t={t}: {err:.4f}<=?{thresh:.4f}")
        ok = ok and err <= thresh
    elapsed = time.monotonic() - t0
    ok = ok and elapsed <= 600.0
    _report("4a", "validation density tracks the closed form", ok,
            "; ".join(details) + f", {elapsed:.1f}s")


def test_criterion_4b_validation_error_scaling():
    t0 = time.monotonic()
    cfg = ValidationConfig(seed=1005)
    study = convergence_study(cfg, [10**3, 10**4, 10**5], n_seeds=5)
    elapsed = time.monotonic() - t0
    ok = -0.65 <= study.slope <= -0.35 and elapsed <= 600.0
    detail = (f"slope {study.slope:.3f} wanted in [-0.65, -0.35], errors "
              + ", ".join(f"{n}:{e:.4f}" for n, e in study.points)
              + f", {elapsed:.1f}s; known limitation: escaped heavy-tail mass"
                " floors the error, see notes/decisions ledger")
    _report("4b", "validation error scales like 1/sqrt(N)", ok, detail)


def test_criterion_5_theory_constants():
    import mpmath as mp

    mp.mp.dps = 40

    def oracle(d, p, alpha):
        num = mp.mpf(2) ** alpha * mp.gamma((d + p) / mp.mpf(2)) * mp.gamma(
            (alpha - p) / mp.mpf(2))
        den = abs(mp.gamma(-p / mp.mpf(2))) + mp.gamma((d + p - alpha) / mp.mpf(2))
        return float(num / den)

    worst = 0.0
    all_positive = True
    for d in (1, 5, 20):
        for alpha in (1.1, 1.3, 1.5, 1.7, 1.9):
            for frac in (0.2, 0.5, 0.8):
                p = 1.0 + frac * (alpha - 1.0)
                value = b_p_alpha(d, p, alpha)
                all_positive = all_positive and value > 0.0
                worst = max(worst, abs(value - oracle(d, p, alpha)) / oracle(d, p, alpha))
    omega_err = max(abs(omega_d(1) - 2.0), abs(omega_d(2) - np.pi),
                    abs(omega_d(3) - 4.0 * np.pi / 3.0))
    ok = all_positive and worst <= 1e-9 and omega_err <= 1e-12
    _report("5", "theory constants vs high-precision oracle", ok,
            f"max rel err {worst:.2e}, unit-ball volume err {omega_err:.2e}")


def test_criterion_6_benchmark_reproduction():
    t0 = time.monotonic()
    common = dict(objective="rastrigin", dim=20, m_runs=20)
    jumps = ExperimentSpec(sweep="gamma", values=(2.0,), sigma=0.0,
                           base_seed=6001, **common)
    diffusion = ExperimentSpec(sweep="sigma", values=(3.0,), gamma=0.0,
                               base_seed=6002, **common)
    sphere = ExperimentSpec(objective="sphere", dim=2, sweep="gamma", values=(0.0,),
                            sigma=1.0, beta=1e5, init_lo=1.0, init_hi=2.0,
                            diffusion_mode="isotropic", m_runs=20, base_seed=6003)
    rate_jumps = run_experiment(jumps)[0].success_rate
    rate_diff = run_experiment(diffusion)[0].success_rate
    rate_sphere = run_experiment(sphere)[0].success_rate
    elapsed = time.monotonic() - t0
    ok = (rate_jumps >= 0.5
          and rate_jumps >= rate_diff - 0.15
          and rate_sphere >= 0.95
          and elapsed <= 1800.0)
    _report("6", "benchmark success rates", ok,
            f"pure jumps {rate_jumps:.2f} (>=0.5), pure diffusion {rate_diff:.2f}, "
            f"sphere {rate_sphere:.2f} (>=0.95), {elapsed:.0f}s")


SCALED = dict(m_runs=2, n_t=150, n_particles=40)
SCALED_VALIDATE = dict(n_particles=4000, n_values=(500, 1000, 2000), n_seeds=1)


@pytest.mark.parametrize("name", ["test1", "test2", "test3", "test4", "validate"])
def test_criterion_7_preset_determinism(name):
    overrides = SCALED_VALIDATE if name == "validate" else SCALED
    one = run_preset(name, workers=1, overrides=overrides)
    two = run_preset(name, workers=2, overrides=overrides)
    again = run_preset(name, workers=2, overrides=overrides)
    ok = one == two == again
    _report("7", f"preset {name} byte-identical across reruns and worker counts", ok,
            f"{len(one)} files")
