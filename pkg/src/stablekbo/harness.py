"""Experiment runner: parameter sweeps, success-rate aggregation, CSV output.

An experiment sweeps exactly one axis (``gamma``, ``sigma``, ``dim`` or
``objective``) and runs ``m_runs`` independently seeded optimizations per
axis value.  Per-run streams are derived deterministically from the base
seed and the (axis, run) indices, so results are byte-identical no matter
how many workers execute the sweep.  The built-in presets encode the
benchmark grids (``test1`` .. ``test4``) and the exact-solution validation
(``validate``).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import validation as _validation
from .core import KboConfig, run
from .objectives import list_objectives, make_objective
from .rng import RngStream

__all__ = [
    "ExperimentSpec",
    "SweepResult",
    "RunSummary",
    "run_experiment",
    "render_csv",
    "emit_csv",
    "parse_config",
    "parse_config_text",
    "preset_names",
    "run_preset",
    "WORKERS_ENV_VAR",
    "S52_DEFAULTS",
]

WORKERS_ENV_VAR = "KBO_WORKERS"

SWEEP_AXES = ("gamma", "sigma", "dim", "objective")

# benchmark defaults shared by all presets
S52_DEFAULTS = dict(
    objective="rastrigin",
    dim=20,
    nu=1.0,
    sigma=0.0,
    gamma=2.0,
    alpha=1.5,
    beta=5e6,
    dt=0.1,
    n_t=10_000,
    n_particles=200,
    diffusion_mode="anisotropic",
    delta_stall=1e-4,
    j_stall=1_000,
    init_lo=-5.12,
    init_hi=-2.0,
    m_runs=20,
)

DEFAULT_PRESET_SEED = 12345


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: an axis, its values, and the fixed run parameters."""

    objective: str = "rastrigin"
    dim: int = 20
    sweep: str = "gamma"
    values: tuple = (2.0,)
    m_runs: int = 20
    base_seed: int = 0
    output: str | None = None
    iters_success_only: bool = False
    workers: int | None = None
    nu: float = 1.0
    sigma: float = 0.0
    gamma: float = 2.0
    alpha: float = 1.5
    beta: float = 5e6
    dt: float = 0.1
    n_t: int = 10_000
    n_particles: int = 200
    diffusion_mode: str = "anisotropic"
    delta_stall: float = 1e-4
    j_stall: int = 1_000
    init_lo: float = -5.12
    init_hi: float = -2.0
    noise_clip: float | None = None
    stall_mode: str = "consecutive"

    def __post_init__(self):
        if self.sweep not in SWEEP_AXES:
            raise ValueError(f"sweep must be one of {SWEEP_AXES}, got {self.sweep!r}")
        if not self.values:
            raise ValueError("sweep values must be non-empty")
        if self.m_runs < 1:
            raise ValueError("m_runs must be >= 1")

    def axis_objective_and_config(self, value) -> tuple[str, KboConfig]:
        """Resolve one axis value into (objective name, run config)."""
        name = self.objective
        kw = dict(
            dim=self.dim, nu=self.nu, sigma=self.sigma, gamma=self.gamma,
            alpha=self.alpha, beta=self.beta, dt=self.dt, n_t=self.n_t,
            n_particles=self.n_particles, diffusion_mode=self.diffusion_mode,
            delta_stall=self.delta_stall, j_stall=self.j_stall,
            seed=self.base_seed, init_box=(self.init_lo, self.init_hi),
            noise_clip=self.noise_clip, stall_mode=self.stall_mode,
        )
        if self.sweep == "objective":
            name = str(value)
        elif self.sweep == "dim":
            kw["dim"] = int(value)
        else:
            kw[self.sweep] = float(value)
        return name, KboConfig(**kw)

    def validate(self):
        """Surface bad parameters and unknown objectives before any run starts."""
        for value in self.values:
            name, config = self.axis_objective_and_config(value)
            make_objective(name, config.dim)


@dataclass(frozen=True)
class RunSummary:
    """Compact per-run outcome kept for aggregation and reporting."""

    success: bool
    iterations: int
    final_consensus: tuple
    terminated_by: str


@dataclass(frozen=True)
class SweepResult:
    """Aggregated outcome of the m runs at one axis value."""

    axis: object
    success_rate: float
    mean_iterations: float
    m_runs: int
    seed: int
    records: tuple[RunSummary, ...] = field(repr=False, default=())


def _execute_one(spec: ExperimentSpec, axis_idx: int, run_idx: int) -> RunSummary:
    value = spec.values[axis_idx]
    name, config = spec.axis_objective_and_config(value)
    obj = make_objective(name, config.dim)
    stream = RngStream.child(spec.base_seed, axis_idx, run_idx)
    record = run(obj, config, stream=stream)
    return RunSummary(
        success=record.success,
        iterations=record.iterations_used,
        final_consensus=tuple(float(v) for v in record.final_consensus),
        terminated_by=record.terminated_by,
    )


def _pool_task(args):
    spec, axis_idx, run_idx = args
    return (axis_idx, run_idx, _execute_one(spec, axis_idx, run_idx))


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> list[SweepResult]:
    """Execute the sweep and aggregate per-axis success rates and iteration counts.

    Results do not depend on the worker count: every run owns a stream
    derived from (base seed, axis index, run index) and aggregation is a
    deterministic ordered reduction.
    """
    spec.validate()
    n_workers = resolve_workers(workers if workers is not None else spec.workers)
    tasks = [(spec, a, r) for a in range(len(spec.values)) for r in range(spec.m_runs)]

    outcomes: dict[tuple[int, int], RunSummary] = {}
    if n_workers == 1 or len(tasks) == 1:
        for task in tasks:
            a, r, summary = _pool_task(task)
            outcomes[(a, r)] = summary
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for a, r, summary in pool.map(_pool_task, tasks, chunksize=1):
                outcomes[(a, r)] = summary

    results = []
    for a, value in enumerate(spec.values):
        records = tuple(outcomes[(a, r)] for r in range(spec.m_runs))
        successes = [rec.success for rec in records]
        if spec.iters_success_only:
            iters = [rec.iterations for rec in records if rec.success]
        else:
            iters = [rec.iterations for rec in records]
        results.append(
            SweepResult(
                axis=value,
                success_rate=float(np.mean(successes)),
                mean_iterations=float(np.mean(iters)) if iters else float("nan"),
                m_runs=spec.m_runs,
                seed=spec.base_seed,
                records=records,
            )
        )
    return results


def _format_axis(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def render_csv(results) -> str:
    """Render sweep results to CSV text; numbers keep full precision."""
    lines = ["axis,success_rate,mean_iterations,m_runs,seed"]
    for res in results:
        lines.append(
            f"{_format_axis(res.axis)},{float(res.success_rate)!r},"
            f"{float(res.mean_iterations)!r},{int(res.m_runs)},{int(res.seed)}"
        )
    return "\n".join(lines) + "\n"


def emit_csv(results, path) -> None:
    """Write sweep results as CSV; re-running an identical spec reproduces the bytes."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write(render_csv(results))
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


_BOOL_VALUES = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}

_FIELD_PARSERS = {
    "objective": str,
    "dim": int,
    "sweep": str,
    "m_runs": int,
    "base_seed": int,
    "output": str,
    "nu": float,
    "sigma": float,
    "gamma": float,
    "alpha": float,
    "beta": float,
    "dt": float,
    "n_t": int,
    "n_particles": int,
    "diffusion_mode": str,
    "delta_stall": float,
    "j_stall": int,
    "init_lo": float,
    "init_hi": float,
    "stall_mode": str,
    "workers": int,
}


def _parse_values(raw: str) -> tuple:
    items = [item.strip() for item in str(raw).split(",") if item.strip()]
    if not items:
        raise ValueError("empty sweep value list")
    out = []
    for item in items:
        try:
            out.append(float(item))
        except ValueError:
            out.append(item)
    return tuple(out)


def _coerce(key: str, raw: str, where: str):
    if key == "values":
        return _parse_values(raw)
    if key == "noise_clip":
        return None if raw.lower() in ("none", "off") else float(raw)
    if key == "iters_success_only":
        try:
            return _BOOL_VALUES[raw.lower()]
        except KeyError:
            raise ValueError(f"{where}: expected a boolean for {key!r}, got {raw!r}") from None
    parser = _FIELD_PARSERS.get(key)
    if parser is None:
        raise ValueError(f"{where}: unknown key {key!r}")
    try:
        return parser(raw)
    except ValueError:
        raise ValueError(f"{where}: cannot parse {key!r} value {raw!r} as {parser.__name__}") from None


def parse_config_text(text: str, overrides: dict | None = None, source: str = "<config>") -> ExperimentSpec:
    """Parse flat ``key = value`` lines into a spec; unknown keys are errors.

    Missing keys take the benchmark defaults; ``overrides`` (already typed,
    e.g. from CLI flags) are applied last.
    """
    kw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        kw[key] = _coerce(key, raw, f"{source}:{lineno}")

    if overrides:
        kw.update({k: v for k, v in overrides.items() if v is not None})
    merged = {**_spec_defaults(), **kw}
    if merged.get("values") is None:
        # degenerate sweep: the single axis value is the fixed parameter itself
        sweep = merged.get("sweep", "gamma")
        merged["values"] = (merged["objective" if sweep == "objective" else sweep],)
    spec = ExperimentSpec(**merged)
    spec.validate()
    return spec


def _spec_defaults() -> dict:
    base = {k: v for k, v in S52_DEFAULTS.items()}
    base.update(sweep="gamma", values=None, base_seed=0)
    return base


def parse_config(path, overrides: dict | None = None) -> ExperimentSpec:
    """Parse an experiment config file; see :func:`parse_config_text`."""
    with open(path) as fh:
        return parse_config_text(fh.read(), overrides=overrides, source=str(path))


def _preset_spec(seed_offset: int, base_seed: int, **kw) -> ExperimentSpec:
    merged = {**_spec_defaults(), **kw}
    merged["base_seed"] = base_seed + seed_offset
    return ExperimentSpec(**merged)


def _benchmark_presets(base_seed: int) -> dict[str, list[tuple[str, ExperimentSpec]]]:
    gammas = tuple(np.arange(1.0, 5.0 + 1e-9, 0.5))
    sigmas = tuple(np.arange(0.0, 6.0 + 1e-9, 0.5))
    dims = (1, 2, 5, 10, 15, 20, 30, 40, 50)
    diff_suite = ("rastrigin", "rosenbrock", "sphere")
    nondiff_suite = ("modified_alpine", "l1_norm")
    regimes = ((2.0, 0.0), (0.0, 3.0), (2.0, 3.0))

    presets: dict[str, list[tuple[str, ExperimentSpec]]] = {}
    presets["test1"] = [
        (
            f"test1_sigma{s:g}",
            _preset_spec(k, base_seed, sweep="gamma", values=gammas, sigma=float(s)),
        )
        for k, s in enumerate((0.0, 3.0))
    ]
    presets["test2"] = [
        (
            f"test2_gamma{g:g}_sigma{s:g}",
            _preset_spec(10 + k, base_seed, sweep="dim", values=dims,
                         gamma=float(g), sigma=float(s)),
        )
        for k, (g, s) in enumerate(regimes)
    ]
    presets["test3"] = [
        (
            f"test3_gamma{g:g}",
            _preset_spec(20 + k, base_seed, sweep="sigma", values=sigmas, gamma=float(g)),
        )
        for k, g in enumerate((0.0, 2.0))
    ]
    presets["test4"] = [
        (
            f"test4_{label}_gamma{g:g}_sigma{s:g}",
            _preset_spec(30 + 10 * j + k, base_seed, sweep="objective", values=suite,
                         gamma=float(g), sigma=float(s)),
        )
        for j, (label, suite) in enumerate((("diff", diff_suite), ("nondiff", nondiff_suite)))
        for k, (g, s) in enumerate(regimes)
    ]
    return presets


def preset_names() -> list[str]:
    return ["test1", "test2", "test3", "test4", "validate"]


def _run_validate_preset(out_dir, base_seed: int, overrides: dict) -> dict[str, str]:
    n_particles = int(overrides.get("n_particles") or 10**6)
    n_values = tuple(int(v) for v in overrides.get("n_values") or (10**3, 10**4, 10**5))
    n_seeds = int(overrides.get("n_seeds") or 5)

    cfg = _validation.ValidationConfig(n_particles=n_particles, seed=base_seed)
    result = _validation.run_validation(cfg)
    files: dict[str, str] = {}
    for t, grid in sorted(result.snapshots.items()):
        files[f"validate_density_t{t:g}.csv"] = _validation.render_density_csv(grid, t)

    study = _validation.convergence_study(cfg, n_values, n_seeds=n_seeds)
    files["validate_error.csv"] = _validation.render_error_csv(study.points)
    return files


def run_preset(
    name: str,
    out_dir=None,
    workers: int | None = None,
    base_seed: int = DEFAULT_PRESET_SEED,
    overrides: dict | None = None,
) -> dict[str, str]:
    """Run one preset; returns {filename: csv text} and writes files if out_dir given.

    ``overrides`` may scale down ``m_runs``, ``n_t`` and ``n_particles``
    (plus ``n_values``/``n_seeds`` for ``validate``) without changing the
    sweep structure.
    """
    overrides = dict(overrides or {})
    if name == "validate":
        files = _run_validate_preset(out_dir, base_seed, overrides)
    else:
        presets = _benchmark_presets(base_seed)
        if name not in presets:
            raise ValueError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
        spec_overrides = {
            k: int(v) for k, v in overrides.items()
            if k in ("m_runs", "n_t", "n_particles") and v is not None
        }
        files = {}
        for label, spec in presets[name]:
            if spec_overrides:
                spec = replace(spec, **spec_overrides)
            results = run_experiment(spec, workers=workers)
            files[f"{label}.csv"] = render_csv(results)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for fname, text in files.items():
            with open(os.path.join(out_dir, fname), "w", newline="") as fh:
                fh.write(text)
    return files
