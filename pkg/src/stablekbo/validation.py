"""Exact-solution validation of the simplified 1D fractional dynamics.

With unit drift toward the origin, no Gaussian term, jump coefficient
``x**2`` and Cauchy (alpha = 1) jumps, the evolving density has the closed
form ``f(x, t) = scale(t) / (pi * (scale(t)**2 + x**2))`` with
``scale(t) = exp(-t) / (2 - exp(-t))``.  Particles are stepped with the
same drift-then-jump splitting as the optimizer, the density is
reconstructed by histogram on a fixed window, and the max-norm error
against the closed form is tracked as the particle count grows.

Heavy-tailed caveat, documented because it shapes the observable results:
the quadratic jump coefficient lets far-out particles cascade to numerical
infinity (a few percent of the initial heavy tail by the final time).
Escaped particles are frozen and keep counting toward the histogram
normalization, so the lost mass is visible as a deficit of the
reconstructed density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RngStream, StableLaw, sample_stable_array

__all__ = [
    "ValidationConfig",
    "DensityGrid",
    "ValidationResult",
    "ConvergenceResult",
    "exact_scale",
    "exact_solution",
    "sample_initial",
    "validation_step",
    "reconstruct_density",
    "linf_error",
    "run_validation",
    "convergence_study",
    "render_error_csv",
    "render_density_csv",
    "emit_error_csv",
    "emit_density_csv",
]

DEFAULT_WINDOW = (-20.0, 20.0)
DEFAULT_GRID_POINTS = 2**10
DEFAULT_SNAPSHOT_TIMES = (0.1, 1.0, 2.0)


@dataclass(frozen=True)
class ValidationConfig:
    """Parameters of the validation run; only alpha = 1 has the closed form."""

    n_particles: int = 10**6
    dt: float = 0.01
    t_final: float = 2.0
    alpha: float = 1.0
    nu: float = 1.0
    gamma: float = 1.0
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha != 1.0:
            raise ValueError("the exact-solution comparison requires alpha = 1")
        if self.sigma != 0.0:
            raise ValueError("the simplified dynamics have no Gaussian term (sigma = 0)")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if not self.dt > 0 or not self.t_final > 0:
            raise ValueError("dt and t_final must be positive")
        if self.nu * self.dt > 1.0:
            raise ValueError("nu*dt must not exceed 1")


@dataclass
class DensityGrid:
    """Histogram density on a uniform 1D grid; values attach to cell centers."""

    lo: float = DEFAULT_WINDOW[0]
    hi: float = DEFAULT_WINDOW[1]
    m_x: int = DEFAULT_GRID_POINTS
    values: np.ndarray | None = None

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"degenerate window [{self.lo}, {self.hi}]")
        if self.m_x < 1:
            raise ValueError("m_x must be >= 1")
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=float)
            if self.values.shape != (self.m_x,):
                raise ValueError(f"values must have shape ({self.m_x},)")
            if np.any(self.values < 0):
                raise ValueError("density values must be non-negative")
            if self.mass() > 1.0 + 1e-12:
                raise ValueError("mass inside the window cannot exceed 1")

    @property
    def cell_width(self) -> float:
        return (self.hi - self.lo) / self.m_x

    @property
    def centers(self) -> np.ndarray:
        return self.lo + self.cell_width * (np.arange(self.m_x) + 0.5)

    def mass(self) -> float:
        return float(np.sum(self.values) * self.cell_width)


@dataclass
class ValidationResult:
    """Density snapshots, errors against the closed form, and escape counts."""

    config: ValidationConfig
    snapshots: dict[float, DensityGrid]
    errors: dict[float, float]
    n_escaped: dict[float, int]


@dataclass
class ConvergenceResult:
    """Mean max-norm error per particle count and the fitted log-log slope."""

    points: list[tuple[int, float]]
    slope: float


def exact_scale(t: float) -> float:
    """Scale of the exact density, exp(-t) / (2 - exp(-t))."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return float(np.exp(-t) / (2.0 - np.exp(-t)))


def exact_solution(x, t: float):
    """Closed-form density at position(s) x and time t."""
    b = exact_scale(t)
    x = np.asarray(x, dtype=float)
    out = b / (np.pi * (b**2 + x**2))
    return float(out) if out.ndim == 0 else out


def sample_initial(n: int, stream: RngStream) -> np.ndarray:
    """Draw the initial positions from the unit-scale Cauchy density."""
    return sample_stable_array(StableLaw(1.0), n, stream)


def validation_step(positions: np.ndarray, config: ValidationConfig, stream: RngStream) -> np.ndarray:
    """One drift-then-jump step of the simplified dynamics.

    Drift contracts by (1 - nu*dt); the jump adds
    ``gamma * dt**(1/alpha) * x*^2 * z`` with z a standard Cauchy draw,
    evaluated at the post-drift positions.  Non-finite positions are
    flagged by freezing: they stop moving and stay counted.
    """
    positions = np.asarray(positions, dtype=float)
    finite = np.isfinite(positions)
    z = sample_stable_array(StableLaw(config.alpha), positions.shape, stream)
    with np.errstate(over="ignore", invalid="ignore"):
        drifted = (1.0 - config.nu * config.dt) * positions
        jumped = drifted + config.gamma * config.dt ** (1.0 / config.alpha) * drifted**2 * z
    return np.where(finite, jumped, positions)


def reconstruct_density(samples, grid: DensityGrid | None = None,
                        lo: float = DEFAULT_WINDOW[0], hi: float = DEFAULT_WINDOW[1],
                        m_x: int = DEFAULT_GRID_POINTS) -> DensityGrid:
    """Histogram density normalized by the total sample count.

    ``grid`` supplies the window geometry (a fresh grid is returned, the
    template is not mutated); otherwise lo/hi/m_x are used.  Samples
    outside the window, including frozen non-finite ones, land in no cell
    but still count toward the normalization, so truncated or escaped
    tails appear as a mass deficit.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("cannot reconstruct a density from no samples")
    if grid is not None:
        lo, hi, m_x = grid.lo, grid.hi, grid.m_x
    grid = DensityGrid(lo=lo, hi=hi, m_x=m_x)
    finite = samples[np.isfinite(samples)]
    counts, _ = np.histogram(finite, bins=m_x, range=(lo, hi))
    grid.values = counts / (samples.size * grid.cell_width)
    return grid


def linf_error(numeric: DensityGrid, t: float) -> float:
    """Max over cell centers of |exact density - reconstructed density|."""
    if numeric.values is None:
        raise ValueError("density grid holds no values")
    return float(np.max(np.abs(exact_solution(numeric.centers, t) - numeric.values)))


def _snapshot_steps(config: ValidationConfig, times) -> dict[int, float]:
    steps = {}
    for t in times:
        k = round(t / config.dt)
        if abs(k * config.dt - t) > 1e-9 or k < 0:
            raise ValueError(f"snapshot time {t} is not a multiple of dt={config.dt}")
        steps[k] = float(t)
    return steps


def run_validation(
    config: ValidationConfig,
    snapshot_times=DEFAULT_SNAPSHOT_TIMES,
    lo: float = DEFAULT_WINDOW[0],
    hi: float = DEFAULT_WINDOW[1],
    m_x: int = DEFAULT_GRID_POINTS,
    stream: RngStream | None = None,
) -> ValidationResult:
    """Simulate to t_final, reconstructing the density at the snapshot times."""
    times = sorted(set(snapshot_times) | {config.t_final})
    by_step = _snapshot_steps(config, times)
    n_steps = round(config.t_final / config.dt)
    if max(by_step) > n_steps:
        raise ValueError("snapshot times must not exceed t_final")
    if stream is None:
        stream = RngStream(config.seed)
    positions = sample_initial(config.n_particles, stream)

    snapshots: dict[float, DensityGrid] = {}
    errors: dict[float, float] = {}
    escaped: dict[float, int] = {}

    def record(step):
        t = by_step[step]
        grid = reconstruct_density(positions, lo=lo, hi=hi, m_x=m_x)
        snapshots[t] = grid
        errors[t] = linf_error(grid, t)
        escaped[t] = int(np.sum(~np.isfinite(positions)))

    if 0 in by_step:
        record(0)
    for step in range(1, n_steps + 1):
        positions = validation_step(positions, config, stream)
        if step in by_step:
            record(step)
    return ValidationResult(config=config, snapshots=snapshots, errors=errors, n_escaped=escaped)


def convergence_study(config: ValidationConfig, n_values, n_seeds: int = 1) -> ConvergenceResult:
    """Final-time error for each particle count and the fitted log-log slope.

    Errors are averaged over ``n_seeds`` independent replicas (child streams
    of ``config.seed``) before fitting.
    """
    n_values = [int(n) for n in n_values]
    if len(n_values) < 3:
        raise ValueError("need at least 3 particle counts to fit a slope")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly ascending")
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")

    points = []
    for i, n in enumerate(n_values):
        errs = []
        for s in range(n_seeds):
            cfg = ValidationConfig(
                n_particles=n, dt=config.dt, t_final=config.t_final, alpha=config.alpha,
                nu=config.nu, gamma=config.gamma, sigma=config.sigma, seed=config.seed,
            )
            stream = RngStream.child(config.seed, i, s)
            res = run_validation(cfg, snapshot_times=(config.t_final,), stream=stream)
            errs.append(res.errors[config.t_final])
        points.append((n, float(np.mean(errs))))

    slope = float(np.polyfit(np.log([n for n, _ in points]),
                             np.log([e for _, e in points]), 1)[0])
    return ConvergenceResult(points=points, slope=slope)


def render_error_csv(points) -> str:
    """(particle count, error) rows as CSV text; full precision, stable order."""
    lines = ["n_particles,linf_error"]
    lines += [f"{int(n)},{float(e)!r}" for n, e in points]
    return "\n".join(lines) + "\n"


def render_density_csv(grid: DensityGrid, t: float) -> str:
    """(cell center, reconstructed, exact) rows for one snapshot as CSV text."""
    if grid.values is None:
        raise ValueError("density grid holds no values")
    exact = exact_solution(grid.centers, t)
    lines = ["x_center,f_numeric,f_exact"]
    lines += [
        f"{float(x)!r},{float(v)!r},{float(e)!r}"
        for x, v, e in zip(grid.centers, grid.values, exact)
    ]
    return "\n".join(lines) + "\n"


def emit_error_csv(points, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(render_error_csv(points))


def emit_density_csv(grid: DensityGrid, t: float, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(render_density_csv(grid, t))
