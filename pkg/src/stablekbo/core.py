"""Consensus dynamics with Gaussian and alpha-stable diffusion.

One iteration splits into a deterministic drift toward the weighted
consensus point followed by a stochastic step that adds a Gaussian term
scaled by ``sigma*sqrt(dt)`` and a heavy-tailed stable term scaled by
``gamma*dt**(1/alpha)``, both modulated by the distance-to-consensus
diffusion matrix evaluated at the post-drift positions.  The consensus
weights use the overflow-free shifted exponent, which is algebraically
exact for any beta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import Objective
from .rng import RngStream, StableLaw, sample_stable_array

__all__ = [
    "ParticleEnsemble",
    "KboConfig",
    "ConsensusState",
    "RunRecord",
    "NonFinitePositionsError",
    "init_ensemble",
    "consensus_point",
    "drift_step",
    "diffusion_apply",
    "diffusion_step",
    "kbo_step",
    "run",
]

DIFFUSION_MODES = ("isotropic", "anisotropic")
STALL_MODES = ("consecutive", "cumulative")


class NonFinitePositionsError(RuntimeError):
    """Raised when a particle position stops being finite."""

    def __init__(self, index: int, step: int):
        self.index = index
        self.step = step
        super().__init__(
            f"particle {index} became non-finite at step {step}; "
            "consider a smaller time step or a noise clip"
        )


@dataclass
class ParticleEnsemble:
    """N particle positions in R^d plus the current iteration index."""

    positions: np.ndarray
    step_index: int = 0

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def check_finite(self):
        """Raise if any position is non-finite, identifying the particle."""
        finite = np.isfinite(self.positions).all(axis=1)
        if not finite.all():
            raise NonFinitePositionsError(int(np.argmin(finite)), self.step_index)


@dataclass
class KboConfig:
    """All parameters of a single optimization run."""

    dim: int
    nu: float = 1.0
    sigma: float = 0.0
    gamma: float = 0.0
    alpha: float = 1.5
    beta: float = 5e6
    dt: float = 0.1
    n_t: int = 10_000
    n_particles: int = 200
    diffusion_mode: str = "anisotropic"
    delta_stall: float = 1e-4
    j_stall: int = 1_000
    seed: int = 0
    init_box: tuple[float, float] = (-5.12, -2.0)
    noise_clip: float | None = None
    stall_mode: str = "consecutive"

    def __post_init__(self):
        if self.dim < 1 or self.n_particles < 1:
            raise ValueError("dim and n_particles must be >= 1")
        if min(self.nu, self.sigma, self.gamma) < 0:
            raise ValueError("nu, sigma, gamma must be non-negative")
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.nu * self.dt > 1.0:
            raise ValueError("nu*dt must not exceed 1 (drift would overshoot)")
        if self.n_t < 1 or self.j_stall < 1:
            raise ValueError("n_t and j_stall must be >= 1")
        if self.delta_stall < 0:
            raise ValueError("delta_stall must be non-negative")
        if self.diffusion_mode not in DIFFUSION_MODES:
            raise ValueError(f"diffusion_mode must be one of {DIFFUSION_MODES}")
        if self.stall_mode not in STALL_MODES:
            raise ValueError(f"stall_mode must be one of {STALL_MODES}")
        lo, hi = self.init_box
        if not lo < hi:
            raise ValueError(f"degenerate init box [{lo}, {hi}]")
        if self.noise_clip is not None and not self.noise_clip > 0:
            raise ValueError("noise_clip must be positive when set")


@dataclass
class ConsensusState:
    """Weighted consensus point and bookkeeping of the weight computation."""

    point: np.ndarray
    weight_log_normalizer: float
    best_particle_energy: float


@dataclass
class RunRecord:
    """Outcome of one optimization run."""

    success: bool
    iterations_used: int
    final_consensus: np.ndarray
    terminated_by: str
    consensus_trajectory: list[np.ndarray] | None = None
    vp_trajectory: list[tuple[float, float]] | None = None


def init_ensemble(config: KboConfig, stream: RngStream) -> ParticleEnsemble:
    """Draw the initial ensemble uniformly on the configured box."""
    lo, hi = config.init_box
    positions = stream.uniform_box(lo, hi, (config.n_particles, config.dim))
    return ParticleEnsemble(positions=positions, step_index=0)


def _weighted_consensus(positions: np.ndarray, energies: np.ndarray, beta: float):
    e_min = np.min(energies)
    if not np.isfinite(e_min):
        raise ValueError("consensus undefined: no particle has finite energy")
    with np.errstate(over="ignore", invalid="ignore"):
        # shifted exponent: exact for any beta, never overflows upward
        weights = np.exp(-beta * (energies - e_min))
    total = weights.sum()
    point = weights @ positions / total
    return point, float(np.log(total)), float(e_min)


def consensus_point(ensemble: ParticleEnsemble, obj: Objective, beta: float) -> ConsensusState:
    """Energy-weighted average of positions with weights exp(-beta*E), shifted by min E."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    with np.errstate(over="ignore", invalid="ignore"):
        # far-flung particles may evaluate to inf; they simply get zero weight
        energies = np.asarray(obj(ensemble.positions), dtype=float)
    point, log_norm, best = _weighted_consensus(ensemble.positions, energies, beta)
    return ConsensusState(point=point, weight_log_normalizer=log_norm, best_particle_energy=best)


def drift_step(ensemble: ParticleEnsemble, consensus: np.ndarray, nu: float, dt: float) -> ParticleEnsemble:
    """Move every particle by nu*dt*(consensus - x); distances scale by 1 - nu*dt."""
    if not 0.0 <= nu * dt <= 1.0:
        raise ValueError("nu*dt must lie in [0, 1]")
    consensus = np.asarray(consensus, dtype=float)
    positions = ensemble.positions + nu * dt * (consensus - ensemble.positions)
    return ParticleEnsemble(positions=positions, step_index=ensemble.step_index)


def diffusion_apply(consensus, x, mode: str, noise):
    """Displacement D(consensus, x) @ noise for one particle or a batch.

    Isotropic mode scales the noise by the Euclidean distance to the
    consensus; anisotropic mode scales it componentwise by the coordinate
    differences.
    """
    if mode not in DIFFUSION_MODES:
        raise ValueError(f"mode must be one of {DIFFUSION_MODES}")
    diff = np.asarray(consensus, dtype=float) - np.asarray(x, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if mode == "isotropic":
        scale = np.linalg.norm(diff, axis=-1, keepdims=True)
        return scale * noise
    return diff * noise


def _clip_norm(increment: np.ndarray, max_norm: float) -> np.ndarray:
    norms = np.linalg.norm(increment, axis=-1, keepdims=True)
    factor = np.minimum(1.0, max_norm / np.maximum(norms, 1e-300))
    return increment * factor


def diffusion_step(
    ensemble: ParticleEnsemble,
    consensus: np.ndarray,
    config: KboConfig,
    stream: RngStream,
) -> ParticleEnsemble:
    """Add the Gaussian and stable noise terms at the current (post-drift) positions.

    The consensus vector is not recomputed here; it is the one already used
    for the drift within the same iteration.
    """
    x = ensemble.positions
    shape = x.shape
    increment = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        if config.sigma > 0.0:
            z = stream.normal(shape)
            increment = increment + config.sigma * np.sqrt(config.dt) * diffusion_apply(
                consensus, x, config.diffusion_mode, z
            )
        if config.gamma > 0.0:
            z_stable = sample_stable_array(StableLaw(config.alpha), shape, stream)
            jump = config.gamma * config.dt ** (1.0 / config.alpha) * diffusion_apply(
                consensus, x, config.diffusion_mode, z_stable
            )
            if config.noise_clip is not None:
                jump = _clip_norm(jump, config.noise_clip)
            increment = increment + jump
        positions = x + increment
    out = ParticleEnsemble(positions=positions, step_index=ensemble.step_index)
    out.check_finite()
    return out


def kbo_step(
    ensemble: ParticleEnsemble,
    obj: Objective,
    config: KboConfig,
    stream: RngStream,
) -> tuple[ParticleEnsemble, ConsensusState]:
    """One full iteration: consensus, drift, then diffusion.

    Exactly one objective evaluation per particle happens here; the same
    consensus is reused by both sub-steps.
    """
    cons = consensus_point(ensemble, obj, config.beta)
    moved = drift_step(ensemble, cons.point, config.nu, config.dt)
    moved = diffusion_step(moved, cons.point, config, stream)
    moved.step_index = ensemble.step_index + 1
    return moved, cons


def _vp(positions: np.ndarray, target: np.ndarray, p: float) -> float:
    dist = np.linalg.norm(positions - target, axis=-1)
    return float(np.mean(dist**p))


def run(
    obj: Objective,
    config: KboConfig,
    stream: RngStream | None = None,
    record_consensus: bool = False,
    vp_params=None,
) -> RunRecord:
    """Iterate the dynamics until stall or the iteration cap.

    The stall counter increments when the consensus moves by at most
    ``delta_stall`` in the max norm and, in the default ``consecutive``
    mode, resets to zero otherwise; ``cumulative`` mode never resets.
    ``vp_params`` (an object with ``p`` and ``target``) enables recording
    of the p-th moment trajectory.
    """
    if obj.dim != config.dim:
        raise ValueError(f"objective dim {obj.dim} != config dim {config.dim}")
    if stream is None:
        stream = RngStream(config.seed)
    ensemble = init_ensemble(config, stream)
    cons = consensus_point(ensemble, obj, config.beta)

    trajectory = [cons.point.copy()] if record_consensus else None
    vp_traj = None
    if vp_params is not None:
        target = np.asarray(vp_params.target, dtype=float)
        vp_traj = [(0.0, _vp(ensemble.positions, target, vp_params.p))]

    n = 0
    j = 0
    while n < config.n_t and j < config.j_stall:
        ensemble = drift_step(ensemble, cons.point, config.nu, config.dt)
        ensemble = diffusion_step(ensemble, cons.point, config, stream)
        ensemble.step_index += 1
        new_cons = consensus_point(ensemble, obj, config.beta)
        if np.max(np.abs(new_cons.point - cons.point)) <= config.delta_stall:
            j += 1
        elif config.stall_mode == "consecutive":
            j = 0
        cons = new_cons
        n += 1
        if record_consensus:
            trajectory.append(cons.point.copy())
        if vp_traj is not None:
            vp_traj.append((n * config.dt, _vp(ensemble.positions, target, vp_params.p)))

    return RunRecord(
        success=bool(np.max(np.abs(cons.point - obj.minimizer)) <= 0.25),
        iterations_used=n,
        final_consensus=cons.point,
        terminated_by="stall" if j >= config.j_stall else "max_iter",
        consensus_trajectory=trajectory,
        vp_trajectory=vp_traj,
    )
