"""Runtime diagnostics: p-th moments, success criterion, theory constants.

The constants ``b_p_alpha`` and ``c_p_alpha`` come from the convergence
analysis of the drift plus pure-jump dynamics and are valid on the strip
``1 < p < alpha < 2``; ``c_p_alpha = nu*p - gamma**alpha * b_p_alpha`` is
positive exactly when the parameters satisfy the exponential-decay
condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

__all__ = [
    "MomentParams",
    "TheoryConstants",
    "v_p_moment",
    "success_check",
    "mass_in_ball",
    "omega_d",
    "b_p_alpha",
    "b_p_alpha_product",
    "c_p_alpha",
    "fit_decay_rate",
    "SUCCESS_TOLERANCE",
]

SUCCESS_TOLERANCE = 0.25


@dataclass(frozen=True)
class MomentParams:
    """Moment order p and target point for the dispersion diagnostic."""

    p: float
    target: np.ndarray

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        object.__setattr__(self, "target", np.atleast_1d(np.asarray(self.target, dtype=float)))


@dataclass(frozen=True)
class TheoryConstants:
    """Decay-rate constants and the parameter condition nu*p > gamma**alpha * B."""

    b_p_alpha: float
    c_p_alpha: float
    omega_d: float
    condition_ok: bool


def _positions(ensemble) -> np.ndarray:
    return np.atleast_2d(np.asarray(getattr(ensemble, "positions", ensemble), dtype=float))


def v_p_moment(ensemble, params: MomentParams) -> float:
    """Mean of |x_i - target|^p (Euclidean norm) over the ensemble."""
    positions = _positions(ensemble)
    if positions.size == 0:
        raise ValueError("ensemble must be nonempty")
    dist = np.linalg.norm(positions - params.target, axis=-1)
    return float(np.mean(dist**params.p))


def success_check(consensus, minimizer) -> bool:
    """True iff the consensus lies within max-norm 0.25 of the minimizer."""
    consensus = np.atleast_1d(np.asarray(consensus, dtype=float))
    minimizer = np.atleast_1d(np.asarray(minimizer, dtype=float))
    if consensus.shape != minimizer.shape:
        raise ValueError(f"dimension mismatch: {consensus.shape} vs {minimizer.shape}")
    return bool(np.max(np.abs(consensus - minimizer)) <= SUCCESS_TOLERANCE)


def mass_in_ball(ensemble, center, r: float) -> float:
    """Fraction of particles within Euclidean distance r of the center."""
    if r < 0:
        raise ValueError("r must be non-negative")
    positions = _positions(ensemble)
    dist = np.linalg.norm(positions - np.asarray(center, dtype=float), axis=-1)
    return float(np.mean(dist <= r))


def omega_d(d: int) -> float:
    """Volume of the unit ball in R^d, pi^(d/2) / Gamma(d/2 + 1)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return float(np.pi ** (d / 2.0) / _gamma(d / 2.0 + 1.0))


def _check_strip(d: int, p: float, alpha: float):
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 1.0 < p < alpha < 2.0:
        raise ValueError(f"need 1 < p < alpha < 2, got p={p}, alpha={alpha}")


def b_p_alpha(d: int, p: float, alpha: float) -> float:
    """2^alpha G((d+p)/2) G((alpha-p)/2) / (|G(-p/2)| + G((d+p-alpha)/2)).

    G is the Gamma function; the sum in the denominator is intentional
    (see :func:`b_p_alpha_product` for the product variant kept for
    comparison).
    """
    _check_strip(d, p, alpha)
    num = 2.0**alpha * _gamma((d + p) / 2.0) * _gamma((alpha - p) / 2.0)
    den = abs(_gamma(-p / 2.0)) + _gamma((d + p - alpha) / 2.0)
    return float(num / den)


def b_p_alpha_product(d: int, p: float, alpha: float) -> float:
    """Variant of :func:`b_p_alpha` with a product denominator; never used in acceptance."""
    _check_strip(d, p, alpha)
    num = 2.0**alpha * _gamma((d + p) / 2.0) * _gamma((alpha - p) / 2.0)
    den = abs(_gamma(-p / 2.0)) * _gamma((d + p - alpha) / 2.0)
    return float(num / den)


def c_p_alpha(nu: float, gamma: float, d: int, p: float, alpha: float) -> TheoryConstants:
    """Fill the decay constants for the given drift/jump strengths."""
    if nu < 0 or gamma < 0:
        raise ValueError("nu and gamma must be non-negative")
    b = b_p_alpha(d, p, alpha)
    jump_term = gamma**alpha * b
    return TheoryConstants(
        b_p_alpha=b,
        c_p_alpha=float(nu * p - jump_term),
        omega_d=omega_d(d),
        condition_ok=bool(nu * p > jump_term),
    )


def fit_decay_rate(vp_trajectory, burn_in: float = 0.1) -> float:
    """Negated least-squares slope of log V_p against t.

    The first ``burn_in`` fraction of samples is discarded to skip
    transients before the decay regime.
    """
    pts = [(float(t), float(v)) for t, v in vp_trajectory]
    if len(pts) < 3:
        raise ValueError("need at least 3 trajectory points")
    values = np.array([v for _, v in pts])
    if np.any(values <= 0):
        raise ValueError("all V_p values must be positive to fit a log-linear rate")
    skip = int(len(pts) * burn_in)
    if len(pts) - skip < 2:
        skip = len(pts) - 2
    t = np.array([t for t, _ in pts[skip:]])
    logv = np.log(values[skip:])
    slope = np.polyfit(t, logv, 1)[0]
    return float(-slope)
