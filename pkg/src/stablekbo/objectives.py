"""Benchmark objective functions with known global minimizers.

Objectives evaluate on the last axis of an array, so a single point of
shape ``(d,)`` and a particle batch of shape ``(N, d)`` both work.  The
default initialization box for the benchmark experiments is
``[-5.12, -2]**d``, which does not contain any of the minimizers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Objective",
    "eval_objective",
    "make_objective",
    "list_objectives",
    "rastrigin",
    "rastrigin_std",
    "modified_alpine",
    "rosenbrock",
    "sphere",
    "l1_norm",
    "DEFAULT_INIT_BOX",
]

DEFAULT_INIT_BOX = (-5.12, -2.0)


@dataclass(frozen=True)
class Objective:
    """A named objective with minimizer, init box and smoothness flag."""

    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    minimizer: np.ndarray
    init_box: tuple[float, float] = DEFAULT_INIT_BOX
    differentiable: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        lo, hi = self.init_box
        if not lo < hi:
            raise ValueError(f"degenerate init box [{lo}, {hi}]")

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def rastrigin(x):
    """10 + sum(x_k^2 - 10 cos(2 pi x_k)), with a single constant offset 10.

    The constant is not multiplied by the dimension, so the minimum value is
    10*(1-d) at x=0; only the minimizer location matters to the optimizer.
    """
    x = np.asarray(x, dtype=float)
    return 10.0 + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)


def rastrigin_std(x):
    """Conventional Rastrigin, 10*d + sum(x_k^2 - 10 cos(2 pi x_k))."""
    x = np.asarray(x, dtype=float)
    return 10.0 * x.shape[-1] + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)


def modified_alpine(x):
    """sum(|x_k sin(x_k)| + 0.2 |x_k|); non-differentiable, minimum 0 at x=0."""
    x = np.asarray(x, dtype=float)
    return np.sum(np.abs(x * np.sin(x)) + 0.2 * np.abs(x), axis=-1)


def rosenbrock(x):
    """sum(100 (x_{k+1} - x_k^2)^2 + (1 - x_k)^2), minimum 0 at (1, ..., 1)."""
    x = np.asarray(x, dtype=float)
    head = x[..., :-1]
    tail = x[..., 1:]
    return np.sum(100.0 * (tail - head**2) ** 2 + (1.0 - head) ** 2, axis=-1)


def sphere(x):
    """sum(x_k^2)."""
    x = np.asarray(x, dtype=float)
    return np.sum(x**2, axis=-1)


def l1_norm(x):
    """sum(|x_k|); non-differentiable at 0."""
    x = np.asarray(x, dtype=float)
    return np.sum(np.abs(x), axis=-1)


_REGISTRY = {
    "rastrigin": (rastrigin, 0.0, True, 1),
    "rastrigin_std": (rastrigin_std, 0.0, True, 1),
    "modified_alpine": (modified_alpine, 0.0, False, 1),
    "rosenbrock": (rosenbrock, 1.0, True, 2),
    "sphere": (sphere, 0.0, True, 1),
    "l1_norm": (l1_norm, 0.0, False, 1),
}


def list_objectives():
    """Registered objective names in deterministic order."""
    return sorted(_REGISTRY)


def make_objective(name: str, dim: int, init_box=None) -> Objective:
    """Build a registered objective for the given dimension."""
    try:
        fn, mstar, smooth, min_dim = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown objective {name!r}; known: {', '.join(list_objectives())}"
        ) from None
    if dim < min_dim:
        raise ValueError(f"{name} requires dim >= {min_dim}, got {dim}")
    return Objective(
        name=name,
        dim=dim,
        fn=fn,
        minimizer=np.full(dim, mstar, dtype=float),
        init_box=tuple(init_box) if init_box is not None else DEFAULT_INIT_BOX,
        differentiable=smooth,
    )


def eval_objective(obj: Objective, x) -> float:
    """Evaluate ``obj`` at a single point, checking the dimension."""
    x = np.asarray(x, dtype=float)
    if x.shape != (obj.dim,):
        raise ValueError(f"expected point of shape ({obj.dim},), got {x.shape}")
    return float(obj.fn(x))
