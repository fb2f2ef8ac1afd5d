"""Structure of the state-space model whose latent function is learned."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch

__all__ = ["ModelSpec", "central_difference"]


def central_difference(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Jacobian of ``fn`` at ``x`` by central differences with step ``1e-6 * (1 + |x_i|)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    f0 = np.atleast_1d(np.asarray(fn(x), dtype=float)).reshape(-1)
    J = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = 1e-6 * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (np.asarray(fn(xp), dtype=float).reshape(-1) - np.asarray(fn(xm), dtype=float).reshape(-1)) / (2 * h)
    return J


def _spd(name: str, M, n: int) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape != (n, n):
        raise DimensionMismatch(f"{name} must be {n}x{n}, got {M.shape}")
    if not np.allclose(M, M.T) or np.min(np.linalg.eigvalsh(M)) <= 0.0:
        raise ValueError(f"{name} must be symmetric positive definite")
    return M


@dataclass
class ModelSpec:
    """Transition skeleton ``x' = F(x, c, f) + w_p`` and measurement ``y = g(x) + w_m``.

    When ``vectorized`` is true, ``transition`` must also accept stacked
    states ``(N, d_x)`` and latent values ``(N, d_f)`` and ``measurement``
    stacked states; this lets sigma-point backends avoid a Python loop.
    Missing Jacobian providers are replaced by central differences.
    """

    d_x: int
    d_f: int
    d_y: int
    transition: Callable
    measurement: Callable
    process_noise: np.ndarray
    measurement_noise: np.ndarray
    d_c: int = 0
    transition_jac_state: Callable | None = None
    transition_jac_latent: Callable | None = None
    measurement_jac: Callable | None = None
    vectorized: bool = False

    def __post_init__(self):
        self.process_noise = _spd("process_noise", self.process_noise, self.d_x)
        self.measurement_noise = _spd("measurement_noise", self.measurement_noise, self.d_y)
        self.process_noise_chol = np.linalg.cholesky(self.process_noise)
        self.measurement_noise_chol = np.linalg.cholesky(self.measurement_noise)

    def F(self, x, c, f) -> np.ndarray:
        out = np.asarray(self.transition(np.asarray(x, float), c, np.asarray(f, float)), dtype=float)
        return out.reshape(self.d_x)

    def F_batch(self, X: np.ndarray, c, H: np.ndarray) -> np.ndarray:
        if self.vectorized:
            return np.asarray(self.transition(X, c, H), dtype=float).reshape(len(X), self.d_x)
        return np.array([self.F(x, c, h) for x, h in zip(X, H)]).reshape(len(X), self.d_x)

    def g(self, x) -> np.ndarray:
        return np.asarray(self.measurement(np.asarray(x, float)), dtype=float).reshape(self.d_y)

    def g_batch(self, X: np.ndarray) -> np.ndarray:
        if self.vectorized:
            return np.asarray(self.measurement(X), dtype=float).reshape(len(X), self.d_y)
        return np.array([self.g(x) for x in X]).reshape(len(X), self.d_y)

    def jac_F_x(self, x, c, f) -> np.ndarray:
        if self.transition_jac_state is not None:
            return np.asarray(self.transition_jac_state(x, c, f), dtype=float).reshape(self.d_x, self.d_x)
        return central_difference(lambda v: self.F(v, c, f), x)

    def jac_F_f(self, x, c, f) -> np.ndarray:
        if self.d_f == 0:
            return np.zeros((self.d_x, 0))
        if self.transition_jac_latent is not None:
            return np.asarray(self.transition_jac_latent(x, c, f), dtype=float).reshape(self.d_x, self.d_f)
        return central_difference(lambda v: self.F(x, c, v), f)

    def jac_g(self, x) -> np.ndarray:
        if self.measurement_jac is not None:
            return np.asarray(self.measurement_jac(x), dtype=float).reshape(self.d_y, self.d_x)
        return central_difference(self.g, x)
