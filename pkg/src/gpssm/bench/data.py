"""Synthetic data generators for the benchmark experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "kink_mean",
    "KinkData",
    "gen_kink",
    "square_wave",
    "tv_theta",
    "TvParamData",
    "gen_tvparam",
]


def kink_mean(x):
    """Noise-free kink transition map."""
    x = np.asarray(x, dtype=float)
    return 0.8 + (x + 0.2) * (1.0 - 5.0 / (1.0 + np.exp(-2.0 * x)))


@dataclass(frozen=True)
class KinkData:
    states: np.ndarray
    measurements: np.ndarray
    sigma_p2: float
    sigma_m2: float


def gen_kink(seed: int, T: int = 600, sigma_p2: float = 0.05, sigma_m2: float = 0.008, x0_std: float = 1.0) -> KinkData:
    """Simulate ``T`` states of the kink system and their noisy measurements.

    The initial state is drawn from ``N(0, x0_std^2)``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(seed)
    x = np.empty(T)
    x[0] = x0_std * rng.standard_normal()
    proc = np.sqrt(sigma_p2) * rng.standard_normal(T)
    for t in range(T - 1):
        x[t + 1] = kink_mean(x[t]) + proc[t]
    y = x + np.sqrt(sigma_m2) * rng.standard_normal(T)
    return KinkData(x, y, sigma_p2, sigma_m2)


def square_wave(t, amplitude: float = 1.0, period: float = 4.0):
    """``+amplitude`` on the first half of each period, ``-amplitude`` on the second."""
    phase = np.mod(np.asarray(t, dtype=float), period)
    return np.where(phase < 0.5 * period, amplitude, -amplitude)


def tv_theta(t) -> np.ndarray:
    """True time-varying parameters ``(cos t, cos 0.2 t)``, shape (n, 2)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.column_stack([np.cos(t), np.cos(0.2 * t)])


@dataclass(frozen=True)
class TvParamData:
    times: np.ndarray
    control: np.ndarray
    states: np.ndarray
    measurements: np.ndarray
    theta: np.ndarray
    dt: float
    sigma_m: float


def gen_tvparam(
    seed: int,
    T: int,
    dt: float = 0.05,
    sigma_m: float = 0.05,
    x0: float = 0.0,
    amplitude: float = 1.0,
    period: float = 4.0,
) -> TvParamData:
    """Euler simulation of ``dx/dt = theta1(t) x + theta2(t) + c(t)`` measured with noise.

    ``c`` is a square wave; ``sigma_m`` is the measurement standard deviation.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(seed)
    times = dt * np.arange(T)
    control = square_wave(times, amplitude, period)
    theta = tv_theta(times)
    x = np.empty(T)
    x[0] = x0
    for k in range(T - 1):
        x[k + 1] = x[k] + dt * (theta[k, 0] * x[k] + theta[k, 1] + control[k])
    y = x + sigma_m * rng.standard_normal(T)
    return TvParamData(times, control, x, y, theta, dt, sigma_m)
