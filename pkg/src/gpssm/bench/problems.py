"""Benchmark problems: model, kernel, data stream and the evaluation applied after a run."""

from __future__ import annotations

import importlib
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..kernels import RBF, AffineInputMap, HeteroKernel, KernelBlock, RBFBasis
from ..metrics import PredictionRecord
from ..model import ModelSpec
from .config import ExperimentConfig
from .data import gen_kink, gen_tvparam, kink_mean
from .learner import Learner

__all__ = ["Evaluation", "Problem", "build_problem", "kink_problem", "tvparam_problem", "linear_problem"]


@dataclass
class Evaluation:
    """Prediction records per estimate kind and the curves worth plotting."""

    records: dict[str, list[PredictionRecord]]
    primary: str
    curves: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class Problem:
    """Everything one seed of an experiment needs.

    ``controls[k]`` drives the transition that produces ``measurements[k + 1]``.
    When ``prior_from_first`` is set, the initial prior was built from
    ``measurements[0]`` and the stream starts at index 1; otherwise the first
    measurement is assimilated before any transition.
    """

    model: ModelSpec
    kernel: HeteroKernel
    measurements: np.ndarray
    controls: np.ndarray | None
    mean_x0: np.ndarray
    cov_x0: np.ndarray
    evaluate: Callable[[Learner, list], Evaluation]
    probe: Callable[[Learner, int], Any] | None = None
    prior_from_first: bool = False


def _rbf_blocks(cfg: ExperimentConfig, input_map) -> list[KernelBlock]:
    return [KernelBlock(RBF(k.variance, [k.lengthscale]), input_map) for k in cfg.kernel]


def kink_problem(cfg: ExperimentConfig, noise: float, seed: int) -> Problem:
    """The latent function is the whole transition mean, read at the current state."""
    data = gen_kink(seed, cfg.horizon, cfg.kink.process_var, noise, cfg.kink.x0_std)
    kernel = HeteroKernel(_rbf_blocks(cfg, AffineInputMap.identity(1)))
    model = ModelSpec(
        d_x=1,
        d_f=1,
        d_y=1,
        transition=lambda x, c, f: f,
        measurement=lambda x: x,
        process_noise=[[cfg.process_noise or cfg.kink.process_var]],
        measurement_noise=[[noise]],
        transition_jac_state=lambda x, c, f: np.zeros((1, 1)),
        transition_jac_latent=lambda x, c, f: np.ones((1, 1)),
        measurement_jac=lambda x: np.ones((1, 1)),
        vectorized=True,
    )

    def evaluate(learner: Learner, probes: list) -> Evaluation:
        grid = np.linspace(data.states.min(), data.states.max(), cfg.kink.grid_points)
        mean, std = learner.predict_latent(0, grid[:, None])
        truth = kink_mean(grid)
        return Evaluation(
            {"prediction": [PredictionRecord(truth, mean, std)]},
            "prediction",
            {"prediction_0": dict(x=grid.tolist(), truth=truth.tolist(), mean=mean.tolist(), std=std.tolist())},
        )

    return Problem(
        model,
        kernel,
        data.measurements[:, None],
        None,
        data.measurements[:1].copy(),
        np.array([[noise]]),
        evaluate,
        prior_from_first=True,
    )


def _tv_basis(z: np.ndarray) -> np.ndarray:
    t = z[0]
    return np.array([np.cos(0.2 * t), np.cos(0.5 * t), np.cos(t)])


def tvparam_problem(cfg: ExperimentConfig, noise: float, seed: int) -> Problem:
    """Both parameters are functions of time, which is fed in as the second control entry."""
    tv = cfg.tvparam
    sigma_m = float(np.sqrt(noise))
    data = gen_tvparam(seed, cfg.horizon, cfg.dt, sigma_m, tv.x0, tv.amplitude, tv.period)
    time_map = AffineInputMap.control_only(1, [[0.0, 1.0]])
    blocks = _rbf_blocks(cfg, time_map)
    if tv.basis_kernel:
        second = cfg.kernel[1]
        blocks[1] = KernelBlock(RBFBasis(_tv_basis, np.eye(3), second.variance, [second.lengthscale]), time_map)
    kernel = HeteroKernel(blocks)
    dt = cfg.dt

    def transition(x, c, f):
        return x + dt * (f[..., 0:1] * x + f[..., 1:2] + c[0])

    model = ModelSpec(
        d_x=1,
        d_f=2,
        d_y=1,
        transition=transition,
        measurement=lambda x: x,
        process_noise=[[cfg.process_noise]],
        measurement_noise=[[noise]],
        d_c=2,
        measurement_jac=lambda x: np.ones((1, 1)),
        vectorized=True,
    )
    controls = np.column_stack([data.control, data.times])
    times = data.times[:, None]

    def probe(learner: Learner, k: int):
        return [learner.predict_latent(j, times[k : k + 1]) for j in range(2)]

    def evaluate(learner: Learner, probes: list) -> Evaluation:
        n = len(probes)
        records: dict[str, list[PredictionRecord]] = {"filtering": [], "smoothing": []}
        curves = {}
        for j in range(2):
            f_mean = np.array([p[j][0][0] for p in probes])
            f_std = np.array([p[j][1][0] for p in probes])
            records["filtering"].append(PredictionRecord(data.theta[:n, j], f_mean, f_std))
            s_mean, s_std = learner.predict_latent(j, times)
            records["smoothing"].append(PredictionRecord(data.theta[:, j], s_mean, s_std))
            curves[f"filtering_{j}"] = dict(
                x=data.times[:n].tolist(), truth=data.theta[:n, j].tolist(), mean=f_mean.tolist(), std=f_std.tolist()
            )
            curves[f"smoothing_{j}"] = dict(
                x=data.times.tolist(), truth=data.theta[:, j].tolist(), mean=s_mean.tolist(), std=s_std.tolist()
            )
        lengthscales = [float(learner.kernel.kernel(j).params.lengthscales[0]) for j in range(2)]
        return Evaluation(records, "filtering", curves, {"lengthscales": lengthscales})

    return Problem(
        model,
        kernel,
        data.measurements[:, None],
        controls,
        np.zeros(1),
        np.array([[tv.prior_var]]),
        evaluate,
        probe=probe,
    )


def linear_problem(cfg: ExperimentConfig, noise: float, seed: int, options: dict | None = None) -> Problem:
    """Scalar state driven by an unknown function of a known exogenous input.

    ``x' = a x + f(c) + noise`` with the latent input independent of the
    state, so every prediction backend sees the same affine map.
    """
    opts = dict(a=0.9, process_var=0.01)
    opts.update(options or {})
    a = float(opts["a"])
    rng = np.random.default_rng(seed)
    T = cfg.horizon
    inputs = np.sin(0.3 * np.arange(T))[:, None]
    x = np.zeros(T)
    for k in range(T - 1):
        x[k + 1] = a * x[k] + np.tanh(2.0 * inputs[k, 0]) + np.sqrt(opts["process_var"]) * rng.standard_normal()
    y = x + np.sqrt(noise) * rng.standard_normal(T)
    input_map = AffineInputMap.control_only(1, [[1.0]])
    blocks = _rbf_blocks(cfg, input_map) or [KernelBlock(RBF(1.0, [0.5]), input_map)]
    kernel = HeteroKernel(blocks)
    model = ModelSpec(
        d_x=1,
        d_f=1,
        d_y=1,
        transition=lambda x, c, f: a * x + f,
        measurement=lambda x: x,
        process_noise=[[opts["process_var"]]],
        measurement_noise=[[noise]],
        d_c=1,
        transition_jac_state=lambda x, c, f: np.array([[a]]),
        transition_jac_latent=lambda x, c, f: np.ones((1, 1)),
        measurement_jac=lambda x: np.ones((1, 1)),
        vectorized=True,
    )

    def evaluate(learner: Learner, probes: list) -> Evaluation:
        grid = np.linspace(-1.0, 1.0, 50)
        mean, std = learner.predict_latent(0, grid[:, None])
        truth = np.tanh(2.0 * grid)
        return Evaluation(
            {"prediction": [PredictionRecord(truth, mean, std)]},
            "prediction",
            {"prediction_0": dict(x=grid.tolist(), truth=truth.tolist(), mean=mean.tolist(), std=std.tolist())},
        )

    return Problem(model, kernel, y[:, None], inputs, np.zeros(1), np.eye(1), evaluate)


def _resolve_factory(spec: str) -> Callable:
    module, _, name = spec.partition(":")
    if not module or not name:
        raise ValueError(f"factory must look like 'module:callable', got {spec!r}")
    return getattr(importlib.import_module(module), name)


def build_problem(cfg: ExperimentConfig, noise: float, seed: int) -> Problem:
    if cfg.experiment == "kink":
        return kink_problem(cfg, noise, seed)
    if cfg.experiment == "tvparam":
        return tvparam_problem(cfg, noise, seed)
    factory = _resolve_factory(cfg.custom.factory)
    return factory(cfg, noise, seed, cfg.custom.options)
