"""Streaming learner: one add / predict / budget / correct / adapt cycle per measurement."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from ..belief import JointBelief, gp_predict
from ..hyperparams import HyperOptConfig, hyper_step
from ..inducing import ManagerConfig, enforce_budget, maybe_add
from ..kernels import HeteroKernel
from ..model import ModelSpec
from ..moments import MomentMatcher

__all__ = ["Learner", "StepRecord"]


@dataclass
class StepRecord:
    n_inducing: int
    added: list[int]


@dataclass
class Learner:
    """Owns the belief, the kernel and the settings of one online learning run."""

    model: ModelSpec
    kernel: HeteroKernel
    matcher: MomentMatcher
    manager: ManagerConfig
    hyper: HyperOptConfig
    belief: JointBelief
    on_step: Callable[["Learner", int], None] | None = None
    steps: int = 0
    consumed: int = 0
    inducing_trace: list[int] = field(default_factory=list)
    theta_trace: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def start(
        cls,
        model: ModelSpec,
        kernel: HeteroKernel,
        matcher: MomentMatcher,
        manager: ManagerConfig,
        hyper: HyperOptConfig,
        mean_x0,
        cov_x0,
    ) -> "Learner":
        if matcher.kind == "adf":
            MomentMatcher.for_kernel("adf", kernel)
        belief = JointBelief.initial(kernel, mean_x0, cov_x0)
        return cls(model, kernel, matcher, manager, hyper, belief)

    @property
    def stats(self) -> Counter:
        return self.matcher.stats

    def assimilate(self, y) -> None:
        """Correct the current belief with ``y`` without a transition."""
        self.belief = self.matcher.correct(self.belief, self.model, y)
        self.consumed += 1

    def step(self, y, c=None) -> StepRecord:
        """Advance one transition driven by ``c`` and assimilate ``y`` at the new time."""
        b, added = maybe_add(self.belief, self.kernel, self.manager, self.belief.mean_x, c)
        b = self.matcher.predict(b, self.kernel, self.model, c)
        b = enforce_budget(b, self.kernel, self.manager)
        self.inducing_trace.append(b.n_u)
        b = self.matcher.correct(b, self.model, y)
        self.consumed += 1
        self.belief = hyper_step(b, self.kernel, self.hyper, self.manager, self.steps)
        self.theta_trace.append(self.kernel.theta.copy())
        self.steps += 1
        if self.on_step is not None:
            self.on_step(self, self.steps)
        return StepRecord(b.n_u, added)

    def run(self, measurements: Iterable, controls: Iterable | None = None) -> None:
        controls = controls if controls is not None else iter(lambda: None, 0)
        for y, c in zip(measurements, controls):
            self.step(y, c)

    def predict_latent(self, k: int, inputs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation of output ``k`` at each input row."""
        inputs = np.asarray(inputs, dtype=float).reshape(len(inputs), -1)
        pred = gp_predict(self.belief, self.kernel, [(k, z) for z in inputs])
        return pred.mean, np.sqrt(np.maximum(np.diagonal(pred.cov_ff), 0.0))


def timed(fn: Callable[[], object]) -> tuple[object, float]:
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start
