"""Run configured experiments seed by seed and collect per-output metrics."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..errors import GPSSMError
from ..hyperparams import HyperOptConfig
from ..inducing import ManagerConfig
from ..metrics import mnll, nmse
from ..moments import MomentMatcher, UkfConfig
from .config import ExperimentConfig
from .learner import Learner
from .problems import Problem, build_problem

__all__ = ["OutputMetric", "RunResult", "make_learner", "stream", "run_seed", "run_experiment"]

log = logging.getLogger(__name__)


@dataclass
class OutputMetric:
    output_dim: int
    nmse: float
    mnll: float


@dataclass
class RunResult:
    """Outcome of one seed at one noise level; ``failure`` is set if the seed aborted."""

    experiment: str
    matcher: str
    noise: float
    seed: int
    seconds: float = float("nan")
    metrics: dict[str, list[OutputMetric]] = field(default_factory=dict)
    primary: str = "prediction"
    inducing_trace: list[int] = field(default_factory=list)
    fallbacks: dict[str, int] = field(default_factory=dict)
    extras: dict[str, Any] = field(default_factory=dict)
    curves: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def max_inducing(self) -> int:
        return max(self.inducing_trace, default=0)

    def primary_nmse(self) -> list[float]:
        return [m.nmse for m in self.metrics.get(self.primary, [])]

    def rows(self) -> list[dict[str, Any]]:
        """CSV rows for the primary estimate, one per output dimension."""
        base = dict(experiment=self.experiment, matcher=self.matcher, noise=self.noise, seed=self.seed)
        tail = dict(seconds=self.seconds, max_inducing=self.max_inducing)
        metrics = self.metrics.get(self.primary)
        if not metrics:
            return [dict(base, output_dim=0, nmse=float("nan"), mnll=float("nan"), **tail)]
        return [dict(base, output_dim=m.output_dim, nmse=m.nmse, mnll=m.mnll, **tail) for m in metrics]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def make_learner(cfg: ExperimentConfig, problem: Problem) -> Learner:
    ukf = UkfConfig(cfg.ukf.alpha, cfg.ukf.beta, cfg.ukf.scaling_dim)
    matcher = MomentMatcher.for_kernel(cfg.matcher, problem.kernel, ukf=ukf, adf_state_step=cfg.adf_state_step)
    hyper = HyperOptConfig(**cfg.hyperopt.model_dump())
    return Learner.start(
        problem.model,
        problem.kernel,
        matcher,
        ManagerConfig(cfg.eps_tol, cfg.budget, cfg.rho),
        hyper,
        problem.mean_x0,
        problem.cov_x0,
    )


def stream(learner: Learner, problem: Problem) -> list:
    """Feed every measurement to the learner once, in order; returns the probe outputs."""
    ys = problem.measurements
    if problem.prior_from_first:
        learner.consumed += 1
    else:
        learner.assimilate(ys[0])
    probes = []
    for k in range(len(ys) - 1):
        c = None if problem.controls is None else problem.controls[k]
        learner.step(ys[k + 1], c)
        if problem.probe is not None:
            probes.append(problem.probe(learner, k))
    return probes


def _metrics(records) -> list[OutputMetric]:
    return [OutputMetric(j, nmse(r), mnll(r)) for j, r in enumerate(records)]


def run_seed(cfg: ExperimentConfig, noise: float, seed: int) -> RunResult:
    """One learner over one data stream.  Numerical failures are recorded, not raised."""
    result = RunResult(cfg.experiment, cfg.matcher, float(noise), int(seed))
    learner = None
    try:
        problem = build_problem(cfg, noise, seed)
        learner = make_learner(cfg, problem)
        start = time.perf_counter()
        probes = stream(learner, problem)
        result.seconds = time.perf_counter() - start
        evaluation = problem.evaluate(learner, probes)
        result.metrics = {kind: _metrics(recs) for kind, recs in evaluation.records.items()}
        result.primary = evaluation.primary
        result.extras = evaluation.extras
        if cfg.output.curves:
            result.curves = evaluation.curves
    except (GPSSMError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        result.failure = f"{type(exc).__name__}: {exc}"
        log.warning("seed %d at noise %g failed: %s", seed, noise, result.failure)
    if learner is not None:
        result.inducing_trace = list(learner.inducing_trace)
        result.fallbacks = dict(learner.stats)
        result.extras.setdefault("measurements_consumed", learner.consumed)
    return result


def _run_job(args) -> RunResult:
    return run_seed(*args)


def run_experiment(cfg: ExperimentConfig) -> list[RunResult]:
    """Every (noise, seed) pair of the config; seeds run in worker processes if ``workers > 1``."""
    jobs = [(cfg, noise, seed) for noise in cfg.noise for seed in cfg.seed_list()]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            return list(pool.map(_run_job, jobs))
    return [_run_job(job) for job in jobs]
