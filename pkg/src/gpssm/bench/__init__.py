"""Benchmark harness: data generators, streaming learner, runner and CLI."""

from .config import ExperimentConfig, load_config
from .data import gen_kink, gen_tvparam, kink_mean
from .learner import Learner
from .results import emit_results, read_results_csv
from .runner import RunResult, run_experiment, run_seed

__all__ = [
    "ExperimentConfig",
    "Learner",
    "RunResult",
    "emit_results",
    "gen_kink",
    "gen_tvparam",
    "kink_mean",
    "load_config",
    "read_results_csv",
    "run_experiment",
    "run_seed",
]
