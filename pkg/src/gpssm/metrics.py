"""Accuracy metrics for point predictions and Gaussian predictive distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTruthVariance, NonPositiveSigma

__all__ = ["PredictionRecord", "nmse", "mnll", "per_output"]

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class PredictionRecord:
    """Ground truth, predictive mean and predictive standard deviation.

    Arrays have shape (n,) for one output or (n, d) for ``d`` outputs.
    """

    truth: np.ndarray
    mean: np.ndarray
    std: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "truth", np.asarray(self.truth, dtype=float))
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        if self.std is not None:
            object.__setattr__(self, "std", np.asarray(self.std, dtype=float))
        if self.truth.shape != self.mean.shape or (self.std is not None and self.std.shape != self.truth.shape):
            raise ValueError("truth, mean and std must share a shape")


def nmse(records: PredictionRecord) -> float:
    """Mean squared error divided by the (population) variance of the truth."""
    x, xh = records.truth.ravel(), records.mean.ravel()
    if x.size < 2:
        raise DegenerateTruthVariance("need at least two samples")
    var = float(np.var(x))
    if var <= 0.0:
        raise DegenerateTruthVariance("truth has zero variance")
    return float(np.mean((x - xh) ** 2) / var)


def mnll(records: PredictionRecord) -> float:
    """Mean negative log-likelihood of the truth under ``N(mean, std^2)``."""
    if records.std is None:
        raise NonPositiveSigma("mnll needs predictive standard deviations")
    x, xh, s = records.truth.ravel(), records.mean.ravel(), records.std.ravel()
    if x.size < 1:
        raise ValueError("need at least one sample")
    if np.any(~(s > 0.0)):
        raise NonPositiveSigma("predictive standard deviations must be positive")
    return float(np.mean(0.5 * (((x - xh) / s) ** 2 + 2.0 * np.log(s) + _LOG_2PI)))


def per_output(records: PredictionRecord) -> dict[str, list[float] | float]:
    """nMSE and MNLL for every output column plus their means across outputs."""
    truth = records.truth.reshape(len(records.truth), -1)
    mean = records.mean.reshape(truth.shape)
    std = None if records.std is None else records.std.reshape(truth.shape)
    out_nmse, out_mnll = [], []
    for j in range(truth.shape[1]):
        rec = PredictionRecord(truth[:, j], mean[:, j], None if std is None else std[:, j])
        out_nmse.append(nmse(rec))
        out_mnll.append(mnll(rec) if std is not None else float("nan"))
    return {
        "nmse": out_nmse,
        "mnll": out_mnll,
        "nmse_mean": float(np.mean(out_nmse)),
        "mnll_mean": float(np.mean(out_mnll)),
    }
