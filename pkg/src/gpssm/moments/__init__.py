"""Prediction and correction backends for the joint belief."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..belief import JointBelief
from ..kernels import HeteroKernel
from ..model import ModelSpec
from .adf import LatentMoments, adf_latent_moments, predict_adf, require_exact
from .common import UkfConfig
from .correct import correct
from .ekf import linearize_latent, predict_ekf
from .ukf import predict_ukf

__all__ = [
    "MomentMatcher",
    "UkfConfig",
    "LatentMoments",
    "adf_latent_moments",
    "correct",
    "linearize_latent",
    "predict_adf",
    "predict_ekf",
    "predict_ukf",
]

MATCHERS = ("ekf", "ukf", "adf")


@dataclass
class MomentMatcher:
    """Backend selector bundling the prediction and correction settings.

    ``correction`` picks the measurement update; it defaults to the UKF for
    the ``adf`` backend since exact moments are only defined for prediction.
    Fallbacks to dense algebra are tallied in ``stats``.
    """

    kind: str
    ukf: UkfConfig = field(default_factory=UkfConfig)
    adf_state_step: str = "ukf"
    correction: str | None = None
    stats: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if self.kind not in MATCHERS:
            raise ValueError(f"matcher must be one of {MATCHERS}, got {self.kind!r}")
        if self.correction is None:
            self.correction = "ekf" if self.kind == "ekf" else "ukf"
        if self.correction not in ("ekf", "ukf"):
            raise ValueError("correction must be 'ekf' or 'ukf'")

    @classmethod
    def for_kernel(cls, kind: str, kernel: HeteroKernel, **kwargs) -> "MomentMatcher":
        """Build a matcher, refusing ``adf`` when exact moments are unavailable."""
        if kind == "adf":
            require_exact(kernel)
        return cls(kind, **kwargs)

    def predict(self, belief: JointBelief, kernel: HeteroKernel, model: ModelSpec, c=None) -> JointBelief:
        if self.kind == "ekf":
            return predict_ekf(belief, kernel, model, c, stats=self.stats)
        if self.kind == "ukf":
            return predict_ukf(belief, kernel, model, c, self.ukf, stats=self.stats)
        return predict_adf(belief, kernel, model, c, self.ukf, self.adf_state_step, stats=self.stats)

    def correct(self, belief: JointBelief, model: ModelSpec, y) -> JointBelief:
        return correct(belief, model, y, self.correction, self.ukf, stats=self.stats)
