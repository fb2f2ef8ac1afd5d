"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations

import numpy as np


class GPSSMError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(GPSSMError, np.linalg.LinAlgError):
    """A Cholesky factorization hit a non-positive pivot even after jitter."""


class SingularKernelMatrix(NotPositiveDefinite):
    """The Gram matrix of an inducing set could not be factorized."""


class DowndateBreaksPositivity(GPSSMError, np.linalg.LinAlgError):
    """A rank-one downdate would leave a non-positive-definite factor."""


class InnovationCovarianceSingular(GPSSMError, np.linalg.LinAlgError):
    """The measurement innovation covariance is not positive definite."""


class DimensionMismatch(GPSSMError, ValueError):
    """Array shapes disagree with the declared model or kernel dimensions."""


class Unsupported(GPSSMError, NotImplementedError):
    """The requested combination of kernel, input map or backend is not supported."""


class Degenerate(GPSSMError):
    """The belief carries no information usable by the requested operation."""


class DegenerateTruthVariance(GPSSMError, ValueError):
    """nMSE is undefined because the ground truth has zero variance."""


class NonPositiveSigma(GPSSMError, ValueError):
    """MNLL received a non-positive predictive standard deviation."""


class ConfigError(GPSSMError, ValueError):
    """An experiment configuration failed validation."""
