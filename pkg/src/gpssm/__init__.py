"""Online learning of Gaussian-process state-space models in square-root form.

The joint Gaussian belief over inducing values and the state is carried as a
mean and a lower Cholesky factor.  Prediction (EKF, UKF or exact-moment ADF),
measurement correction, inducing-point management and hyperparameter
adaptation all act on that factor directly.
"""

from . import linalg
from .belief import GPPrediction, InducingSet, JointBelief, gp_predict, load_snapshot, novelty, save_snapshot
from .errors import GPSSMError
from .hyperparams import HyperOptConfig, hyper_step, recovered_likelihood_objective
from .inducing import ManagerConfig, add_inducing, delete_inducing, discard_scores, enforce_budget, maybe_add
from .kernels import RBF, AffineInputMap, CustomKernel, FunctionInputMap, HeteroKernel, KernelBlock, RBFBasis
from .metrics import PredictionRecord, mnll, nmse
from .model import ModelSpec
from .moments import MomentMatcher, UkfConfig

__version__ = "0.1.0"

__all__ = [
    "AffineInputMap",
    "CustomKernel",
    "FunctionInputMap",
    "GPPrediction",
    "GPSSMError",
    "HeteroKernel",
    "HyperOptConfig",
    "InducingSet",
    "JointBelief",
    "KernelBlock",
    "ManagerConfig",
    "ModelSpec",
    "MomentMatcher",
    "PredictionRecord",
    "RBF",
    "RBFBasis",
    "UkfConfig",
    "add_inducing",
    "delete_inducing",
    "discard_scores",
    "enforce_budget",
    "gp_predict",
    "hyper_step",
    "linalg",
    "load_snapshot",
    "maybe_add",
    "mnll",
    "nmse",
    "novelty",
    "recovered_likelihood_objective",
    "save_snapshot",
]
