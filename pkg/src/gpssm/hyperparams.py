"""Online kernel-hyperparameter adaptation from the current inducing posterior.

The posterior over inducing values is read as prior times an implicit
Gaussian likelihood.  That likelihood is recovered with the hyperparameters
in force when the posterior was formed, and the hyperparameters are then
moved uphill on its marginal likelihood.  The belief itself is never touched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from . import linalg
from .belief import JointBelief, kernel_chol
from .errors import Degenerate
from .inducing import ManagerConfig, prune_redundant
from .kernels import HeteroKernel

__all__ = ["HyperOptConfig", "RecoveredLikelihood", "recover_likelihood", "recovered_likelihood_objective", "hyper_step"]


@dataclass(frozen=True)
class HyperOptConfig:
    """Gradient-ascent schedule; ``learn_variance=False`` freezes signal variances."""

    enabled: bool = True
    step_size: float = 1e-2
    steps_per_update: int = 1
    update_period: int = 1
    learn_variance: bool = True

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.steps_per_update < 1 or self.update_period < 1:
            raise ValueError("steps_per_update and update_period must be at least 1")


@dataclass(frozen=True)
class RecoveredLikelihood:
    """Pseudo-observation ``obs = basis^T u + noise`` with ``noise ~ N(0, diag(noise_var))``."""

    basis: np.ndarray
    obs: np.ndarray
    noise_var: np.ndarray


def recover_likelihood(belief: JointBelief, kernel: HeteroKernel, rel_tol: float = 1e-8) -> RecoveredLikelihood:
    """Implicit likelihood whose product with the current prior gives the inducing posterior.

    Its precision ``S_uu^{-1} - K_uu^{-1}`` is projected onto its positive
    eigenspace; directions with no positive precision carry no information.
    """
    n_u = belief.n_u
    if n_u == 0:
        raise Degenerate("no inducing points")
    A = belief.factor[:n_u, :n_u]
    A_inv = linalg.tri_solve(A, np.eye(n_u))
    post_prec = A_inv.T @ A_inv
    prior_prec = np.zeros((n_u, n_u))
    ind = belief.inducing
    for k in range(ind.d_f):
        rows = ind.rows(k)
        if rows.stop > rows.start:
            prior_prec[rows, rows] = cho_solve(
                (kernel_chol(ind, kernel, k), True), np.eye(rows.stop - rows.start), check_finite=False
            )
    lik_prec = post_prec - prior_prec
    vals, vecs = np.linalg.eigh(0.5 * (lik_prec + lik_prec.T))
    keep = vals > rel_tol * np.max(np.linalg.eigvalsh(prior_prec))
    if not np.any(keep):
        raise Degenerate("posterior carries no information beyond the prior")
    basis, prec = vecs[:, keep], vals[keep]
    obs = (basis.T @ (post_prec @ belief.mean_u)) / prec
    return RecoveredLikelihood(basis, obs, 1.0 / prec)


def recovered_likelihood_objective(
    belief: JointBelief, kernel: HeteroKernel, theta=None, likelihood: RecoveredLikelihood | None = None
) -> tuple[float, np.ndarray]:
    """Log marginal likelihood of the recovered pseudo-data and its gradient in log space.

    The likelihood is recovered with the kernel's current hyperparameters;
    ``theta`` (default: current) is where the objective is evaluated.
    """
    lik = recover_likelihood(belief, kernel) if likelihood is None else likelihood
    theta_old = kernel.theta
    ind = belief.inducing
    if theta is not None and np.array_equal(theta, theta_old):
        theta = None
    if theta is not None:
        kernel.theta = theta
    try:
        Ku = np.zeros((ind.n_total, ind.n_total))
        for k in range(ind.d_f):
            rows = ind.rows(k)
            Ku[rows, rows] = kernel.eval_block(k, ind.inputs[k], ind.inputs[k])
        V = lik.basis
        C = V.T @ Ku @ V + np.diag(lik.noise_var)
        Lc = linalg.cholesky(C)
        alpha = cho_solve((Lc, True), lik.obs, check_finite=False)
        value = -0.5 * lik.obs @ alpha - np.sum(np.log(np.diagonal(Lc))) - 0.5 * lik.obs.size * np.log(2 * np.pi)
        inner = np.outer(alpha, alpha) - cho_solve((Lc, True), np.eye(C.shape[0]), check_finite=False)
        grad = np.zeros(theta_old.size)
        for k, sl in enumerate(kernel.param_slices()):
            rows = ind.rows(k)
            if sl.stop == sl.start or rows.stop == rows.start:
                continue
            Vk = V[rows]
            M = Vk @ inner @ Vk.T
            dK = kernel.grad_hyper(k, ind.inputs[k], ind.inputs[k])
            grad[sl] = 0.5 * np.einsum("ij,pij->p", M, dK)
    finally:
        if theta is not None:
            kernel.theta = theta_old
    return float(value), grad


def _mask(kernel: HeteroKernel, cfg: HyperOptConfig) -> np.ndarray:
    mask = np.ones(kernel.theta.size)
    if not cfg.learn_variance:
        for b, sl in zip(kernel.blocks, kernel.param_slices()):
            if sl.stop > sl.start and getattr(b.kernel, "kind", "") in ("rbf", "rbf+basis"):
                mask[sl.start] = 0.0
    return mask


def hyper_step(
    belief: JointBelief,
    kernel: HeteroKernel,
    cfg: HyperOptConfig,
    manager: ManagerConfig | None = None,
    step_index: int = 0,
) -> JointBelief:
    """Gradient-ascent update of ``kernel.theta`` followed by redundancy pruning.

    The kernel is modified in place.  The returned belief differs from the
    input only if pruning removed points.
    """
    if not cfg.enabled or step_index % cfg.update_period != 0:
        return belief
    if kernel.theta.size == 0 or not all(b.kernel.differentiable for b in kernel.blocks):
        return belief
    try:
        lik = recover_likelihood(belief, kernel)
    except Degenerate:
        return belief
    mask = _mask(kernel, cfg)
    theta = kernel.theta
    for _ in range(cfg.steps_per_update):
        _, grad = recovered_likelihood_objective(belief, kernel, theta, lik)
        theta = theta + cfg.step_size * mask * grad
    if np.any(theta != kernel.theta):
        kernel.theta = theta
    if manager is not None:
        belief = prune_redundant(belief, kernel, manager)
    return belief
