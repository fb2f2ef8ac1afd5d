"""Adding, scoring, discarding and pruning inducing points on a factored belief."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from . import linalg
from .belief import JointBelief, gp_predict, kernel_chol, novelty
from .kernels import HeteroKernel

__all__ = [
    "ManagerConfig",
    "maybe_add",
    "add_inducing",
    "delete_inducing",
    "discard_scores",
    "enforce_budget",
    "prune_redundant",
    "pruning_gammas",
]


@dataclass(frozen=True)
class ManagerConfig:
    """Thresholds for inducing-set control.

    eps_tol
        A candidate is added when its novelty, relative to the largest prior
        variance in its dimension, exceeds this value.
    budget
        Maximum total number of inducing points across all dimensions.
    rho
        Pruning removes a point whose relative novelty is below ``rho * eps_tol``.
    """

    eps_tol: float = 1e-2
    budget: int = 15
    rho: float = 0.1

    def __post_init__(self):
        if not self.eps_tol > 0:
            raise ValueError("eps_tol must be positive")
        if int(self.budget) < 1:
            raise ValueError("budget must be at least 1")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")


def _max_prior_variance(belief: JointBelief, kernel: HeteroKernel, k: int) -> float:
    return float(np.max(kernel.kernel(k).diag(belief.inducing.inputs[k])))


def add_inducing(belief: JointBelief, kernel: HeteroKernel, k: int, z) -> JointBelief:
    """Augment the belief with the latent value of dimension ``k`` at input ``z``."""
    z = np.asarray(z, dtype=float).reshape(kernel.input_dim(k))
    pred = gp_predict(belief, kernel, [(k, z)])
    inducing, at = belief.inducing.with_added(kernel, k, z)
    cross = np.r_[pred.cov_fu[0], pred.cov_fx[0]][:, None]
    factor = linalg.chol_insert_block(belief.factor, at, cross[:at], pred.cov_ff, cross[at:])
    mean = np.insert(belief.mean, at, pred.mean[0])
    return JointBelief(mean, factor, inducing)


def maybe_add(
    belief: JointBelief, kernel: HeteroKernel, cfg: ManagerConfig, x_mean, c=None
) -> tuple[JointBelief, list[int]]:
    """Add ``f_t^k`` at ``phi_k(x_mean, c)`` for every dimension where it is novel."""
    gamma = novelty(belief, kernel, x_mean, c)
    inputs = kernel.inputs(x_mean, c)
    added = []
    for k in range(kernel.d_f):
        if len(belief.inducing.inputs[k]) == 0 or gamma[k] / _max_prior_variance(belief, kernel, k) > cfg.eps_tol:
            added.append(k)
    for k in added:
        belief = add_inducing(belief, kernel, k, inputs[k])
    return belief, added


def delete_inducing(belief: JointBelief, kernel: HeteroKernel | None, rows) -> JointBelief:
    """Marginalize the given inducing rows out of the belief."""
    rows = sorted({int(r) for r in np.atleast_1d(rows)})
    if not rows:
        return belief
    if rows[-1] >= belief.n_u or rows[0] < 0:
        raise IndexError("can only delete inducing rows")
    factor = linalg.chol_delete_block(belief.factor, rows)
    mean = np.delete(belief.mean, rows)
    return JointBelief(mean, factor, belief.inducing.with_removed(kernel, rows))


def discard_scores(belief: JointBelief, kernel: HeteroKernel) -> np.ndarray:
    """Importance score of every scalar inducing point (lower is less important).

    The score equals ``2 * KL + 1`` where KL is the divergence between the
    current belief and the one obtained by replacing that point's posterior
    conditional with its prior conditional.
    """
    ind = belief.inducing
    n_u = ind.n_total
    L = belief.factor
    m_u = belief.mean_u
    scores = np.empty(n_u)
    Linv = linalg.tri_solve(L, np.eye(L.shape[0]))
    omega_diag = np.einsum("ij,ij->j", Linv[:, :n_u], Linv[:, :n_u])
    for k in range(ind.d_f):
        rows = ind.rows(k)
        if rows.stop == rows.start:
            continue
        Qk = cho_solve((kernel_chol(ind, kernel, k), True), np.eye(rows.stop - rows.start), check_finite=False)
        Lr = L[rows]
        QL = Qk @ Lr
        q = np.diagonal(Qk)
        delta_mean = (Qk @ m_u[rows]) ** 2 / q
        delta_cov = np.einsum("ij,ij->i", QL, QL) / q
        delta_logdet = np.log(omega_diag[rows]) - np.log(q)
        scores[rows] = delta_mean + delta_cov + delta_logdet
    return scores


def enforce_budget(belief: JointBelief, kernel: HeteroKernel, cfg: ManagerConfig) -> JointBelief:
    """Drop the lowest-scoring points until at most ``cfg.budget`` remain."""
    excess = belief.n_u - int(cfg.budget)
    if excess <= 0:
        return belief
    scores = discard_scores(belief, kernel)
    order = np.lexsort((belief.inducing.all_serials(), scores))
    return delete_inducing(belief, kernel, order[:excess])


def pruning_gammas(belief: JointBelief, kernel: HeteroKernel, k: int) -> np.ndarray:
    """Leave-one-out conditional prior variances of the dimension-``k`` inducing points."""
    ind = belief.inducing
    n_k = len(ind.inputs[k])
    if n_k == 0:
        return np.zeros(0)
    Linv = linalg.tri_solve(kernel_chol(ind, kernel, k), np.eye(n_k))
    return 1.0 / np.einsum("ij,ij->j", Linv, Linv)


def prune_redundant(belief: JointBelief, kernel: HeteroKernel, cfg: ManagerConfig) -> JointBelief:
    """Remove at most one nearly redundant inducing point per dimension."""
    doomed = []
    for k in range(kernel.d_f):
        if len(belief.inducing.inputs[k]) < 2:
            continue
        ratio = pruning_gammas(belief, kernel, k) / _max_prior_variance(belief, kernel, k)
        j = int(np.lexsort((belief.inducing.serials[k], ratio))[0])
        if ratio[j] < cfg.rho * cfg.eps_tol:
            doomed.append(belief.inducing.row(k, j))
    return delete_inducing(belief, kernel, doomed)
