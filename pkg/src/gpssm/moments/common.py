"""Pieces shared by the prediction and correction backends."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_solve

from .. import linalg
from ..belief import InducingSet, JointBelief, kernel_chol
from ..errors import NotPositiveDefinite
from ..kernels import HeteroKernel

log = logging.getLogger("gpssm.moments")


@dataclass(frozen=True)
class UkfConfig:
    """Unscented-transform spread settings.

    ``scaling_dim`` is the dimension multiplying ``alpha**2 - 1`` in the
    scaling parameter; ``None`` uses the sigma-point dimension itself.
    """

    alpha: float = 1e-3
    beta: float = 2.0
    scaling_dim: int | None = None

    def __post_init__(self):
        if not 1e-4 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [1e-4, 1]")

    def weights(self, d_s: int) -> "SigmaWeights":
        dim = d_s if self.scaling_dim is None else self.scaling_dim
        lam = dim * (self.alpha**2 - 1.0)
        spread = d_s + lam
        if spread <= 0:
            raise ValueError("sigma-point spread d_s + lambda must be positive")
        w_mean0 = lam / spread
        return SigmaWeights(
            eta=float(np.sqrt(spread)),
            w=0.5 / spread,
            w_mean0=w_mean0,
            w_cov0=w_mean0 + 1.0 - self.alpha**2 + self.beta,
            centre_coef=self.beta - self.alpha**2,
        )


class SigmaWeights(NamedTuple):
    eta: float
    w: float
    w_mean0: float
    w_cov0: float
    centre_coef: float


def count_fallback(stats: Counter | None, what: str) -> None:
    log.info("dense fallback in %s", what)
    if stats is not None:
        stats["dense_fallback"] += 1
        stats[f"dense_fallback:{what}"] += 1


def sigma_points(mean: np.ndarray, root: np.ndarray, eta: float) -> np.ndarray:
    """Rows ``mean``, ``mean + eta * root[:, j]``, ``mean - eta * root[:, j]``."""
    spread = eta * root.T
    return np.vstack([mean[None, :], mean + spread, mean - spread])


class SigmaSummary(NamedTuple):
    """Propagated sigma points relative to the centre image.

    ``plus`` and ``minus`` hold ``Y_j^+ - Y_0`` and ``Y_j^- - Y_0``.  With
    ``diff = plus - minus`` and ``curv = plus + minus`` the unscented moments
    are

    * mean  ``Y_0 + shift`` with ``shift = w * sum_j curv_j``
    * cross-covariance with the inputs ``eta * w * root @ diff``
    * covariance ``w/2 * (diff^T diff + curv^T curv) + centre_coef * shift shift^T``

    which equals the usual weighted sums exactly but never forms the large
    cancelling centre weight.
    """

    centre: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    shift: np.ndarray
    weights: SigmaWeights

    @property
    def mean(self) -> np.ndarray:
        return self.centre + self.shift

    @property
    def diff(self) -> np.ndarray:
        return self.plus - self.minus

    @property
    def curv(self) -> np.ndarray:
        return self.plus + self.minus

    def cov_rows(self, exclude_diff: int = 0) -> list[np.ndarray]:
        """Row blocks ``R`` with ``R^T R`` equal to the covariance minus the first
        ``exclude_diff`` directions' ``diff`` contributions; requires centre_coef >= 0."""
        w = self.weights.w
        rows = [np.sqrt(0.5 * w) * self.curv, np.sqrt(0.5 * w) * self.diff[exclude_diff:]]
        if self.weights.centre_coef > 0:
            rows.append(np.sqrt(self.weights.centre_coef) * self.shift[None, :])
        return rows

    def dense_cov(self) -> np.ndarray:
        w = self.weights.w
        D, P = self.diff, self.curv
        return 0.5 * w * (D.T @ D + P.T @ P) + self.weights.centre_coef * np.outer(self.shift, self.shift)


def summarize(Y: np.ndarray, weights: SigmaWeights) -> SigmaSummary:
    d_s = (len(Y) - 1) // 2
    centre = Y[0]
    plus = Y[1 : 1 + d_s] - centre
    minus = Y[1 + d_s :] - centre
    shift = weights.w * (plus.sum(axis=0) + minus.sum(axis=0))
    return SigmaSummary(centre, plus, minus, shift, weights)


def latent_batch(
    inducing: InducingSet, kernel: HeteroKernel, X: np.ndarray, U: np.ndarray, c
) -> tuple[np.ndarray, np.ndarray]:
    """GP conditional mean and variance of every output at stacked states.

    ``X`` is (N, d_x) and ``U`` holds matching inducing-value draws (N, n_u).
    """
    N = X.shape[0]
    mu = np.zeros((N, kernel.d_f))
    var = np.zeros((N, kernel.d_f))
    for k, block in enumerate(kernel.blocks):
        Z = block.input_map.batch(X, c)
        kdiag = block.kernel.diag(Z)
        Zk = inducing.inputs[k]
        if len(Zk) == 0:
            var[:, k] = kdiag
            continue
        Kx = block.kernel(Z, Zk)
        alpha = cho_solve((kernel_chol(inducing, kernel, k), True), Kx.T, check_finite=False)
        mu[:, k] = np.einsum("ji,ij->i", alpha, U[:, inducing.rows(k)])
        var[:, k] = kdiag - np.einsum("ij,ji->i", Kx, alpha)
    return mu, np.maximum(var, 0.0)


def assemble(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    n_u, d_x = A.shape[0], C.shape[0]
    out = np.zeros((n_u + d_x, n_u + d_x))
    out[:n_u, :n_u] = A
    out[n_u:, :n_u] = B
    out[n_u:, n_u:] = C
    return out


def psd_root(S: np.ndarray) -> np.ndarray:
    """Lower factor of a symmetric matrix after clamping negative eigenvalues."""
    S = 0.5 * (S + S.T)
    try:
        return linalg.cholesky(S)
    except NotPositiveDefinite:
        vals, vecs = np.linalg.eigh(S)
        floor = linalg.PIVOT_FLOOR * max(float(vals[-1]), np.finfo(float).tiny)
        root = vecs * np.sqrt(np.clip(vals, floor, None))
        return linalg.thin_qr(root.T).T


def dense_belief(mean: np.ndarray, cov: np.ndarray, inducing: InducingSet) -> JointBelief:
    return JointBelief(mean, psd_root(cov), inducing)


def new_belief(belief: JointBelief, mean_x: np.ndarray, B_new: np.ndarray, C_new: np.ndarray) -> JointBelief:
    n_u = belief.n_u
    factor = assemble(belief.factor[:n_u, :n_u], B_new, C_new)
    return JointBelief(np.r_[belief.mean_u, mean_x], factor, belief.inducing)
