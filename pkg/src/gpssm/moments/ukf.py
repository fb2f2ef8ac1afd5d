"""Sigma-point (unscented) prediction of the joint belief."""

from __future__ import annotations

import numpy as np
from scipy.linalg import block_diag

from .. import linalg
from ..belief import JointBelief
from ..errors import DowndateBreaksPositivity
from ..kernels import HeteroKernel
from ..model import ModelSpec
from .common import (
    UkfConfig,
    count_fallback,
    dense_belief,
    latent_batch,
    new_belief,
    sigma_points,
    summarize,
)


def predict_ukf(
    belief: JointBelief,
    kernel: HeteroKernel,
    model: ModelSpec,
    c=None,
    cfg: UkfConfig = UkfConfig(),
    stats=None,
) -> JointBelief:
    """Unscented propagation over ``(u, x_t, eps)`` with ``eps ~ N(0, I_{d_f})``.

    Each sigma point maps to ``F(x, c, mu_gp(x, u) + sqrt(var_gp(x)) * eps)``.
    The new cross-factor is the scaled difference of mirrored images along
    the inducing directions; the new state block comes from one thin QR.
    """
    n_u, d_x, d_f = belief.n_u, belief.d_x, kernel.d_f
    d_s = n_u + d_x + d_f
    weights = cfg.weights(d_s)

    root = block_diag(belief.factor, np.eye(d_f))
    pts = sigma_points(np.r_[belief.mean, np.zeros(d_f)], root, weights.eta)
    U, X, eps = pts[:, :n_u], pts[:, n_u : n_u + d_x], pts[:, n_u + d_x :]
    mu, var = latent_batch(belief.inducing, kernel, X, U, c)
    Y = model.F_batch(X, c, mu + np.sqrt(var) * eps)
    summ = summarize(Y, weights)

    B_new = (weights.eta * weights.w * summ.diff[:n_u]).T
    rows = summ.cov_rows(exclude_diff=n_u) + [model.process_noise_chol.T]
    C_new = linalg.thin_qr(np.vstack(rows)).T
    if weights.centre_coef < 0:
        try:
            C_new = linalg.chol_downdate(C_new, np.sqrt(-weights.centre_coef) * summ.shift)
        except DowndateBreaksPositivity:
            count_fallback(stats, "predict_ukf")
            return _dense(belief, summ, B_new, model)
    return new_belief(belief, summ.mean, B_new, C_new)


def _dense(belief: JointBelief, summ, B_new: np.ndarray, model: ModelSpec) -> JointBelief:
    n_u = belief.n_u
    A = belief.factor[:n_u, :n_u]
    S_uu = A @ A.T
    S_ux = A @ B_new.T
    S_xx = summ.dense_cov() + model.process_noise
    cov = np.block([[S_uu, S_ux], [S_ux.T, S_xx]])
    return dense_belief(np.r_[belief.mean_u, summ.mean], cov, belief.inducing)
