"""First-order (extended Kalman) prediction of the joint belief."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve

from .. import linalg
from ..belief import JointBelief, kernel_chol
from ..kernels import HeteroKernel
from ..model import ModelSpec
from .common import new_belief


def linearize_latent(belief: JointBelief, kernel: HeteroKernel, c):
    """GP conditional at the state mean and its derivatives.

    Returns the latent mean, conditional variances, the Jacobian of the mean
    w.r.t. the state (d_f, d_x) and w.r.t. the inducing values (d_f, n_u).
    """
    ind = belief.inducing
    m_x, m_u = belief.mean_x, belief.mean_u
    d_f, d_x = kernel.d_f, m_x.size
    mean = np.zeros(d_f)
    var = np.zeros(d_f)
    d_state = np.zeros((d_f, d_x))
    d_inducing = np.zeros((d_f, ind.n_total))
    for k, block in enumerate(kernel.blocks):
        z = block.input_map(m_x, c)
        kzz = float(block.kernel.diag(z[None])[0])
        Zk = ind.inputs[k]
        if len(Zk) == 0:
            var[k] = kzz
            continue
        rows = ind.rows(k)
        Lk = kernel_chol(ind, kernel, k)
        kvec = block.kernel(z[None], Zk)[0]
        alpha = cho_solve((Lk, True), kvec, check_finite=False)
        weights = cho_solve((Lk, True), m_u[rows], check_finite=False)
        mean[k] = alpha @ m_u[rows]
        var[k] = max(kzz - kvec @ alpha, 0.0)
        d_state[k] = weights @ block.kernel.grad_input(z, Zk) @ block.input_map.jac_x(m_x, c)
        d_inducing[k, rows] = alpha
    return mean, var, d_state, d_inducing


def predict_ekf(belief: JointBelief, kernel: HeteroKernel, model: ModelSpec, c=None, stats=None) -> JointBelief:
    """Propagate ``(u, x_t)`` to ``(u, x_{t+1})`` by linearizing at the mean.

    The inducing block of the factor is carried over unchanged; the state rows
    become ``[A_u A + A_x B, C']`` where ``C'`` comes from a thin QR of the
    stacked square roots of the state-driven and noise-driven covariances.
    """
    n_u = belief.n_u
    L = belief.factor
    A, B, C = L[:n_u, :n_u], L[n_u:, :n_u], L[n_u:, n_u:]
    m_x = belief.mean_x
    m_f, var_f, dmu_dx, dmu_du = linearize_latent(belief, kernel, c)

    jac_f = model.jac_F_f(m_x, c, m_f)
    jac_x = model.jac_F_x(m_x, c, m_f) + jac_f @ dmu_dx
    jac_u = jac_f @ dmu_du

    B_new = jac_u @ A + jac_x @ B
    stacked = np.vstack([(jac_x @ C).T, model.process_noise_chol.T, (jac_f * np.sqrt(var_f)).T])
    C_new = linalg.thin_qr(stacked).T
    return new_belief(belief, model.F(m_x, c, m_f), B_new, C_new)
