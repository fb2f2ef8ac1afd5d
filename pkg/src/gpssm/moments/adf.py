"""Exact-moment (assumed density filtering) prediction for squared-exponential kernels.

The prediction is split in two.  First the joint moments of the latent value
``h = f(x_t)`` with the state and the inducing values are computed in closed
form, which is possible because the kernels are squared-exponential and the
inputs are affine in the state.  Then the Gaussian over ``w = (h, x_t)`` is
pushed through the transition with an unscented (or linearized) step, and
the inducing cross-covariance is recovered by Gaussian conditioning on ``w``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_solve

from .. import linalg
from ..belief import JointBelief, kernel_chol
from ..errors import NotPositiveDefinite, Unsupported
from ..kernels import HeteroKernel
from ..model import ModelSpec
from .common import (
    UkfConfig,
    count_fallback,
    dense_belief,
    new_belief,
    psd_root,
    sigma_points,
    summarize,
)


class LatentMoments(NamedTuple):
    mean: np.ndarray
    cov_hh: np.ndarray
    cov_hx: np.ndarray
    cov_hu: np.ndarray


class _Dim(NamedTuple):
    k: int
    rows: slice
    sigma2: float
    lam: np.ndarray
    weights: np.ndarray
    mean_z: np.ndarray
    offsets: np.ndarray
    precision: np.ndarray
    mean_v: np.ndarray
    cov_vx: np.ndarray
    cov_vu: np.ndarray


def require_exact(kernel: HeteroKernel) -> None:
    if not kernel.supports_exact_moments():
        raise Unsupported("exact moments need squared-exponential kernels on affine inputs in every dimension")


def _affine_parts(block, c) -> tuple[np.ndarray, np.ndarray]:
    imap = block.input_map
    return imap.state_weights, imap(np.zeros(imap.state_weights.shape[1]), c)


def _gauss_overlap(cov_z: np.ndarray, lam: np.ndarray) -> tuple[np.ndarray, float]:
    """``(cov_z + Lambda)^{-1}`` and ``|I + cov_z Lambda^{-1}|^{-1/2}``."""
    total = cov_z + np.diag(lam)
    sign, logdet = np.linalg.slogdet(total)
    if sign <= 0:
        raise NotPositiveDefinite("input covariance plus length scales is not positive definite")
    scale = np.exp(-0.5 * (logdet - np.sum(np.log(lam))))
    return np.linalg.inv(total), scale


def adf_latent_moments(belief: JointBelief, kernel: HeteroKernel, c=None) -> LatentMoments:
    """Closed-form mean of ``h`` and its covariances with ``h``, ``x`` and ``u``."""
    require_exact(kernel)
    ind = belief.inducing
    n_u, d_x, d_f = belief.n_u, belief.d_x, kernel.d_f
    m_x, m_u = belief.mean_x, belief.mean_u
    cov = belief.covariance()
    S_xx, S_ux, S_uu = cov[n_u:, n_u:], cov[:n_u, n_u:], cov[:n_u, :n_u]

    mean = np.zeros(d_f)
    cov_hh = np.zeros((d_f, d_f))
    cov_hx = np.zeros((d_f, d_x))
    cov_hu = np.zeros((d_f, n_u))

    dims: list[_Dim] = []
    for k, block in enumerate(kernel.blocks):
        sigma2 = block.kernel.params.sigma2
        if len(ind.inputs[k]) == 0:
            cov_hh[k, k] = sigma2
            continue
        rows = ind.rows(k)
        Wk, ck = _affine_parts(block, c)
        Qk = cho_solve((kernel_chol(ind, kernel, k), True), np.eye(rows.stop - rows.start), check_finite=False)
        mean_z = Wk @ m_x + ck
        d = _Dim(
            k, rows, sigma2, block.kernel.params.lengthscales**2, Wk, mean_z,
            ind.inputs[k] - mean_z, Qk,
            Qk @ m_u[rows], Qk @ S_ux[rows], Qk @ S_uu[rows],
        )
        dims.append(d)

        # single sums: mean and covariances with x and u
        S_zx = Wk @ S_xx
        S_zu = (S_ux @ Wk.T).T
        P, scale = _gauss_overlap(S_zx @ Wk.T, d.lam)
        R = d.offsets @ P
        b = sigma2 * scale * np.exp(-0.5 * np.einsum("ij,ij->i", R, d.offsets))
        S_vz = d.cov_vx @ Wk.T
        cond_v = d.mean_v + np.einsum("ij,ij->i", S_vz, R)
        mean[k] = b @ cond_v
        tilt = (b * cond_v) @ R - (b @ S_vz) @ P
        cov_hx[k] = b @ d.cov_vx + tilt @ S_zx
        cov_hu[k] = b @ d.cov_vu + tilt @ S_zu

    # double sums: second moments of h
    for a, dk in enumerate(dims):
        for dl in dims[a:]:
            Wkl = np.vstack([dk.weights, dl.weights])
            split = dk.weights.shape[0]
            P, scale = _gauss_overlap(Wkl @ S_xx @ Wkl.T, np.r_[dk.lam, dl.lam])
            P11, P12, P22 = P[:split, :split], P[:split, split:], P[split:, split:]
            ok, ol = dk.offsets, dl.offsets
            quad = (
                np.einsum("ij,ij->i", ok @ P11, ok)[:, None]
                + 2.0 * (ok @ P12) @ ol.T
                + np.einsum("ij,ij->i", ol @ P22, ol)[None, :]
            )
            Bm = dk.sigma2 * dl.sigma2 * scale * np.exp(-0.5 * quad)
            S_vkZ = dk.cov_vx @ Wkl.T
            S_vlZ = dl.cov_vx @ Wkl.T
            Gk = S_vkZ @ P
            Gl = S_vlZ @ P
            cond_k = (dk.mean_v + np.einsum("ij,ij->i", Gk[:, :split], ok))[:, None] + Gk[:, split:] @ ol.T
            cond_l = (dl.mean_v + np.einsum("ij,ij->i", Gl[:, split:], ol))[None, :] + ok @ Gl[:, :split].T
            cond_cov = dk.cov_vu[:, dl.rows] @ dl.precision - Gk @ S_vlZ.T
            second = np.sum(Bm * (cond_cov + cond_k * cond_l))
            if dk.k == dl.k:
                second += dk.sigma2 - np.sum(dk.precision * Bm)
            cov_hh[dk.k, dl.k] = cov_hh[dl.k, dk.k] = second - mean[dk.k] * mean[dl.k]
    return LatentMoments(mean, cov_hh, cov_hx, cov_hu)


def predict_adf(
    belief: JointBelief,
    kernel: HeteroKernel,
    model: ModelSpec,
    c=None,
    cfg: UkfConfig = UkfConfig(),
    state_step: str = "ukf",
    stats=None,
) -> JointBelief:
    """Prediction with exact latent moments followed by a state step over ``(h, x_t)``."""
    if state_step not in ("ukf", "ekf"):
        raise ValueError(f"unknown state step {state_step!r}")
    n_u, d_x, d_f = belief.n_u, belief.d_x, kernel.d_f
    lm = adf_latent_moments(belief, kernel, c)
    L = belief.factor
    A, B = L[:n_u, :n_u], L[n_u:, :n_u]
    m_x = belief.mean_x
    S_xx = belief.state_covariance()

    mean_w = np.r_[lm.mean, m_x]
    S_ww = np.block([[lm.cov_hh, lm.cov_hx], [lm.cov_hx.T, S_xx]])
    # A^{-1} S_{u w}: inducing-whitened covariance with w
    E = np.hstack([linalg.tri_solve(A, lm.cov_hu.T), B.T])

    # factor of cov(w | u) in (x, h) order, read off the joint factor of (u, x, h)
    sigma_before = np.vstack([lm.cov_hu.T, lm.cov_hx.T])
    a_bar = linalg.tri_solve(L, sigma_before).T
    resid = lm.cov_hh - a_bar @ a_bar.T
    cond = np.zeros((d_x + d_f, d_x + d_f))
    cond[:d_x, :d_x] = L[n_u:, n_u:]
    cond[d_x:, :d_x] = a_bar[:, n_u:]
    cond[d_x:, d_x:] = psd_root(resid) if d_f else np.zeros((0, 0))

    if state_step == "ekf":
        m_h = lm.mean
        jac_w = np.hstack([model.jac_F_f(m_x, c, m_h), model.jac_F_x(m_x, c, m_h)])
        gain = jac_w.T
        mean_next = model.F(m_x, c, m_h)
        extra_rows: list[np.ndarray] = []
    else:
        weights = cfg.weights(d_f + d_x)
        try:
            L_w = linalg.cholesky(S_ww)
        except NotPositiveDefinite:
            count_fallback(stats, "predict_adf")
            L_w = psd_root(S_ww)
        pts = sigma_points(mean_w, L_w, weights.eta)
        summ = summarize(model.F_batch(pts[:, d_f:], c, pts[:, :d_f]), weights)
        cross_wx = weights.eta * weights.w * (L_w @ summ.diff)
        gain = cho_solve((L_w, True), cross_wx, check_finite=False)
        mean_next = summ.mean
        extra_rows = summ.cov_rows(exclude_diff=d_f + d_x)
        if weights.centre_coef < 0:
            count_fallback(stats, "predict_adf")
            return _dense(belief, lm, E, gain, summ, model, cfg)

    B_new = (E @ gain).T
    gain_xh = np.vstack([gain[d_f:], gain[:d_f]])
    rows = [cond.T @ gain_xh] + extra_rows + [model.process_noise_chol.T]
    C_new = linalg.thin_qr(np.vstack(rows)).T
    return new_belief(belief, mean_next, B_new, C_new)


def _dense(belief, lm, E, gain, summ, model, cfg) -> JointBelief:
    n_u = belief.n_u
    A = belief.factor[:n_u, :n_u]
    B_new = (E @ gain).T
    S_uu = A @ A.T
    S_ux = A @ B_new.T
    S_xx = summ.dense_cov() + model.process_noise
    cov = np.block([[S_uu, S_ux], [S_ux.T, S_xx]])
    return dense_belief(np.r_[belief.mean_u, summ.mean], cov, belief.inducing)
