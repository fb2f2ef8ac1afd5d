"""Measurement update of the joint belief in square-root form."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .. import linalg
from ..belief import JointBelief
from ..errors import DowndateBreaksPositivity, InnovationCovarianceSingular, NotPositiveDefinite
from ..model import ModelSpec
from .common import UkfConfig, count_fallback, sigma_points, summarize


def _measurement_terms(belief: JointBelief, model: ModelSpec, method: str, cfg: UkfConfig):
    """Predicted measurement, whitened cross term ``P`` and a root of the remaining noise.

    The innovation covariance is ``P^T P + R R^T`` and the covariance between
    the joint variables and the measurement is ``factor @ P``.
    """
    n_u = belief.n_u
    L = belief.factor
    if method == "ekf":
        m_x = belief.mean_x
        G = model.jac_g(m_x)
        return model.g(m_x), (G @ L[n_u:]).T, model.measurement_noise_chol
    if method == "ukf":
        weights = cfg.weights(L.shape[0])
        pts = sigma_points(belief.mean, L, weights.eta)
        summ = summarize(model.g_batch(pts[:, n_u:]), weights)
        P = weights.eta * weights.w * summ.diff
        rows = summ.cov_rows(exclude_diff=L.shape[0]) + [model.measurement_noise_chol.T]
        noise_root = linalg.thin_qr(np.vstack(rows)).T
        if weights.centre_coef < 0:
            noise_root = linalg.chol_downdate(noise_root, np.sqrt(-weights.centre_coef) * summ.shift)
        return summ.mean, P, noise_root
    raise ValueError(f"correction supports 'ekf' and 'ukf', not {method!r}")


def correct(
    belief: JointBelief,
    model: ModelSpec,
    y,
    method: str = "ekf",
    cfg: UkfConfig = UkfConfig(),
    stats=None,
) -> JointBelief:
    """Condition the joint belief on the measurement ``y``.

    The gain acts on every variable, so the inducing values are updated
    through their correlation with the state.  The factor is downdated by
    ``gain @ chol(S_yy)``; if that loses positivity, the posterior factor is
    recovered from a QR of the measurement pre-array instead.
    """
    y = np.asarray(y, dtype=float).reshape(model.d_y)
    L = belief.factor
    y_hat, P, noise_root = _measurement_terms(belief, model, method, cfg)
    S_yy = P.T @ P + noise_root @ noise_root.T
    try:
        L_yy = linalg.cholesky(S_yy, jitter=False)
    except NotPositiveDefinite as exc:
        raise InnovationCovarianceSingular("innovation covariance is not positive definite") from exc

    cross = L @ P
    gain = cho_solve((L_yy, True), cross.T, check_finite=False).T
    mean = belief.mean + gain @ (y - y_hat)
    try:
        factor = linalg.chol_downdate(L, solve_triangular(L_yy, cross.T, lower=True, check_finite=False).T)
    except DowndateBreaksPositivity:
        count_fallback(stats, "correct")
        factor = _array_update(L, P, noise_root)
    return JointBelief(mean, factor, belief.inducing)


def _array_update(L: np.ndarray, P: np.ndarray, noise_root: np.ndarray) -> np.ndarray:
    """Posterior factor from the lower-triangularized pre-array ``[[R, P^T], [0, L]]``."""
    d_y, r = noise_root.shape
    n = L.shape[0]
    pre = np.zeros((d_y + n, r + n))
    pre[:d_y, :r] = noise_root
    pre[:d_y, r:] = P.T
    pre[d_y:, r:] = L
    post = linalg.thin_qr(pre.T).T
    return post[d_y:, d_y:]
