"""Square-root linear algebra on lower-triangular Cholesky factors.

All public functions take and return plain ``numpy`` arrays and never modify
their arguments.  The rank-one kernels come from a compiled extension when it
is importable and from a pure-Python module otherwise; set the environment
variable ``GPSSM_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import DowndateBreaksPositivity, NotPositiveDefinite
from . import _rank1_py

__all__ = [
    "BACKEND",
    "PIVOT_FLOOR",
    "JITTER",
    "DOWNDATE_FLOOR",
    "available_backends",
    "use_backend",
    "cholesky",
    "chol_update",
    "chol_downdate",
    "chol_insert_block",
    "chol_delete_block",
    "thin_qr",
    "tri_solve",
]

PIVOT_FLOOR = 1e-12
JITTER = 1e-8
DOWNDATE_FLOOR = 1e-14


def _load_compiled() -> ModuleType | None:
    if os.environ.get("GPSSM_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        from . import _rank1
    except ImportError:
        return None
    return _rank1


_BACKENDS: dict[str, ModuleType] = {"python": _rank1_py}
_compiled = _load_compiled()
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_kernels: ModuleType = _compiled if _compiled is not None else _rank1_py
BACKEND: str = "compiled" if _compiled is not None else "python"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def use_backend(name: str) -> None:
    """Switch the rank-one kernels between ``"compiled"`` and ``"python"``."""
    global _kernels, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    _kernels = _BACKENDS[name]
    BACKEND = name


def tri_solve(L: np.ndarray, B: np.ndarray, trans: bool = False) -> np.ndarray:
    """Solve ``L X = B`` (or ``L.T X = B`` when ``trans``) for lower-triangular L."""
    if L.shape[0] == 0:
        return np.zeros_like(B, dtype=float)
    return solve_triangular(L, B, lower=True, trans=1 if trans else 0, check_finite=False)


def _try_cholesky(S: np.ndarray, floor: float) -> np.ndarray | None:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None
    d = np.diagonal(L)
    if not np.all(np.isfinite(L)) or np.min(d * d) <= floor:
        return None
    return L


def cholesky(S: np.ndarray, jitter: bool = True) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    A pivot whose square falls below ``PIVOT_FLOOR`` times the largest diagonal
    entry triggers one retry with ``JITTER`` times that entry added to the
    diagonal.  If the retry also fails, :class:`NotPositiveDefinite` is raised.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if S.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    if n == 0:
        return np.zeros((0, 0))
    scale = float(np.max(np.diagonal(S)))
    if not np.isfinite(scale) or scale <= 0.0:
        raise NotPositiveDefinite("matrix has no positive diagonal entry")
    floor = PIVOT_FLOOR * scale
    L = _try_cholesky(S, floor)
    if L is None and jitter:
        L = _try_cholesky(S + JITTER * scale * np.eye(n), floor)
    if L is None:
        raise NotPositiveDefinite("pivot below floor after jitter retry")
    return L


def _as_columns(V: np.ndarray, n: int) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] != n:
        raise ValueError(f"update vectors have {V.shape[0]} rows, factor has {n}")
    return V


def chol_update(L: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Factor of ``L L^T + V V^T``; ``V`` is a vector or a matrix of columns."""
    R = np.array(L, dtype=float, order="C")
    V = _as_columns(V, R.shape[0])
    for j in range(V.shape[1]):
        _kernels.update_inplace(R, np.array(V[:, j], dtype=float))
    return R


def chol_downdate(L: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Factor of ``L L^T - V V^T`` via hyperbolic rotations, column by column."""
    R = np.array(L, dtype=float, order="C")
    V = _as_columns(V, R.shape[0])
    for j in range(V.shape[1]):
        bad = _kernels.downdate_inplace(R, np.array(V[:, j], dtype=float), DOWNDATE_FLOOR)
        if bad >= 0:
            raise DowndateBreaksPositivity(f"pivot {bad} lost positivity in downdate column {j}")
    return R


def chol_insert_block(
    L: np.ndarray,
    at: int,
    sigma_before: np.ndarray,
    sigma: np.ndarray,
    sigma_after: np.ndarray,
) -> np.ndarray:
    """Insert a block of new variables into a factored covariance.

    Parameters
    ----------
    L : (n, n) array
        Factor of the current covariance.
    at : int
        Row index at which the new block starts in the enlarged matrix.
    sigma_before : (at, b) array
        Cross-covariance between the rows above ``at`` and the new block.
    sigma : (b, b) array
        Covariance of the new block.
    sigma_after : (n - at, b) array
        Cross-covariance between the rows from ``at`` on and the new block.

    Returns
    -------
    (n + b, n + b) array
        Factor of the enlarged covariance.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    b = sigma.shape[0]
    if not 0 <= at <= n:
        raise IndexError(f"insertion row {at} outside 0..{n}")
    s_before = np.asarray(sigma_before, dtype=float).reshape(at, b)
    s_after = np.asarray(sigma_after, dtype=float).reshape(n - at, b)

    A = L[:at, :at]
    B = L[at:, :at]
    C = L[at:, at:]
    a_bar = tri_solve(A, s_before).T
    b_bar = cholesky(sigma - a_bar @ a_bar.T)
    c_bar = solve_triangular(b_bar, (s_after - B @ a_bar.T).T, lower=True, check_finite=False).T
    C_bar = chol_downdate(C, c_bar) if n > at else C

    out = np.zeros((n + b, n + b))
    out[:at, :at] = A
    out[at : at + b, :at] = a_bar
    out[at : at + b, at : at + b] = b_bar
    out[at + b :, :at] = B
    out[at + b :, at : at + b] = c_bar
    out[at + b :, at + b :] = C_bar
    return out


def _delete_row(L: np.ndarray, d: int) -> np.ndarray:
    n = L.shape[0]
    keep = np.r_[0:d, d + 1 : n]
    out = L[np.ix_(keep, keep)].copy()
    if d + 1 < n:
        out[d:, d:] = chol_update(L[d + 1 :, d + 1 :], L[d + 1 :, d])
    return out


def chol_delete_block(L: np.ndarray, rows) -> np.ndarray:
    """Factor of the covariance with the given rows and columns removed.

    Rows may be scattered; they are removed one at a time from the back so
    that every step is a single-row deletion.
    """
    out = np.asarray(L, dtype=float)
    n = out.shape[0]
    idx = sorted({int(r) for r in np.atleast_1d(rows)}, reverse=True)
    if idx and (idx[0] >= n or idx[-1] < 0):
        raise IndexError(f"rows {idx} outside 0..{n - 1}")
    for d in idx:
        out = _delete_row(out, d)
    return out


def thin_qr(M: np.ndarray) -> np.ndarray:
    """Upper-triangular ``R`` with ``R^T R = M^T M`` and a nonnegative diagonal."""
    M = np.asarray(M, dtype=float)
    m, n = M.shape
    if m < n:
        M = np.vstack([M, np.zeros((n - m, n))])
    R = np.linalg.qr(M, mode="r")[:n, :n]
    signs = np.where(np.diagonal(R) < 0.0, -1.0, 1.0)
    return R * signs[:, None]
