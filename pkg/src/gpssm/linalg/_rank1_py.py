"""Pure-Python rank-one Cholesky kernels, used when the compiled module is absent.

The signatures and in-place semantics mirror the compiled ``_rank1`` module.
"""

from __future__ import annotations

import math

import numpy as np


def update_inplace(L: np.ndarray, x: np.ndarray) -> None:
    n = L.shape[0]
    for k in range(n):
        xk = x[k]
        if xk == 0.0:
            continue
        lkk = L[k, k]
        r = math.sqrt(lkk * lkk + xk * xk)
        c = r / lkk
        s = xk / lkk
        L[k, k] = r
        col = L[k + 1 :, k]
        tail = x[k + 1 :]
        col += s * tail
        col /= c
        tail *= c
        tail -= s * col


def downdate_inplace(L: np.ndarray, x: np.ndarray, rel_floor: float) -> int:
    n = L.shape[0]
    for k in range(n):
        xk = x[k]
        if xk == 0.0:
            continue
        lkk = L[k, k]
        r2 = lkk * lkk - xk * xk
        if r2 < rel_floor * lkk * lkk:
            return k
        r = math.sqrt(r2)
        c = r / lkk
        s = xk / lkk
        L[k, k] = r
        col = L[k + 1 :, k]
        tail = x[k + 1 :]
        col -= s * tail
        col /= c
        tail *= c
        tail -= s * col
    return -1
