# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rank-one Cholesky kernels.

Both routines modify ``L`` and ``x`` in place.  ``L`` must be a C-contiguous
lower-triangular float64 matrix with a positive diagonal.
"""

from libc.math cimport sqrt


def update_inplace(double[:, ::1] L, double[::1] x):
    """Overwrite ``L`` with the factor of ``L @ L.T + x @ x.T``."""
    cdef Py_ssize_t n = L.shape[0]
    cdef Py_ssize_t i, k
    cdef double lkk, xk, r, c, s, lik
    for k in range(n):
        xk = x[k]
        if xk == 0.0:
            continue
        lkk = L[k, k]
        r = sqrt(lkk * lkk + xk * xk)
        c = r / lkk
        s = xk / lkk
        L[k, k] = r
        for i in range(k + 1, n):
            lik = (L[i, k] + s * x[i]) / c
            L[i, k] = lik
            x[i] = c * x[i] - s * lik


def downdate_inplace(double[:, ::1] L, double[::1] x, double rel_floor):
    """Overwrite ``L`` with the factor of ``L @ L.T - x @ x.T``.

    Returns -1 on success, otherwise the index of the pivot that failed the
    positivity floor.  ``L`` is left partially modified on failure.
    """
    cdef Py_ssize_t n = L.shape[0]
    cdef Py_ssize_t i, k
    cdef double lkk, xk, r2, r, c, s, lik
    for k in range(n):
        xk = x[k]
        if xk == 0.0:
            continue
        lkk = L[k, k]
        r2 = lkk * lkk - xk * xk
        if r2 < rel_floor * lkk * lkk:
            return k
        r = sqrt(r2)
        c = r / lkk
        s = xk / lkk
        L[k, k] = r
        for i in range(k + 1, n):
            lik = (L[i, k] - s * x[i]) / c
            L[i, k] = lik
            x[i] = c * x[i] - s * lik
    return -1
