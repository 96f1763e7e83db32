# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched 3x3 polar projection and Sinkhorn scaling.

Semantics match ``_kernels_py`` exactly; see that module for documentation.
"""

import numpy as np

from libc.math cimport fabs, isfinite, pow
from scipy.linalg.cython_blas cimport dgemv

BACKEND_NAME = "compiled"

cdef enum:
    _SK_CONVERGED = 0
    _SK_MAXITER = 1
    _SK_OVERFLOW = 2

SK_CONVERGED = _SK_CONVERGED
SK_MAXITER = _SK_MAXITER
SK_OVERFLOW = _SK_OVERFLOW

cdef double _SCALE_MAX = 1e30
cdef double _SCALE_MIN = 1e-30


cdef inline double _det3(double* m) noexcept nogil:
    return (m[0] * (m[4] * m[8] - m[5] * m[7])
            - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6]))


cdef inline void _inv_t3(double* m, double det, double* out) noexcept nogil:
    # Transposed inverse = cofactor matrix / det.
    out[0] = (m[4] * m[8] - m[5] * m[7]) / det
    out[1] = (m[5] * m[6] - m[3] * m[8]) / det
    out[2] = (m[3] * m[7] - m[4] * m[6]) / det
    out[3] = (m[2] * m[7] - m[1] * m[8]) / det
    out[4] = (m[0] * m[8] - m[2] * m[6]) / det
    out[5] = (m[1] * m[6] - m[0] * m[7]) / det
    out[6] = (m[1] * m[5] - m[2] * m[4]) / det
    out[7] = (m[2] * m[3] - m[0] * m[5]) / det
    out[8] = (m[0] * m[4] - m[1] * m[3]) / det


cdef int _polar_one(double* m, double* x) noexcept nogil:
    cdef double det, norm, z, delta, diff, err, g
    cdef double y[9]
    cdef double yinv[9]
    cdef double xn[9]
    cdef int i, j, k, it

    norm = 0.0
    for i in range(9):
        x[i] = m[i]
        norm += fabs(m[i])
    det = _det3(x)
    if not (det > 1e-12 * norm * norm * norm / 27.0):
        return 0
    for it in range(60):
        det = _det3(x)
        if not (det > 0.0):
            return 0
        z = pow(det, -1.0 / 3.0)
        for i in range(9):
            y[i] = x[i] * z
        det = _det3(y)
        _inv_t3(y, det, yinv)
        delta = 0.0
        for i in range(9):
            xn[i] = 0.5 * (y[i] + yinv[i])
            diff = fabs(xn[i] - x[i])
            if diff > delta:
                delta = diff
            x[i] = xn[i]
        if delta < 1e-14:
            break
    # Verify we reached a proper rotation.
    err = 0.0
    for j in range(3):
        for k in range(3):
            g = 0.0
            for i in range(3):
                g += x[3 * i + j] * x[3 * i + k]
            if j == k:
                g -= 1.0
            if fabs(g) > err:
                err = fabs(g)
    if err > 1e-9 or not (_det3(x) > 0.0):
        return 0
    return 1


def polar_newton_batch(mats):
    """Batched nearest-rotation projection; returns (out, ok) like the fallback."""
    cdef double[:, :, ::1] m = np.ascontiguousarray(mats, dtype=np.float64)
    cdef Py_ssize_t n = m.shape[0], i
    out_arr = np.empty((n, 3, 3), dtype=np.float64)
    ok_arr = np.empty(n, dtype=np.uint8)
    cdef double[:, :, ::1] out = out_arr
    cdef unsigned char[::1] ok = ok_arr
    with nogil:
        for i in range(n):
            ok[i] = <unsigned char>_polar_one(&m[i, 0, 0], &out[i, 0, 0])
    return out_arr, ok_arr


def sinkhorn_scale(K, a, b, double fi, double tol, int max_iter):
    """Fused scaling loop; see the pure-Python twin for the contract."""
    cdef double[:, ::1] Km = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef int n = Km.shape[0], mm = Km.shape[1]
    u_arr = np.ones(n, dtype=np.float64)
    v_arr = np.ones(mm, dtype=np.float64)
    kv_arr = np.empty(n, dtype=np.float64)
    ktu_arr = np.empty(mm, dtype=np.float64)
    colok_arr = (np.asarray(K) > 0).any(axis=0).astype(np.uint8)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef double[::1] Kv = kv_arr
    cdef double[::1] KTu = ktu_arr
    cdef unsigned char[::1] col_ok = colok_arr
    cdef double violation = np.inf
    cdef int status = _SK_MAXITER
    cdef int it = 0, i, j, overflow = 0
    cdef double one = 1.0, zero = 0.0, hi, lo, val
    cdef int inc = 1

    with nogil:
        # Row-major K of shape (n, mm) is a column-major (mm, n) matrix, so
        # K @ v is a transposed BLAS gemv and K.T @ u a plain one.
        dgemv("T", &mm, &n, &one, &Km[0, 0], &mm, &v[0], &inc, &zero, &Kv[0], &inc)
        for it in range(1, max_iter + 1):
            overflow = 0
            for i in range(n):
                if not (Kv[i] > 0.0):
                    overflow = 1
                    break
                u[i] = av[i] / Kv[i]
            if overflow:
                status = _SK_OVERFLOW
                break
            dgemv("N", &mm, &n, &one, &Km[0, 0], &mm, &u[0], &inc, &zero, &KTu[0], &inc)
            for j in range(mm):
                if not col_ok[j]:
                    v[j] = 1.0
                    continue
                if not (KTu[j] > 0.0):
                    overflow = 1
                    break
                val = bv[j] / KTu[j]
                v[j] = val if fi == 1.0 else pow(val, fi)
            if overflow:
                status = _SK_OVERFLOW
                break
            dgemv("T", &mm, &n, &one, &Km[0, 0], &mm, &v[0], &inc, &zero, &Kv[0], &inc)
            violation = 0.0
            hi = 0.0
            lo = _SCALE_MAX
            for i in range(n):
                val = fabs(u[i] * Kv[i] - av[i])
                if val > violation:
                    violation = val
                if u[i] > hi:
                    hi = u[i]
                if u[i] < lo:
                    lo = u[i]
            for j in range(mm):
                if v[j] > hi:
                    hi = v[j]
                if v[j] < lo:
                    lo = v[j]
            if not isfinite(hi) or hi > _SCALE_MAX or lo < _SCALE_MIN:
                status = _SK_OVERFLOW
                break
            if violation <= tol:
                status = _SK_CONVERGED
                break
        if status != _SK_OVERFLOW:
            overflow = 0
            for i in range(n):
                if not (Kv[i] > 0.0):
                    overflow = 1
                    break
            if not overflow:
                for i in range(n):
                    u[i] = av[i] / Kv[i]
    return u_arr, v_arr, it, violation, status
