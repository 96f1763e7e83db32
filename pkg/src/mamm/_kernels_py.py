"""Pure-numpy implementations of the hot kernels.

These mirror the compiled versions in ``_kernels.pyx`` exactly; the backend
module picks whichever is available at import time.
"""

import numpy as np

BACKEND_NAME = "python"

# Sinkhorn status codes shared with the compiled kernel.
SK_CONVERGED = 0
SK_MAXITER = 1
SK_OVERFLOW = 2

_SCALE_MAX = 1e30
_SCALE_MIN = 1e-30


def _det3(m):
    return (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
        - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
    )


def _inv_transpose3(m, det):
    """Transposed inverse of a batch of 3x3 matrices via cofactors."""
    c0 = np.cross(m[:, 1], m[:, 2])
    c1 = np.cross(m[:, 2], m[:, 0])
    c2 = np.cross(m[:, 0], m[:, 1])
    # adj(m)^T rows are the cofactor rows, so inv(m)^T = cof(m) / det.
    cof = np.stack([c0, c1, c2], axis=1)
    return cof / det[:, None, None]


def polar_newton_batch(mats):
    """Nearest-rotation projection of a batch of 3x3 matrices.

    Runs the determinant-scaled Newton iteration X <- (zX + (zX)^-T) / 2.
    Returns ``(out, ok)``; elements with ``ok = 0`` (non-positive or tiny
    determinant, or no convergence) are left for the caller's SVD fallback.
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    n = mats.shape[0]
    out = mats.copy()
    ok = np.ones(n, dtype=np.uint8)

    det = _det3(out)
    norm = np.abs(out).sum(axis=(1, 2)) + 1e-300
    bad = ~(det > 1e-12 * norm**3 / 27.0)
    ok[bad] = 0
    active = ~bad
    if active.any():
        x = out[active]
        for _ in range(60):
            d = _det3(x)
            if not (d > 0).all():
                break
            z = d ** (-1.0 / 3.0)
            y = x * z[:, None, None]
            yinv_t = _inv_transpose3(y, _det3(y))
            xn = 0.5 * (y + yinv_t)
            delta = np.abs(xn - x).max()
            x = xn
            if delta < 1e-14:
                break
        out[active] = x

    # Accept only elements that actually reached a proper rotation.
    gram = np.einsum("nij,nik->njk", out, out)
    err = np.abs(gram - np.eye(3)).max(axis=(1, 2))
    good = (err <= 1e-9) & (_det3(out) > 0)
    ok &= good.astype(np.uint8)
    return out, ok


def sinkhorn_scale(K, a, b, fi, tol, max_iter):
    """Scaling loop for one hard (row) and one softened (column) marginal.

    u <- a / (K v),  v <- (b / (K^T u)) ** fi, until the row-marginal
    violation of diag(u) K diag(v) drops below ``tol``. Returns
    ``(u, v, iters, violation, status)``; ``status = SK_OVERFLOW`` means the
    caller must switch to the log-domain path.
    """
    n, m = K.shape
    u = np.ones(n)
    v = np.ones(m)
    violation = np.inf
    status = SK_MAXITER
    # Columns with no admissible entry stay at v = 1; they carry zero mass
    # regardless (the column marginal is the soft side).
    col_ok = (K > 0).any(axis=0)
    Kv = K @ v
    for it in range(1, max_iter + 1):
        if not (Kv > 0).all():
            return u, v, it, violation, SK_OVERFLOW
        u = a / Kv
        KTu = K.T @ u
        if not (KTu > 0)[col_ok].all():
            return u, v, it, violation, SK_OVERFLOW
        ratio = np.divide(b, KTu, out=np.ones(m), where=col_ok)
        v = ratio**fi if fi != 1.0 else ratio
        Kv = K @ v
        violation = np.abs(u * Kv - a).max()
        hi = max(u.max(), v.max())
        lo = min(u.min(), v.min())
        if not np.isfinite(hi) or hi > _SCALE_MAX or lo < _SCALE_MIN:
            return u, v, it, violation, SK_OVERFLOW
        if violation <= tol:
            status = SK_CONVERGED
            break
    else:
        it = max_iter
    # Final exact row normalization keeps the hard marginal tight.
    if (Kv > 0).all():
        u = a / Kv
    return u, v, it, violation, status
