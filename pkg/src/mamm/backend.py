"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set ``MAMM_PURE_PYTHON=1`` to force the fallback (used by the benchmark and
the backend-equivalence tests).
"""

import os

import numpy as np

from . import _kernels_py
from .exceptions import RotationProjectionError

_FORCE_PURE = os.environ.get("MAMM_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes"}

if not _FORCE_PURE:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

BACKEND_NAME = _impl.BACKEND_NAME
HAS_COMPILED = BACKEND_NAME == "compiled"

SK_CONVERGED = _kernels_py.SK_CONVERGED
SK_MAXITER = _kernels_py.SK_MAXITER
SK_OVERFLOW = _kernels_py.SK_OVERFLOW

# Rank tolerance for "this blend degenerated" errors.
_SINGULAR_RTOL = 1e-9


def polar_project_batch(mats: np.ndarray) -> np.ndarray:
    """Project a (n, 3, 3) batch onto rotations (nearest in Frobenius norm).

    The Newton kernel handles the well-conditioned positive-determinant bulk;
    stragglers (negative or tiny determinant) go through an SVD with a sign
    flip on the smallest singular value. Raises RotationProjectionError when
    an input is rank-deficient within 1e-9.
    """
    mats = np.asarray(mats, dtype=np.float64)
    squeeze = mats.ndim == 2
    if squeeze:
        mats = mats[None]
    if mats.ndim != 3 or mats.shape[1:] != (3, 3):
        raise ValueError(f"expected (n, 3, 3) batch, got {mats.shape}")
    out, ok = _impl.polar_newton_batch(mats)
    bad = np.flatnonzero(ok == 0)
    if bad.size:
        sub = mats[bad]
        u, s, vt = np.linalg.svd(sub)
        rank_def = s[:, 2] <= _SINGULAR_RTOL * np.maximum(1.0, s[:, 0])
        if rank_def.any():
            idx = int(bad[np.flatnonzero(rank_def)[0]])
            raise RotationProjectionError(
                f"matrix {idx} is rank-deficient (singular values {s[np.flatnonzero(rank_def)[0]]}); "
                "degenerate blend weights upstream?"
            )
        flip = np.linalg.det(u @ vt) < 0
        u[flip, :, 2] *= -1.0
        out[bad] = u @ vt
    return out[0] if squeeze else out


def sinkhorn_scale(K, a, b, fi, tol, max_iter):
    """Run the scaling loop on the selected backend; see ``_kernels_py``."""
    return _impl.sinkhorn_scale(K, a, b, float(fi), float(tol), int(max_iter))


def pure_sinkhorn_scale(K, a, b, fi, tol, max_iter):
    """Always-numpy variant (benchmark / equivalence tests)."""
    return _kernels_py.sinkhorn_scale(K, a, b, float(fi), float(tol), int(max_iter))


def pure_polar_newton_batch(mats):
    """Always-numpy Newton projection (benchmark / equivalence tests)."""
    return _kernels_py.polar_newton_batch(mats)
