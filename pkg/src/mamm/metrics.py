"""Normalized within-domain distance matrices over patch sets.

Distances are plain Euclidean (L2) between flattened patch vectors, with an
optional per-channel weight applied before the norm. Normalizing by the max
or mean entry makes couplings invariant to the absolute feature scale; which
mode fits depends on the control domain (bounded geometric controls keep a
[0, 1] range under max, mean is robust to outlier frames).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .patching import PatchSet

_NORM_MODES = {"max", "mean", "none"}


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray
    normalization: str = "none"

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("distance matrix must be 2-D")
        if self.normalization not in _NORM_MODES:
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def shape(self):
        return self.values.shape


def _as_patch_matrix(x, channel_weights=None) -> np.ndarray:
    if isinstance(x, PatchSet):
        m = x.patches
        if channel_weights is not None:
            w = np.asarray(channel_weights, dtype=np.float64)
            if w.shape == (x.width,):
                w = np.tile(w, x.patch_size)
            if w.shape != (m.shape[1],):
                raise ValueError(
                    f"channel weights must have {x.width} (per-frame) or "
                    f"{m.shape[1]} (per-patch) entries, got {w.shape}"
                )
            m = m * w
        return m
    m = np.asarray(x, dtype=np.float64)
    if channel_weights is not None:
        m = m * np.asarray(channel_weights, dtype=np.float64)
    return m


def pairwise_l2(A, B, channel_weights=None) -> DistanceMatrix:
    """Euclidean distances between all patch pairs of A and B.

    Computed through the Gram-matrix identity so the heavy lifting is a
    single BLAS matmul; entries are clipped at zero before the square root.
    Self-distance matrices (``A is B``) are exactly symmetric with a zero
    diagonal.
    """
    same = A is B
    Am = _as_patch_matrix(A, channel_weights)
    Bm = Am if same else _as_patch_matrix(B, channel_weights)
    if Am.shape[1] != Bm.shape[1]:
        raise ValueError(f"patch widths differ: {Am.shape[1]} vs {Bm.shape[1]}")
    aa = np.einsum("ij,ij->i", Am, Am)
    bb = aa if same else np.einsum("ij,ij->i", Bm, Bm)
    sq = aa[:, None] + bb[None, :] - 2.0 * (Am @ Bm.T)
    np.maximum(sq, 0.0, out=sq)
    # the Gram identity cancels catastrophically for near-identical pairs;
    # recompute those few entries directly
    close = sq < 1e-6 * (aa[:, None] + bb[None, :])
    if close.any():
        ii, kk = np.nonzero(close)
        diff = Am[ii] - Bm[kk]
        sq[ii, kk] = np.einsum("ij,ij->i", diff, diff)
    d = np.sqrt(sq)
    if same:
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
    return DistanceMatrix(values=d, normalization="none")


def normalization_scale(D, mode: str) -> float:
    """Max or mean entry of a distance matrix; 1.0 when all entries are zero."""
    values = D.values if isinstance(D, DistanceMatrix) else np.asarray(D)
    if mode == "max":
        scale = float(values.max()) if values.size else 0.0
    elif mode == "mean":
        scale = float(values.mean()) if values.size else 0.0
    else:
        raise ValueError(f"normalization mode must be 'max' or 'mean', got {mode!r}")
    return scale if scale > 0.0 else 1.0


def normalize(D: DistanceMatrix, mode: str) -> DistanceMatrix:
    """Divide all entries by the max (or mean) entry; all-zero input passes through."""
    values = D.values if isinstance(D, DistanceMatrix) else np.asarray(D)
    if values.size == 0:
        raise ValueError("cannot normalize an empty distance matrix")
    scale = normalization_scale(values, mode)
    return DistanceMatrix(values=values / scale, normalization=mode)
