"""Temporal patch extraction, blending, and resampling.

Patches are overlapping windows of consecutive frames at stride one. A
channel layout (displacement columns, rotation blocks) rides along so that
resampling and blending treat motion features correctly:

* displacement columns are per-frame deltas: summed when downsampling,
  redistributed conservatively (partial sums preserved) when upsampling;
* rotation blocks (9 columns each, a row-major 3x3) take the window-center
  frame when downsampling and are re-projected onto rotations after any
  averaging or interpolation;
* everything else is window-averaged / linearly interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import backend

_DOMAIN_TAGS = {"motion", "sketch2d", "waveform1d", "labels", "audio"}


@dataclass(frozen=True)
class FeatureSequence:
    """Time-indexed real feature vectors for any control or motion domain."""

    frames: np.ndarray  # (T, d)
    fps: float
    domain_tag: str
    displacement: slice | None = None
    rotation_blocks: tuple[slice, ...] = ()

    def __post_init__(self):
        if self.frames.ndim != 2:
            raise ValueError(f"frames must be 2-D, got shape {self.frames.shape}")
        if not np.isfinite(self.frames).all():
            raise ValueError("feature frames must be finite (no NaN/Inf)")
        if self.domain_tag not in _DOMAIN_TAGS:
            raise ValueError(f"unknown domain_tag {self.domain_tag!r}")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def width(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class PatchSet:
    """Overlapping stride-1 windows; patch i is frames [i, i+p) flattened."""

    patches: np.ndarray  # (L, p*d)
    patch_size: int
    width: int  # frame feature width d
    source_length: int
    fps: float = 30.0
    domain_tag: str = "motion"
    displacement: slice | None = None
    rotation_blocks: tuple[slice, ...] = ()

    stride = 1

    @property
    def n_patches(self) -> int:
        return self.patches.shape[0]


def extract_patches(seq: FeatureSequence, patch_size: int) -> PatchSet:
    """Split a sequence into L = T - p + 1 overlapping patches."""
    p = int(patch_size)
    T, d = seq.frames.shape
    if p < 1:
        raise ValueError("patch size must be >= 1")
    if T < p:
        raise ValueError(
            f"sequence of {T} frames is shorter than patch size {p}; "
            "shrink the patch size at coarse stages"
        )
    windows = np.lib.stride_tricks.sliding_window_view(seq.frames, (p, d))
    patches = windows.reshape(T - p + 1, p * d).copy()
    return PatchSet(patches=patches, patch_size=p, width=d, source_length=T,
                    fps=seq.fps, domain_tag=seq.domain_tag,
                    displacement=seq.displacement, rotation_blocks=seq.rotation_blocks)


def _project_rotation_columns(frames: np.ndarray, blocks: tuple[slice, ...]) -> None:
    if not blocks:
        return
    T = frames.shape[0]
    stacked = np.empty((T * len(blocks), 3, 3))
    for i, blk in enumerate(blocks):
        stacked[i * T:(i + 1) * T] = frames[:, blk].reshape(T, 3, 3)
    projected = backend.polar_project_batch(stacked)
    for i, blk in enumerate(blocks):
        frames[:, blk] = projected[i * T:(i + 1) * T].reshape(T, 9)


def blend_patches(patches: np.ndarray, patch_size: int, like: FeatureSequence | PatchSet) -> FeatureSequence:
    """Average overlapping patches back into a sequence of L + p - 1 frames.

    Every output frame is the unweighted mean of all patch slots covering it.
    Rotation blocks are re-projected onto rotations afterwards. ``like``
    supplies the channel layout and fps.
    """
    patches = np.asarray(patches, dtype=np.float64)
    p = int(patch_size)
    d = like.width
    if patches.ndim != 2 or patches.shape[1] != p * d:
        raise ValueError(f"patches must be (L, {p * d}), got {patches.shape}")
    L = patches.shape[0]
    if L < 1:
        raise ValueError("need at least one patch")
    T = L + p - 1
    acc = np.zeros((T, d))
    count = np.zeros(T)
    for s in range(p):
        acc[s:s + L] += patches[:, s * d:(s + 1) * d]
        count[s:s + L] += 1.0
    frames = acc / count[:, None]
    _project_rotation_columns(frames, like.rotation_blocks)
    return FeatureSequence(frames=frames, fps=like.fps, domain_tag=like.domain_tag,
                           displacement=like.displacement,
                           rotation_blocks=like.rotation_blocks)


def _window_bounds(T: int, T_out: int) -> np.ndarray:
    return np.round(np.arange(T_out + 1) * (T / T_out)).astype(int)


def downsample(seq: FeatureSequence, factor: float) -> FeatureSequence:
    """Shrink a sequence by a real factor >= 1 using partition windows.

    Displacement columns are summed per window (total displacement is
    preserved), rotation blocks take the window-center frame, remaining
    channels are window-averaged.
    """
    if factor < 1:
        raise ValueError("downsample factor must be >= 1")
    T = seq.n_frames
    T_out = int(round(T / factor))
    if factor == 1 or T_out == T:
        return seq
    if T_out < 2:
        raise ValueError(f"downsampling by {factor} leaves {T_out} frames (< 2)")
    bounds = _window_bounds(T, T_out)
    frames = np.empty((T_out, seq.width))
    csum = np.concatenate([np.zeros((1, seq.width)), np.cumsum(seq.frames, axis=0)])
    sums = csum[bounds[1:]] - csum[bounds[:-1]]
    lengths = (bounds[1:] - bounds[:-1]).astype(np.float64)
    frames[:] = sums / lengths[:, None]
    if seq.displacement is not None:
        frames[:, seq.displacement] = sums[:, seq.displacement]
    centers = (bounds[:-1] + bounds[1:] - 1) // 2
    for blk in seq.rotation_blocks:
        frames[:, blk] = seq.frames[centers][:, blk]
    return replace(seq, frames=frames, fps=seq.fps * T_out / T)


def _lerp_rows(data: np.ndarray, positions: np.ndarray, extrapolate: bool) -> np.ndarray:
    T = data.shape[0]
    if T == 1:
        return np.repeat(data, len(positions), axis=0)
    idx = np.floor(positions).astype(int)
    idx = np.clip(idx, 0, T - 2)
    frac = positions - idx
    if not extrapolate:
        frac = np.clip(frac, 0.0, 1.0)
    return data[idx] * (1.0 - frac)[:, None] + data[idx + 1] * frac[:, None]


def upsample(seq: FeatureSequence, target_length: int) -> FeatureSequence:
    """Stretch a sequence to ``target_length`` frames (>= current length).

    Generic channels are linearly interpolated on a window-center-aligned
    grid (with linear extrapolation at the ends, so window-averaging back
    down restores linear ramps). Displacement columns are redistributed so
    partial sums match. Rotation blocks are interpolated entrywise without
    extrapolation and re-projected.
    """
    T = seq.n_frames
    T_out = int(target_length)
    if T_out < T:
        raise ValueError(f"target length {T_out} is below current length {T}")
    if T_out == T:
        return seq
    f = T_out / T
    positions = (np.arange(T_out) - (f - 1.0) / 2.0) / f
    frames = _lerp_rows(seq.frames, positions, extrapolate=True)

    if seq.displacement is not None:
        cols = seq.displacement
        csum = np.cumsum(seq.frames[:, cols], axis=0)  # inclusive prefix
        s = (T - 1) / (T_out - 1)
        grid = np.arange(T_out) * s
        interp = _lerp_rows(csum, grid, extrapolate=False)
        newV = np.empty((T_out, csum.shape[1]))
        newV[0] = seq.frames[0, cols]
        newV[1:] = interp[1:] - interp[:-1]
        frames[:, cols] = newV

    for blk in seq.rotation_blocks:
        frames[:, blk] = _lerp_rows(seq.frames[:, blk], positions, extrapolate=False)
    _project_rotation_columns(frames, seq.rotation_blocks)
    return replace(seq, frames=frames, fps=seq.fps * T_out / T)
