"""Coarse-to-fine alignment of a motion clip to a control sequence.

The aligned motion X' starts as a pure metric-alignment solve at the
coarsest temporal resolution and is refined across stages: each stage
downsamples the inputs, then alternates {extract patches of X'; solve the
fused transport problem warm-started; rebuild X' by blending the
transport-weighted original patches}. Soft keyframes append example
patch pairs to both domains with their own mass, constrained (via the
solver mask) to couple only with each other; hard keyframes pin transport
rows and overwrite output frames after every blend; the loop constraint
cross-blends the two ends after every blend so the first and last frames
coincide.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import backend
from .exceptions import PipelineError
from .metrics import normalization_scale, pairwise_l2
from .motion import MotionSequence, features_of, motion_from_features
from .patching import FeatureSequence, PatchSet, blend_patches, downsample, extract_patches, upsample
from .solver import (SolverParams, TransportPlan, feasible_product_plan,
                     solve_fsugw, uniform_masses)

_MAX_NORM_DOMAINS = {"sketch2d", "waveform1d", "labels"}


@dataclass(frozen=True)
class AlignmentConfig:
    """All solver and pipeline parameters.

    Defaults follow the values that work well across control domains:
    alpha = 0.8 and lambda = 0.05 favor the control structure while keeping
    patchwise fidelity, epsilon = 1 is a good temperature for normalized
    distances, 6 stages starting 4x shorter than the final length, 20
    iterations per stage, 11-frame patches.
    """

    alpha: float = 0.8
    lam: float = 0.05
    epsilon: float = 1.0
    stages: int = 6
    iters_per_stage: int = 20
    patch_size: int = 11
    coarse_factor: float = 4.0
    norm_mode_x: str = "mean"
    norm_mode_y: str = "auto"  # resolved from the control's domain tag
    channel_weights: np.ndarray | None = None
    loop: bool = False
    mirror_steps: int = 100
    sinkhorn_steps: int = 200
    tol_objective: float = 1e-5
    tol_marginal: float = 1e-8
    tie_noise: float = 0.0  # optional symmetry-breaking jitter on d_Y
    seed: int | None = None

    def __post_init__(self):
        if self.stages < 1 or self.iters_per_stage < 1:
            raise ValueError("stages and iters_per_stage must be >= 1")
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if self.coarse_factor < 1:
            raise ValueError("coarse_factor must be >= 1")

    def resolve_norm_mode_y(self, domain_tag: str) -> str:
        if self.norm_mode_y != "auto":
            return self.norm_mode_y
        return "max" if domain_tag in _MAX_NORM_DOMAINS else "mean"


@dataclass(frozen=True)
class SoftKeyframe:
    """Example patch pair linking a control-domain patch to a motion patch.

    Patches are given at full resolution in the same feature spaces as the
    control sequence and the featurized original motion; they need not be
    part of either sequence.
    """

    control_patch: np.ndarray  # (p, d_control)
    motion_patch: np.ndarray  # (p, d_motion)
    weight: float = 1.0


@dataclass(frozen=True)
class HardKeyframe:
    """Equal-length frame ranges pinned between control and original timelines."""

    control_range: tuple[int, int]  # [start, end) on the control timeline
    motion_range: tuple[int, int]  # [start, end) on the original motion

    def __post_init__(self):
        cs, ce = self.control_range
        ms, me = self.motion_range
        if ce - cs != me - ms:
            raise ValueError("hard keyframe ranges must have equal length")
        if ce <= cs:
            raise ValueError("hard keyframe ranges must be non-empty")


@dataclass(frozen=True)
class AugmentedProblem:
    """Patch matrices, masses and mask after soft-keyframe augmentation."""

    patches_y: np.ndarray
    patches_x: np.ndarray
    example_x: np.ndarray  # rows appended to the aligned-motion patches too
    a: np.ndarray
    b: np.ndarray
    mask: np.ndarray

    @property
    def n_examples(self) -> int:
        return self.example_x.shape[0]


def stage_lengths(final_length: int, stages: int, coarse_factor: float) -> list[int]:
    """Geometric schedule from final/coarse_factor up to the final length."""
    if stages == 1:
        return [final_length]
    out = []
    for k in range(stages):
        e = (stages - 1 - k) / (stages - 1)
        out.append(max(2, int(round(final_length * coarse_factor ** (-e)))))
    return out


def augment_soft_keyframes(patches_y: PatchSet | np.ndarray,
                           patches_x: PatchSet | np.ndarray,
                           a: np.ndarray, b: np.ndarray,
                           soft_kfs: Sequence[SoftKeyframe]) -> AugmentedProblem:
    """Append example patch pairs to both domains with their own mass.

    The returned mask frees the original block, zeroes transport between
    example rows/columns and everything except their own partner, and pairs
    example i with example i.
    """
    py = patches_y.patches if isinstance(patches_y, PatchSet) else np.asarray(patches_y)
    px = patches_x.patches if isinstance(patches_x, PatchSet) else np.asarray(patches_x)
    L_y, L_x = py.shape[0], px.shape[0]
    L_e = len(soft_kfs)
    if L_e == 0:
        return AugmentedProblem(patches_y=py, patches_x=px,
                                example_x=np.zeros((0, px.shape[1])),
                                a=a, b=b, mask=np.ones((L_y, L_x)))
    ex_y, ex_x, w = [], [], []
    for kf in soft_kfs:
        if not kf.weight > 0:
            raise ValueError("soft keyframe weight must be > 0")
        ex_y.append(np.asarray(kf.control_patch, dtype=np.float64).ravel())
        ex_x.append(np.asarray(kf.motion_patch, dtype=np.float64).ravel())
        w.append(kf.weight)
    ex_y, ex_x = np.array(ex_y), np.array(ex_x)
    if ex_y.shape[1] != py.shape[1]:
        raise ValueError(f"control example width {ex_y.shape[1]} != patch width {py.shape[1]}")
    if ex_x.shape[1] != px.shape[1]:
        raise ValueError(f"motion example width {ex_x.shape[1]} != patch width {px.shape[1]}")
    masses = np.asarray(w) / L_e
    mask = np.ones((L_y + L_e, L_x + L_e))
    mask[L_y:, :L_x] = 0.0
    mask[:L_y, L_x:] = 0.0
    mask[L_y:, L_x:] = np.eye(L_e)
    return AugmentedProblem(
        patches_y=np.vstack([py, ex_y]),
        patches_x=np.vstack([px, ex_x]),
        example_x=ex_x,
        a=np.concatenate([a, masses]),
        b=np.concatenate([b, masses]),
        mask=mask,
    )


def apply_hard_keyframes(T: np.ndarray, xprime: FeatureSequence,
                         hard_kfs: Sequence[HardKeyframe], stage_ratio: float,
                         patch_size: int, x_stage: FeatureSequence,
                         a: np.ndarray) -> tuple[np.ndarray, FeatureSequence]:
    """Pin transport rows to their partner patches and overwrite pinned frames."""
    if not hard_kfs:
        return T, xprime
    T = T.copy()
    frames = xprime.frames.copy()
    L_x = x_stage.n_frames - patch_size + 1
    for pin_row, pin_col in _stage_pins(hard_kfs, stage_ratio, patch_size,
                                        xprime.n_frames, x_stage.n_frames):
        if pin_col < 0 or pin_col >= L_x or pin_row >= T.shape[0]:
            continue
        T[pin_row, :] = 0.0
        T[pin_row, pin_col] = a[pin_row]
    for ys, xs, n in _stage_frame_ranges(hard_kfs, stage_ratio,
                                         xprime.n_frames, x_stage.n_frames):
        frames[ys:ys + n] = x_stage.frames[xs:xs + n]
    return T, replace(xprime, frames=frames)


def _stage_frame_ranges(hard_kfs, ratio, len_y, len_x):
    for kf in hard_kfs:
        cs, ce = kf.control_range
        ms, _ = kf.motion_range
        ys = int(round(cs / ratio))
        ye = int(round(ce / ratio))
        xs = int(round(ms / ratio))
        n = min(ye - ys, len_y - ys, len_x - xs)
        if n > 0 and ys >= 0 and xs >= 0:
            yield ys, xs, n


def _stage_pins(hard_kfs, ratio, patch_size, len_y, len_x):
    for ys, xs, n in _stage_frame_ranges(hard_kfs, ratio, len_y, len_x):
        for i in range(ys, ys + n - patch_size + 1):
            yield i, xs + (i - ys)


def apply_loop(xprime: FeatureSequence, patch_size: int) -> FeatureSequence:
    """Cross-blend the two ends with a linear ramp so they coincide.

    The first and last frames both move to their midpoint; the correction
    fades linearly to zero over patch_size - 1 frames on each side. Rotation
    blocks are re-projected afterwards. A sequence whose first and last
    frames already match passes through unchanged.
    """
    T = xprime.n_frames
    p = int(patch_size)
    if T <= 2 * p:
        raise ValueError(f"sequence of {T} frames is too short to loop-blend (need > {2 * p})")
    q = max(p - 1, 1)
    frames = xprime.frames.copy()
    d = frames[0] - frames[T - 1]
    for j in range(q):
        w = 1.0 - j / q
        frames[j] -= 0.5 * w * d
        frames[T - 1 - j] += 0.5 * w * d
    if xprime.rotation_blocks:
        edge = np.concatenate([np.arange(q), np.arange(T - q, T)])
        sub = frames[edge]
        for blk in xprime.rotation_blocks:
            mats = sub[:, blk].reshape(-1, 3, 3)
            sub[:, blk] = backend.polar_project_batch(mats).reshape(len(edge), 9)
        frames[edge] = sub
    return replace(xprime, frames=frames)


class _TraceSink:
    def __init__(self, target):
        self.target = target

    def emit(self, record: dict):
        if self.target is None:
            return
        if isinstance(self.target, list):
            self.target.append(record)
        else:
            self.target.write(json.dumps(record) + "\n")


def _resample_patch(patch: np.ndarray, target_rows: int, template: FeatureSequence) -> np.ndarray:
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim != 2:
        raise ValueError("keyframe patches must be 2-D (frames x channels)")
    rows = patch.shape[0]
    if rows == target_rows:
        return patch
    if target_rows == 1:
        return patch[rows // 2:rows // 2 + 1]
    mini = FeatureSequence(frames=patch, fps=template.fps, domain_tag=template.domain_tag,
                           displacement=template.displacement,
                           rotation_blocks=template.rotation_blocks)
    return downsample(mini, rows / target_rows).frames


def mamm_align(original: MotionSequence, control: FeatureSequence,
               config: AlignmentConfig | None = None,
               soft_keyframes: Sequence[SoftKeyframe] = (),
               hard_keyframes: Sequence[HardKeyframe] = (),
               trace=None,
               progress: Callable[[int, int, float], None] | None = None) -> MotionSequence:
    """Align ``original`` to ``control``; the result has the control's length.

    ``trace`` may be a list or a file-like object; it receives one record
    per solver invocation with the objective decomposition. ``progress`` is
    called as ``progress(stage, iteration, objective)``.
    """
    config = config or AlignmentConfig()
    fx = features_of(original)
    final_len = control.n_frames
    p = config.patch_size
    if final_len < p:
        raise PipelineError(
            f"control has {final_len} frames, shorter than patch size {p}")
    _validate_keyframes(soft_keyframes, hard_keyframes, p, control, fx)
    norm_y = config.resolve_norm_mode_y(control.domain_tag)
    sink = _TraceSink(trace)
    rng = np.random.default_rng(config.seed)

    w_frame = None
    if config.channel_weights is not None:
        w_frame = np.asarray(config.channel_weights, dtype=np.float64)
        if w_frame.shape != (fx.width,):
            raise PipelineError(
                f"channel_weights must have {fx.width} entries, got {w_frame.shape}")

    xprime: FeatureSequence | None = None
    for k, length in enumerate(stage_lengths(final_len, config.stages, config.coarse_factor)):
        ratio = final_len / length
        yk = downsample(control, ratio)
        xk = downsample(fx, ratio)
        p_k = max(1, min(p, yk.n_frames - 1, xk.n_frames - 1))
        py = extract_patches(yk, p_k)
        px = extract_patches(xk, p_k)
        a0 = uniform_masses(py.n_patches)
        b0 = uniform_masses(px.n_patches)
        stage_kfs = [
            SoftKeyframe(control_patch=_resample_patch(kf.control_patch, p_k, control),
                         motion_patch=_resample_patch(kf.motion_patch, p_k, fx),
                         weight=kf.weight)
            for kf in soft_keyframes
        ]
        aug = augment_soft_keyframes(py, px, a0, b0, stage_kfs)
        L_y = py.n_patches

        full_w = np.tile(w_frame, p_k) if w_frame is not None else None
        D_X_raw = pairwise_l2(aug.patches_x, aug.patches_x, full_w).values
        scale_x = normalization_scale(D_X_raw, config.norm_mode_x)
        D_X = D_X_raw / scale_x
        D_Y_raw = pairwise_l2(aug.patches_y, aug.patches_y).values
        D_Y = D_Y_raw / normalization_scale(D_Y_raw, norm_y)
        if config.tie_noise > 0:
            noise = rng.random(D_Y.shape)
            noise = 0.5 * (noise + noise.T)
            np.fill_diagonal(noise, 0.0)
            D_Y = D_Y + config.tie_noise * noise

        mask = aug.mask
        pins = list(_stage_pins(hard_keyframes, ratio, p_k, yk.n_frames, xk.n_frames))
        if pins:
            mask = mask.copy()
            L_x = px.n_patches
            for row, col in pins:
                if 0 <= row < L_y and 0 <= col < L_x:
                    mask[row, :] = 0.0
                    mask[row, col] = 1.0
        use_mask = mask if (aug.n_examples or pins) else None
        params = SolverParams(alpha=config.alpha, lam=config.lam, epsilon=config.epsilon,
                              mirror_steps=config.mirror_steps,
                              sinkhorn_steps=config.sinkhorn_steps,
                              tol_objective=config.tol_objective,
                              tol_marginal=config.tol_marginal, mask=use_mask)

        def _enforce(seq: FeatureSequence) -> FeatureSequence:
            if config.loop and seq.n_frames > 2 * p_k:
                # coarse stages can be too short to blend; the constraint
                # binds where it matters, at the finer stages
                seq = apply_loop(seq, p_k)
            for ys, xs, n in _stage_frame_ranges(hard_keyframes, ratio,
                                                 seq.n_frames, xk.n_frames):
                frames = seq.frames.copy()
                frames[ys:ys + n] = xk.frames[xs:xs + n]
                seq = replace(seq, frames=frames)
            return seq

        def _blend(T: np.ndarray) -> FeatureSequence:
            transported = (T[:L_y] @ aug.patches_x) * L_y
            return _enforce(blend_patches(transported, p_k, like=fx))

        if k == 0:
            init_trace: list = []
            T0 = feasible_product_plan(aug.a, aug.b, use_mask)
            plan = solve_fsugw(D_Y, D_X, None, replace(params, alpha=1.0),
                               TransportPlan(T=T0, a=aug.a, b=aug.b), trace=init_trace)
            sink.emit({"stage": k, "iteration": -1, **init_trace[-1]})
            xprime = _blend(plan.T)
        else:
            xprime = _enforce(upsample(xprime, length))

        plan = None
        for m in range(config.iters_per_stage):
            pxp = extract_patches(xprime, p_k)
            xp_patches = pxp.patches
            if aug.n_examples:
                xp_patches = np.vstack([xp_patches, aug.example_x])
            D_W = pairwise_l2(xp_patches, aug.patches_x, full_w).values / scale_x
            T_start = feasible_product_plan(aug.a, aug.b, use_mask) if m == 0 else plan.T
            itrace: list = []
            plan = solve_fsugw(D_Y, D_X, D_W, params,
                               TransportPlan(T=T_start, a=aug.a, b=aug.b), trace=itrace)
            xprime = _blend(plan.T)
            record = {"stage": k, "iteration": m, **itrace[-1]}
            sink.emit(record)
            if progress is not None:
                progress(k, m, record["objective"])

    out = replace(xprime, fps=control.fps)
    return motion_from_features(out, original.skeleton, anchor=original.anchor)


def _validate_keyframes(soft_kfs, hard_kfs, p, control: FeatureSequence, fx: FeatureSequence):
    for kf in soft_kfs:
        cp = np.asarray(kf.control_patch)
        mp = np.asarray(kf.motion_patch)
        if cp.ndim != 2 or cp.shape[1] != control.width:
            raise PipelineError(
                f"soft keyframe control patch must be (p, {control.width}), got {cp.shape}")
        if mp.ndim != 2 or mp.shape[1] != fx.width:
            raise PipelineError(
                f"soft keyframe motion patch must be (p, {fx.width}), got {mp.shape}")
        if cp.shape[0] != p or mp.shape[0] != p:
            raise PipelineError(
                f"soft keyframe patches must have {p} rows at full resolution")
        if not kf.weight > 0:
            raise PipelineError("soft keyframe weight must be > 0")
    spans = []
    for kf in hard_kfs:
        cs, ce = kf.control_range
        ms, me = kf.motion_range
        if not (0 <= cs < ce <= control.n_frames):
            raise PipelineError(f"hard keyframe control range {kf.control_range} out of bounds")
        if not (0 <= ms < me <= fx.n_frames):
            raise PipelineError(f"hard keyframe motion range {kf.motion_range} out of bounds")
        for s, e in spans:
            if cs < e and s < ce:
                raise PipelineError("hard keyframe control ranges overlap")
        spans.append((cs, ce))
