"""Skeletal motion as root displacement plus joint rotations.

A clip is stored heading-invariantly so that patch distances compare motion
content rather than world placement:

* ``V[t]`` is the root displacement from frame t-1 to t, expressed in the
  heading frame of frame t-1 (``V[0] = 0``).
* ``R[t, 0]`` is the root delta: previous heading inverse times current root
  orientation. It combines the per-frame heading (yaw) change with the
  root's pitch/roll residual.
* ``R[t, j]`` for j >= 1 is joint j's orientation in the root's space.

The heading is the rotation about the world vertical (y) axis extracted
from the root orientation. Together with an :class:`Anchor` (initial world
position and heading) the absolute trajectory reconstructs exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation as ScipyRotation

from . import backend
from .bvh import BvhData, Skeleton, parse_bvh, write_bvh
from .patching import FeatureSequence

_POSITION_AXIS = {"Xposition": 0, "Yposition": 1, "Zposition": 2}
_ROTATION_AXIS = {"X": 0, "Y": 1, "Z": 2}


def axis_rotation(axis: str, degrees: np.ndarray) -> np.ndarray:
    """Rotation matrices about a principal axis; ``degrees`` may be batched."""
    rad = np.deg2rad(np.asarray(degrees, dtype=np.float64))
    c, s = np.cos(rad), np.sin(rad)
    out = np.zeros(rad.shape + (3, 3))
    i = _ROTATION_AXIS[axis]
    j, k = (i + 1) % 3, (i + 2) % 3
    out[..., i, i] = 1.0
    out[..., j, j] = c
    out[..., k, k] = c
    out[..., j, k] = -s
    out[..., k, j] = s
    return out


def euler_to_matrix(angles_deg: np.ndarray, order: str) -> np.ndarray:
    """Compose axis rotations in channel order (intrinsic, e.g. "ZXY")."""
    angles_deg = np.asarray(angles_deg, dtype=np.float64)
    m = axis_rotation(order[0], angles_deg[..., 0])
    for i, axis in enumerate(order[1:], start=1):
        m = m @ axis_rotation(axis, angles_deg[..., i])
    return m


def matrix_to_euler(mats: np.ndarray, order: str) -> np.ndarray:
    """Inverse of :func:`euler_to_matrix`, in degrees."""
    flat = np.asarray(mats, dtype=np.float64).reshape(-1, 3, 3)
    out = ScipyRotation.from_matrix(flat).as_euler(order, degrees=True)
    return out.reshape(mats.shape[:-2] + (3,))


def heading_angle(Q: np.ndarray) -> np.ndarray:
    """Yaw (rotation about world y) of root orientations ``Q``.

    Uses the local +z axis as the forward direction; when that axis is
    nearly vertical, falls back to the local +x axis.
    """
    Q = np.asarray(Q, dtype=np.float64)
    f = Q[..., :, 2]
    primary = np.arctan2(f[..., 0], f[..., 2])
    g = Q[..., :, 0]
    fallback = np.arctan2(-g[..., 2], g[..., 0])
    degenerate = f[..., 0] ** 2 + f[..., 2] ** 2 < 1e-12
    return np.where(degenerate, fallback, primary)


def yaw_matrix(angle: np.ndarray) -> np.ndarray:
    return axis_rotation("Y", np.rad2deg(angle))


@dataclass(frozen=True)
class Anchor:
    """World placement of a clip: initial root position and heading angle."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    heading: float = 0.0

    @property
    def heading_matrix(self) -> np.ndarray:
        return yaw_matrix(np.float64(self.heading))


def _validate_rotations(R: np.ndarray, tol: float = 1e-6) -> None:
    gram = np.einsum("...ij,...ik->...jk", R, R)
    err = np.abs(gram - np.eye(3)).max()
    if err > tol:
        raise ValueError(f"rotation blocks deviate from orthogonality by {err:.2e}")
    det = np.linalg.det(R.reshape(-1, 3, 3))
    if np.abs(det - 1.0).max() > tol:
        raise ValueError("rotation blocks must have determinant +1")


@dataclass(frozen=True)
class MotionSequence:
    """Heading-relative motion: per-frame root displacement V and rotations R."""

    skeleton: Skeleton
    V: np.ndarray  # (T, 3)
    R: np.ndarray  # (T, J, 3, 3)
    fps: float
    anchor: Anchor = field(default_factory=Anchor)

    def __post_init__(self):
        if self.V.ndim != 2 or self.V.shape[1] != 3:
            raise ValueError(f"V must be (T, 3), got {self.V.shape}")
        if self.V.shape[0] < 1:
            raise ValueError("empty motion: at least one frame required")
        J = self.skeleton.n_joints
        if self.R.shape != (self.V.shape[0], J, 3, 3):
            raise ValueError(f"R must be (T, {J}, 3, 3), got {self.R.shape}")
        _validate_rotations(self.R)

    @property
    def n_frames(self) -> int:
        return self.V.shape[0]

    def pose(self, t: int) -> "Pose":
        return Pose(V=self.V[t], R=self.R[t])


@dataclass(frozen=True)
class Pose:
    """A single frame: one row of V and one row of R."""

    V: np.ndarray  # (3,)
    R: np.ndarray  # (J, 3, 3)

    def __post_init__(self):
        _validate_rotations(self.R)


def to_internal(data: BvhData) -> MotionSequence:
    """Convert parsed BVH channels to the heading-relative representation."""
    sk = data.skeleton
    ch = data.channels
    if not np.isfinite(ch).all():
        raise ValueError("channel data contains NaN/Inf")
    T, J = ch.shape[0], sk.n_joints

    local = np.empty((T, J, 3, 3))
    root_pos = np.tile(sk.joints[0].offset, (T, 1))
    for j, joint in enumerate(sk.joints):
        cols = data.joint_slices[j]
        vals = ch[:, cols]
        angles = np.empty((T, 3))
        ai = 0
        for k, name in enumerate(joint.channels):
            if name in _POSITION_AXIS:
                if j == 0:
                    root_pos[:, _POSITION_AXIS[name]] = vals[:, k]
            else:
                angles[:, ai] = vals[:, k]
                ai += 1
        local[:, j] = euler_to_matrix(angles, joint.rotation_order)

    world = np.empty_like(local)
    world[:, 0] = local[:, 0]
    for j in range(1, J):
        world[:, j] = world[:, sk.joints[j].parent] @ local[:, j]

    Q = world[:, 0]
    head = heading_angle(Q)
    H = yaw_matrix(head)
    Hprev = np.concatenate([H[:1], H[:-1]], axis=0)  # H_{-1} := H_0

    V = np.zeros((T, 3))
    if T > 1:
        delta = root_pos[1:] - root_pos[:-1]
        V[1:] = np.einsum("tji,tj->ti", Hprev[1:], delta)  # H^T @ d

    R = np.empty((T, J, 3, 3))
    R[:, 0] = np.einsum("tji,tjk->tik", Hprev, Q)  # H_{t-1}^T Q_t
    if J > 1:
        R[:, 1:] = np.einsum("tji,tmjk->tmik", Q, world[:, 1:])  # Q^T G_j

    anchor = Anchor(position=root_pos[0].copy(), heading=float(head[0]))
    return MotionSequence(skeleton=sk, V=V, R=R, fps=data.fps, anchor=anchor)


def reconstruct_root(motion: MotionSequence, anchor: Anchor | None = None):
    """Accumulate V and heading deltas into world root positions/orientations."""
    if anchor is None:
        anchor = motion.anchor
    T = motion.n_frames
    P = np.empty((T, 3))
    Q = np.empty((T, 3, 3))
    H = anchor.heading_matrix
    pos = np.asarray(anchor.position, dtype=np.float64)
    for t in range(T):
        if t > 0:
            pos = pos + H @ motion.V[t]
        Q[t] = H @ motion.R[t, 0]
        H = yaw_matrix(heading_angle(Q[t]))
        P[t] = pos
    return P, Q


def from_internal(motion: MotionSequence, anchor: Anchor | None = None) -> str:
    """Serialize a motion back to BVH text, reproducing the world trajectory."""
    if motion.n_frames == 0:
        raise ValueError("empty motion")
    sk = motion.skeleton
    T, J = motion.n_frames, sk.n_joints
    P, Q = reconstruct_root(motion, anchor)

    total = sum(len(j.channels) for j in sk.joints)
    ch = np.zeros((T, total))
    col = 0
    for j, joint in enumerate(sk.joints):
        if j == 0:
            local = Q
        else:
            parent = joint.parent
            parent_R = motion.R[:, parent] if parent != 0 else None
            if parent_R is None:
                local = motion.R[:, j]
            else:
                local = np.einsum("tji,tjk->tik", parent_R, motion.R[:, j])
        angles = matrix_to_euler(local, joint.rotation_order)
        ai = 0
        for name in joint.channels:
            if name in _POSITION_AXIS:
                axis = _POSITION_AXIS[name]
                ch[:, col] = P[:, axis] if j == 0 else joint.offset[axis]
            else:
                ch[:, col] = angles[:, ai]
                ai += 1
            col += 1

    slices = []
    col = 0
    for joint in sk.joints:
        slices.append(slice(col, col + len(joint.channels)))
        col += len(joint.channels)
    data = BvhData(skeleton=sk, channels=ch, frame_time=1.0 / motion.fps,
                   joint_slices=tuple(slices))
    return write_bvh(data)


def load_bvh(text: str) -> MotionSequence:
    """Parse BVH text straight into a MotionSequence."""
    return to_internal(parse_bvh(text))


def project_rotation(M: np.ndarray) -> np.ndarray:
    """Nearest rotation (orthogonal, det +1) to M in Frobenius norm.

    Raises RotationProjectionError for matrices that are rank-deficient
    within 1e-9; those indicate degenerate blend weights upstream.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got {M.shape}")
    return backend.polar_project_batch(M)


def world_joint_positions(motion: MotionSequence, anchor: Anchor | None = None) -> np.ndarray:
    """Per-frame world positions of every joint, (T, J, 3). Used for previews."""
    sk = motion.skeleton
    T, J = motion.n_frames, sk.n_joints
    P, Q = reconstruct_root(motion, anchor)
    world_R = np.empty((T, J, 3, 3))
    world_R[:, 0] = Q
    if J > 1:
        world_R[:, 1:] = np.einsum("tij,tmjk->tmik", Q, motion.R[:, 1:])
    pos = np.empty((T, J, 3))
    pos[:, 0] = P
    for j in range(1, J):
        parent = sk.joints[j].parent
        pos[:, j] = pos[:, parent] + np.einsum("tij,j->ti", world_R[:, parent], sk.joints[j].offset)
    return pos


def features_of(motion: MotionSequence) -> FeatureSequence:
    """Flatten a motion into per-frame feature rows [V | R (row-major)]."""
    T, J = motion.n_frames, motion.skeleton.n_joints
    frames = np.concatenate([motion.V, motion.R.reshape(T, J * 9)], axis=1)
    blocks = tuple(slice(3 + 9 * j, 3 + 9 * (j + 1)) for j in range(J))
    return FeatureSequence(frames=frames, fps=motion.fps, domain_tag="motion",
                           displacement=slice(0, 3), rotation_blocks=blocks)


def motion_from_features(seq: FeatureSequence, skeleton: Skeleton,
                         anchor: Anchor | None = None) -> MotionSequence:
    """Rebuild a MotionSequence from blended motion features."""
    J = skeleton.n_joints
    frames = seq.frames
    if frames.shape[1] != 3 + 9 * J:
        raise ValueError(f"feature width {frames.shape[1]} does not match {J} joints")
    T = frames.shape[0]
    V = frames[:, :3].copy()
    V[0] = 0.0
    R = frames[:, 3:].reshape(T, J, 3, 3).copy()
    return MotionSequence(skeleton=skeleton, V=V, R=R, fps=seq.fps,
                          anchor=anchor or Anchor())
