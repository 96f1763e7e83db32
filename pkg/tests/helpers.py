"""Shared builders and independent oracles for the test suite."""

import numpy as np

from mamm.bvh import Joint, Skeleton
from mamm.motion import MotionSequence, euler_to_matrix


def random_rotations(rng, n):
    """Uniform random rotations via normalized quaternions."""
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
    ], -2)


def make_chain_skeleton(n_joints=4, root_name="Hips"):
    joints = [Joint(root_name, None, np.zeros(3),
                    ("Xposition", "Yposition", "Zposition",
                     "Zrotation", "Xrotation", "Yrotation"))]
    for i in range(1, n_joints):
        joints.append(Joint(f"J{i}", i - 1, np.array([0.0, 1.0, 0.0]),
                            ("Zrotation", "Xrotation", "Yrotation")))
    return Skeleton(joints=tuple(joints))


def make_bvh_text(n_joints=4, n_frames=50, seed=0, frame_time=1 / 30,
                  max_angle=60.0, root_path=None):
    """Synthesize a BVH document with bounded random euler channels."""
    rng = np.random.default_rng(seed)
    lines = ["HIERARCHY", "ROOT Hips", "{", "  OFFSET 0.0 0.0 0.0",
             "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation"]
    for i in range(1, n_joints):
        pad = "  " * i
        lines += [f"{pad}JOINT J{i}", f"{pad}{{", f"{pad}  OFFSET 0.0 1.0 0.0",
                  f"{pad}  CHANNELS 3 Zrotation Xrotation Yrotation"]
    pad = "  " * n_joints
    lines += [f"{pad}End Site", f"{pad}{{", f"{pad}  OFFSET 0.0 1.0 0.0", f"{pad}}}"]
    for i in range(n_joints - 1, -1, -1):
        lines.append("  " * i + "}")
    lines += ["MOTION", f"Frames: {n_frames}", f"Frame Time: {frame_time!r}"]
    for t in range(n_frames):
        if root_path is not None:
            row = list(root_path(t))
        else:
            row = [0.1 * t, 1.0 + 0.05 * np.sin(0.2 * t), 0.03 * t]
        row += list(rng.uniform(-max_angle, max_angle, 3 * n_joints))
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def make_cyclic_motion(T=120, period=24, n_joints=3, fps=30.0, amp=35.0, step=0.05):
    """A periodic swinging chain with root displacement, for alignment tests."""
    sk = make_chain_skeleton(n_joints)
    t = np.arange(T)
    phase = 2 * np.pi * t / period
    V = np.zeros((T, 3))
    V[1:, 0] = step * np.sin(phase[1:])
    R = np.zeros((T, n_joints, 3, 3))
    for j in range(n_joints):
        ang = amp * np.sin(phase + 0.7 * j)
        R[:, j] = euler_to_matrix(np.stack([ang, 0 * ang, 0 * ang], -1), "ZXY")
    return MotionSequence(skeleton=sk, V=V, R=R, fps=fps)


def make_two_regime_motion(T=200, n_joints=3, fps=30.0):
    """First half: small fast swing ("walk"); second half: large slow swing ("jump")."""
    sk = make_chain_skeleton(n_joints)
    t = np.arange(T)
    half = T // 2
    V = np.zeros((T, 3))
    R = np.zeros((T, n_joints, 3, 3))
    for j in range(n_joints):
        ang = np.where(t < half,
                       15.0 * np.sin(2 * np.pi * t / 12 + j),
                       70.0 * np.sin(2 * np.pi * t / 40 + j) + 40.0)
        R[:, j] = euler_to_matrix(np.stack([ang, 0 * ang, 0 * ang], -1), "ZXY")
    V[1:half, 0] = 0.05
    V[half:, 1] = 0.02
    return MotionSequence(skeleton=sk, V=V, R=R, fps=fps)


def dominant_period(x, min_lag=2):
    """Lag of the first autocorrelation peak past the main lobe.

    ``x`` is (T,) or (T, d); channels are summed. The main lobe is skipped
    by searching from the first negative autocorrelation value onward.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    x = x - x.mean(axis=0)
    T = x.shape[0]
    ac = np.zeros(T // 2)
    for c in range(x.shape[1]):
        full = np.correlate(x[:, c], x[:, c], mode="full")[T - 1:]
        ac += full[:T // 2]
    neg = np.flatnonzero(ac < 0)
    start = max(min_lag, int(neg[0])) if neg.size else min_lag
    return start + int(np.argmax(ac[start:]))


def quartic_gw_oracle(DY, DX, T):
    """Brute-force quadruple loop for the quadratic alignment loss."""
    n, m = T.shape
    total = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(m):
                for l in range(m):
                    total += (DY[i, j] - DX[k, l]) ** 2 * T[i, k] * T[j, l]
    return total


def linearized_gw_oracle(DY, DX, T):
    """Brute-force double loop for the linearized cost."""
    n, m = T.shape
    G = np.zeros((n, m))
    for i in range(n):
        for k in range(m):
            s = 0.0
            for j in range(n):
                for l in range(m):
                    s += (DY[i, j] - DX[k, l]) ** 2 * T[j, l]
            G[i, k] = s
    return G


def balanced_sinkhorn_oracle(K, a, b, iters=5000, tol=1e-14):
    """Classical alternating normalization (both marginals hard)."""
    u = np.ones(K.shape[0])
    v = np.ones(K.shape[1])
    for _ in range(iters):
        u_new = a / (K @ v)
        v_new = b / (K.T @ u_new)
        if max(np.abs(u_new - u).max(), np.abs(v_new - v).max()) < tol:
            u, v = u_new, v_new
            break
        u, v = u_new, v_new
    u = a / (K @ v)
    return u[:, None] * K * v[None, :]


def random_distance_matrix(rng, n, zero_diag=True):
    """Symmetric nonnegative matrix normalized to max 1."""
    m = rng.random((n, n))
    m = 0.5 * (m + m.T)
    if zero_diag:
        np.fill_diagonal(m, 0.0)
    mx = m.max()
    return m / mx if mx > 0 else m


def random_feasible_plan(rng, a, n_cols):
    """Rows drawn from the simplex, scaled to the row masses."""
    T = rng.exponential(size=(len(a), n_cols))
    T *= (a / T.sum(axis=1))[:, None]
    return T
