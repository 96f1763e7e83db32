"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import math
import time

import numpy as np

from mamm.adapters import (from_audio_features, from_labels, from_motion,
                           from_sketch, from_waveform)
from mamm.bvh import parse_bvh
from mamm.metrics import pairwise_l2
from mamm.motion import (MotionSequence, euler_to_matrix, features_of,
                         from_internal, to_internal)
from mamm.patching import FeatureSequence, blend_patches, extract_patches
from mamm.pipeline import AlignmentConfig, HardKeyframe, mamm_align
from mamm.solver import (SolverParams, TransportPlan, feasible_product_plan,
                         gw_linearized_cost, gw_loss, semi_unbalanced_sinkhorn,
                         solve_fsugw, uniform_masses, wasserstein_loss)

from helpers import (balanced_sinkhorn_oracle, dominant_period,
                     linearized_gw_oracle, make_bvh_text, make_chain_skeleton,
                     make_cyclic_motion, make_two_regime_motion,
                     quartic_gw_oracle, random_distance_matrix,
                     random_feasible_plan)


def _report(n, text):
    print(f"\n[criterion {n:2d}] PASS — {text}")


def _objective(DY, DX, DW, T, b, params):
    gw = gw_loss(DY, DX, T)
    w = 0.0 if DW is None else wasserstein_loss(DW, T)
    c = T.sum(axis=0)
    pos = c > 0
    kl = float((c[pos] * np.log(c[pos] / b[pos])).sum()) - c.sum() + b.sum()
    lam_term = 0.0 if math.isinf(params.lam) else params.lam * kl
    return params.alpha * gw + (1 - params.alpha) * w + lam_term


def test_criterion_1_solver_feasibility_and_descent():
    rng = np.random.default_rng(101)
    start = time.time()
    for trial in range(200):
        ny = int(rng.integers(2, 33))
        nx = int(rng.integers(2, 33))
        DY = random_distance_matrix(rng, ny)
        DX = random_distance_matrix(rng, nx)
        DW = rng.random((ny, nx)) if rng.random() < 0.8 else None
        a = uniform_masses(ny)
        b = uniform_masses(nx)
        mask = None
        if rng.random() < 0.25:
            mask = (rng.random((ny, nx)) < 0.8).astype(float)
            mask[np.arange(ny), rng.integers(0, nx, ny)] = 1.0  # keep rows feasible
        params = SolverParams(alpha=float(rng.uniform(0, 1)),
                              lam=float(rng.choice([0.0, 0.05, 1.0, 1e9])),
                              epsilon=float(rng.uniform(0.3, 2.0)), mask=mask)
        T0 = feasible_product_plan(a, b, mask)
        plan = solve_fsugw(DY, DX, DW, params, TransportPlan(T=T0, a=a, b=b))
        assert (plan.T >= 0).all()
        assert plan.row_marginal_violation() <= 1e-8
        if mask is not None:
            assert np.abs(plan.T[mask == 0]).max() == 0.0
        assert _objective(DY, DX, DW, plan.T, b, params) <= \
            _objective(DY, DX, DW, T0, b, params) + 1e-12
    elapsed = time.time() - start
    assert elapsed < 30.0
    _report(1, f"200 random solves feasible, masked-exact, descending ({elapsed:.1f}s)")


def test_criterion_2_gw_correctness():
    rng = np.random.default_rng(102)
    for ny, nx in [(3, 3), (4, 5), (5, 4), (6, 6)]:
        DY = random_distance_matrix(rng, ny)
        DX = random_distance_matrix(rng, nx)
        T = random_feasible_plan(rng, uniform_masses(ny), nx)
        assert abs(gw_loss(DY, DX, T) - quartic_gw_oracle(DY, DX, T)) < 1e-9
        G = gw_linearized_cost(DY, DX, T)
        assert np.abs(G - linearized_gw_oracle(DY, DX, T)).max() < 1e-9
    # finite differences of the loss vs twice the linearized cost
    DY = random_distance_matrix(rng, 5)
    DX = random_distance_matrix(rng, 4)
    T = random_feasible_plan(rng, uniform_masses(5), 4)
    G = gw_linearized_cost(DY, DX, T)
    h = 1e-6
    fd = np.zeros_like(T)
    for i in range(5):
        for k in range(4):
            Tp, Tm = T.copy(), T.copy()
            Tp[i, k] += h
            Tm[i, k] -= h
            fd[i, k] = (gw_loss(DY, DX, Tp) - gw_loss(DY, DX, Tm)) / (2 * h)
    assert np.abs(2 * G - fd).max() / np.abs(fd).max() < 1e-4
    _report(2, "quartic oracles match to 1e-9; gradient matches FD to 1e-4")


def test_criterion_3_balanced_limit():
    rng = np.random.default_rng(103)
    for _ in range(20):
        n, m = int(rng.integers(3, 40)), int(rng.integers(3, 40))
        K = rng.random((n, m)) + 1e-3
        a = uniform_masses(n)
        b = uniform_masses(m)
        plan = semi_unbalanced_sinkhorn(K, a, b, lam=1e9, epsilon=1.0,
                                        tol_marginal=1e-12, max_iter=20000)
        assert plan.col_marginal_violation() <= 1e-6
        oracle = balanced_sinkhorn_oracle(K, a, b, iters=20000)
        assert np.abs(plan.T - oracle).max() <= 1e-6
    _report(3, "lambda=1e9 matches balanced Sinkhorn oracle within 1e-6")


def test_criterion_4_monte_carlo_optimality():
    rng = np.random.default_rng(104)
    params = SolverParams(alpha=0.8, lam=0.05, epsilon=1.0)
    for trial in range(20):
        DY = random_distance_matrix(rng, 4)
        DX = random_distance_matrix(rng, 4)
        DW = rng.random((4, 4))
        a = uniform_masses(4)
        b = uniform_masses(4)
        plan = solve_fsugw(DY, DX, DW, params,
                           TransportPlan(T=feasible_product_plan(a, b), a=a, b=b))
        solver_obj = _objective(DY, DX, DW, plan.T, b, params)
        # 100k random feasible plans, objective evaluated in one vectorized pass
        S = rng.exponential(size=(100_000, 4, 4))
        S *= (a[None, :, None] / S.sum(axis=2, keepdims=True))
        r = S.sum(axis=2)
        c = S.sum(axis=1)
        gw = (np.einsum("ni,ij,nj->n", r, DY**2, r)
              + np.einsum("nk,kl,nl->n", c, DX**2, c)
              - 2.0 * np.einsum("nik,ij,njl,kl->n", S, DY, S, DX))
        w = np.einsum("nik,ik->n", S, DW)
        kl = (c * np.log(c / b)).sum(axis=1) - c.sum(axis=1) + b.sum()
        objs = params.alpha * gw + (1 - params.alpha) * w + params.lam * kl
        assert solver_obj <= objs.min() + 1e-12, f"trial {trial}"
    _report(4, "solver beats 100k random feasible plans on all 20 instances")


def test_criterion_5_patching_round_trip_and_rotations():
    rng = np.random.default_rng(105)
    for _ in range(100):
        T = int(rng.integers(2, 60))
        d = int(rng.integers(1, 6))
        p = int(rng.integers(1, min(T, 12) + 1))
        seq = FeatureSequence(frames=rng.normal(size=(T, d)), fps=30,
                              domain_tag="sketch2d")
        back = blend_patches(extract_patches(seq, p).patches, p, like=seq)
        assert np.abs(back.frames - seq.frames).max() < 1e-12
    # transported motion patches keep valid rotations after blending
    motion = make_cyclic_motion(T=60, n_joints=4)
    fx = features_of(motion)
    ps = extract_patches(fx, 11)
    for _ in range(10):
        W = rng.exponential(size=(40, ps.n_patches))
        W /= W.sum(axis=1, keepdims=True)
        out = blend_patches(W @ ps.patches, 11, like=fx)
        blocks = out.frames[:, 3:].reshape(-1, 3, 3)
        gram = np.einsum("nij,nik->njk", blocks, blocks)
        assert np.abs(gram - np.eye(3)).max() <= 1e-9
        assert np.abs(np.linalg.det(blocks) - 1.0).max() <= 1e-9
    _report(5, "blend(extract) identity to 1e-12; blended rotations stay valid")


def test_criterion_6_waveform_frequency_control():
    X = make_cyclic_motion(T=300, period=30, n_joints=3)
    t = np.arange(240)
    periods = {}
    for P in (48, 24):
        Y = from_waveform(np.sin(2 * np.pi * t / P), fps=30)
        out = mamm_align(X, Y, AlignmentConfig())
        periods[P] = dominant_period(features_of(out).frames[:, 3:], min_lag=6)
    ratio = periods[48] / periods[24]
    assert abs(ratio - 2.0) <= 0.4, periods
    _report(6, f"output periods {periods[48]}/{periods[24]} for f vs 2f (ratio {ratio:.2f})")


def test_criterion_7_motion_by_numbers_structure():
    X = make_two_regime_motion(T=200)
    labels = [0] * 42 + [1] * 42 + [0] * 42
    Y = from_labels(labels, num_classes=2)
    out = mamm_align(X, Y, AlignmentConfig())
    p = 11
    ps = extract_patches(features_of(out), p)
    d = pairwise_l2(ps, ps).values
    lab = np.array(labels)
    patch_lab = np.array([lab[i] if (lab[i:i + p] == lab[i]).all() else -1
                          for i in range(ps.n_patches)])
    keep = patch_lab >= 0
    d = d[np.ix_(keep, keep)]
    pl = patch_lab[keep]
    same = pl[:, None] == pl[None, :]
    off_diag = ~np.eye(len(pl), dtype=bool)
    within = d[same & off_diag].mean()
    cross = d[~same].mean()
    assert within < cross
    _report(7, f"within-label {within:.2f} < cross-label {cross:.2f} patch distance")


def test_criterion_8_hard_keyframes_and_loop():
    X = make_cyclic_motion(T=150, period=24)
    Y = from_waveform(np.sin(2 * np.pi * np.arange(120) / 30), fps=30)
    hard = [HardKeyframe(control_range=(40, 51), motion_range=(60, 71))]
    out = mamm_align(X, Y, AlignmentConfig(stages=4, iters_per_stage=10),
                     hard_keyframes=hard)
    assert np.array_equal(out.R[40:51], X.R[60:71])
    assert np.array_equal(out.V[40:51], X.V[60:71])

    looped = mamm_align(X, Y, AlignmentConfig(stages=4, iters_per_stage=10, loop=True))
    feats = features_of(looped).frames
    first_last = np.linalg.norm(feats[0] - feats[-1])
    adjacent = np.linalg.norm(np.diff(feats, axis=0), axis=1)
    assert first_last <= np.median(adjacent)
    _report(8, f"pinned frames bitwise-equal; loop seam {first_last:.2e} "
               f"<= median step {np.median(adjacent):.2e}")


def _paper_scale_motion(T=594, J=25):
    sk = make_chain_skeleton(J)
    t = np.arange(T)
    V = np.zeros((T, 3))
    V[1:, 0] = 0.04 * np.sin(2 * np.pi * t[1:] / 37)
    V[1:, 2] = 0.02 * np.cos(2 * np.pi * t[1:] / 53)
    R = np.zeros((T, J, 3, 3))
    for j in range(J):
        ang = (30 * np.sin(2 * np.pi * t / (20 + 3 * j) + 0.3 * j)
               + 10 * np.sin(2 * np.pi * t / 7 + j))
        R[:, j] = euler_to_matrix(np.stack([ang, 0.3 * ang, 0 * ang], -1), "ZXY")
    return MotionSequence(skeleton=sk, V=V, R=R, fps=30.0)


def test_criterion_9_runtime_at_paper_scale():
    rng = np.random.default_rng(109)
    t = np.arange(1441)
    bank = np.stack([np.sin(2 * np.pi * t / P + ph)
                     for P, ph in zip(rng.uniform(15, 200, 40), rng.uniform(0, 6, 40))],
                    axis=1)
    control = from_audio_features(bank + 0.1 * rng.normal(size=(1441, 40)), fps=30)
    X = _paper_scale_motion()
    start = time.time()
    out = mamm_align(X, control, AlignmentConfig())
    elapsed = time.time() - start
    assert out.n_frames == 1441
    assert elapsed <= 60.0
    _report(9, f"594-frame x 25-joint motion vs 1441x40 control in {elapsed:.1f}s")


def test_criterion_10_bvh_round_trip_fidelity():
    text = make_bvh_text(n_joints=25, n_frames=600, seed=110, max_angle=80.0)
    data = parse_bvh(text)
    motion = to_internal(data)
    data2 = parse_bvh(from_internal(motion))
    # compare rotation channels only (positions live on the root's first 3 columns)
    rot1 = np.concatenate([data.channels[:, 3:6], data.channels[:, 6:]], axis=1)
    rot2 = np.concatenate([data2.channels[:, 3:6], data2.channels[:, 6:]], axis=1)
    err = np.abs(rot1 - rot2)
    err = np.minimum(err, 360.0 - err)
    assert err.max() < 1e-4
    _report(10, f"600-frame, 25-joint Euler channels preserved to {err.max():.2e} deg")


def test_criterion_11_output_length_for_all_adapters():
    X = make_cyclic_motion(T=90, period=18)
    cfg = AlignmentConfig(stages=2, iters_per_stage=3)
    rng = np.random.default_rng(111)
    controls = {
        "sketch": from_sketch([{"x": float(np.cos(u / 8)), "y": float(np.sin(u / 8)),
                                "t_ms": u * 33.0} for u in range(40)], target_fps=30),
        "waveform": from_waveform(np.sin(np.arange(64) / 5), fps=30),
        "labels": from_labels([0] * 25 + [1] * 25, num_classes=2),
        "audio": from_audio_features(rng.normal(size=(45, 40)), fps=30),
        "motion": from_motion(make_cyclic_motion(T=50, period=10, n_joints=2)),
    }
    for name, control in controls.items():
        out = mamm_align(X, control, cfg)
        assert out.n_frames == control.n_frames, name
    _report(11, "aligned frame count equals control frame count for all 5 adapters")
