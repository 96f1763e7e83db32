import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mamm.exceptions import InfeasibleRowError
from mamm.solver import (SolverParams, TransportPlan, _sinkhorn_log,
                         feasible_product_plan, gw_linearized_cost, gw_loss,
                         semi_unbalanced_sinkhorn, solve_fsugw, uniform_masses,
                         wasserstein_loss)

from helpers import (balanced_sinkhorn_oracle, linearized_gw_oracle,
                     quartic_gw_oracle, random_distance_matrix,
                     random_feasible_plan)


class TestWassersteinLoss:
    def test_zero_cost(self):
        T = np.random.default_rng(0).random((3, 4))
        assert wasserstein_loss(np.zeros((3, 4)), T) == 0.0

    def test_zero_plan(self):
        assert wasserstein_loss(np.ones((3, 4)), np.zeros((3, 4))) == 0.0

    def test_matches_double_loop(self):
        rng = np.random.default_rng(1)
        D = rng.random((3, 4))
        T = rng.random((3, 4))
        expected = sum(D[i, k] * T[i, k] for i in range(3) for k in range(4))
        assert abs(wasserstein_loss(D, T) - expected) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            wasserstein_loss(np.zeros((2, 2)), np.zeros((3, 2)))


class TestGwLoss:
    def test_identical_metrics_identity_coupling(self):
        rng = np.random.default_rng(2)
        D = random_distance_matrix(rng, 4)
        T = np.eye(4) / 4
        assert abs(gw_loss(D, D, T)) < 1e-12

    def test_zero_plan(self):
        rng = np.random.default_rng(3)
        assert gw_loss(random_distance_matrix(rng, 3),
                       random_distance_matrix(rng, 5), np.zeros((3, 5))) == 0.0

    @pytest.mark.parametrize("ny,nx", [(4, 4), (5, 5), (4, 6), (6, 5)])
    def test_matches_quartic_oracle(self, ny, nx):
        rng = np.random.default_rng(ny * 10 + nx)
        DY = random_distance_matrix(rng, ny)
        DX = random_distance_matrix(rng, nx)
        T = random_feasible_plan(rng, uniform_masses(ny), nx)
        assert abs(gw_loss(DY, DX, T) - quartic_gw_oracle(DY, DX, T)) < 1e-9

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="square"):
            gw_loss(np.zeros((3, 4)), np.zeros((4, 4)), np.zeros((3, 4)))


class TestLinearizedCost:
    def test_zero_plan_gives_zero(self):
        rng = np.random.default_rng(4)
        G = gw_linearized_cost(random_distance_matrix(rng, 3),
                               random_distance_matrix(rng, 4), np.zeros((3, 4)))
        assert np.abs(G).max() == 0.0

    def test_matches_quadruple_loop(self):
        rng = np.random.default_rng(5)
        DY = random_distance_matrix(rng, 3)
        DX = random_distance_matrix(rng, 3)
        T = random_feasible_plan(rng, uniform_masses(3), 3)
        G = gw_linearized_cost(DY, DX, T)
        assert np.abs(G - linearized_gw_oracle(DY, DX, T)).max() < 1e-10

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(6)
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
        denom = np.abs(fd).max()
        assert np.abs(2 * G - fd).max() / denom < 1e-4


class TestSinkhorn:
    def test_product_kernel_is_fixed_point(self):
        a = uniform_masses(4)
        b = uniform_masses(5)
        K = np.outer(a, b)
        plan = semi_unbalanced_sinkhorn(K, a, b, lam=math.inf, epsilon=1.0)
        assert np.abs(plan.T - K).max() < 1e-12

    def test_lambda_zero_normalizes_rows_only(self):
        rng = np.random.default_rng(7)
        K = rng.random((3, 4)) + 0.1
        a = uniform_masses(3)
        b = uniform_masses(4)
        plan = semi_unbalanced_sinkhorn(K, a, b, lam=0.0, epsilon=1.0)
        expected = K * (a / K.sum(axis=1))[:, None]
        assert np.abs(plan.T - expected).max() < 1e-12

    def test_balanced_matches_classical_oracle(self):
        rng = np.random.default_rng(8)
        K = rng.random((4, 4)) + 0.05
        a = uniform_masses(4)
        b = uniform_masses(4)
        plan = semi_unbalanced_sinkhorn(K, a, b, lam=math.inf, epsilon=1.0,
                                        tol_marginal=1e-12, max_iter=5000)
        assert plan.row_marginal_violation() <= 1e-8
        assert plan.col_marginal_violation() <= 1e-8
        oracle = balanced_sinkhorn_oracle(K, a, b)
        assert np.abs(plan.T - oracle).max() < 1e-8

    def test_infeasible_row_named(self):
        K = np.array([[1.0, 1.0], [0.0, 0.0]])
        with pytest.raises(InfeasibleRowError, match="row 1"):
            semi_unbalanced_sinkhorn(K, uniform_masses(2), uniform_masses(2),
                                     lam=1.0, epsilon=1.0)

    def test_mask_zeros_are_exact(self):
        rng = np.random.default_rng(9)
        K = rng.random((4, 4)) + 0.1
        mask = np.ones((4, 4))
        mask[0, 1] = mask[2, 3] = 0.0
        plan = semi_unbalanced_sinkhorn(K, uniform_masses(4), uniform_masses(4),
                                        lam=0.5, epsilon=1.0, mask=mask)
        assert plan.T[0, 1] == 0.0 and plan.T[2, 3] == 0.0

    def test_log_domain_agrees_with_scaling(self):
        rng = np.random.default_rng(10)
        K = rng.random((5, 6)) + 0.02
        a = uniform_masses(5)
        b = uniform_masses(6)
        fi = 0.05 / (0.05 + 1.0)
        T_log = _sinkhorn_log(K, a, b, fi, 1e-12, 2000)
        plan = semi_unbalanced_sinkhorn(K, a, b, lam=0.05, epsilon=1.0,
                                        tol_marginal=1e-12, max_iter=2000)
        assert np.abs(T_log - plan.T).max() < 1e-10

    def test_extreme_kernel_falls_back_to_log_domain(self):
        # dynamic range beyond 1e30 in the scalings
        a = uniform_masses(3)
        b = uniform_masses(3)
        C = np.array([[0.0, 500.0, 900.0],
                      [500.0, 0.0, 500.0],
                      [900.0, 500.0, 0.0]])
        K = np.exp(-C / 5.0)
        plan = semi_unbalanced_sinkhorn(K, a, b, lam=math.inf, epsilon=5.0,
                                        tol_marginal=1e-10, max_iter=3000)
        assert plan.row_marginal_violation() <= 1e-10
        assert plan.col_marginal_violation() <= 1e-6


def _random_instance(rng, ny=None, nx=None):
    ny = ny or int(rng.integers(2, 9))
    nx = nx or int(rng.integers(2, 9))
    DY = random_distance_matrix(rng, ny)
    DX = random_distance_matrix(rng, nx)
    DW = rng.random((ny, nx))
    a = uniform_masses(ny)
    b = uniform_masses(nx)
    return DY, DX, DW, a, b


def _objective(DY, DX, DW, T, b, params):
    """Transport cost the solver ranks by (no entropy term)."""
    gw = gw_loss(DY, DX, T)
    w = 0.0 if DW is None else wasserstein_loss(DW, T)
    c = T.sum(axis=0)
    pos = c > 0
    kl = float((c[pos] * np.log(c[pos] / b[pos])).sum()) - c.sum() + b.sum()
    lam_term = 0.0 if math.isinf(params.lam) else params.lam * kl
    return params.alpha * gw + (1 - params.alpha) * w + lam_term


class TestSolve:
    def test_alpha_zero_returns_feasible_plan(self):
        rng = np.random.default_rng(11)
        DY, DX, _, a, b = _random_instance(rng, 5, 6)
        params = SolverParams(alpha=0.0, lam=0.1, epsilon=1.0)
        T0 = feasible_product_plan(a, b)
        plan = solve_fsugw(DY, DX, np.zeros((5, 6)), params,
                           TransportPlan(T=T0, a=a, b=b))
        assert plan.row_marginal_violation() <= 1e-8
        assert (plan.T >= 0).all()

    def test_descent_from_perturbed_clusters(self):
        # three well-separated clusters; identical metrics on both sides
        pts = np.array([0.0, 0.1, 5.0, 5.1, 10.0, 10.1])
        D = np.abs(pts[:, None] - pts[None, :])
        D /= D.max()
        a = uniform_masses(6)
        b = uniform_masses(6)
        rng = np.random.default_rng(12)
        T0 = np.eye(6) / 6 + 0.02 * rng.random((6, 6))
        T0 *= (a / T0.sum(axis=1))[:, None]
        params = SolverParams(alpha=1.0, lam=math.inf, epsilon=0.01)
        init = TransportPlan(T=T0, a=a, b=b)
        plan = solve_fsugw(D, D, None, params, init)
        obj0 = _objective(D, D, None, T0, b, params)
        obj1 = _objective(D, D, None, plan.T, b, params)
        assert obj1 <= obj0 + 1e-12

    def test_monte_carlo_optimality_small(self):
        rng = np.random.default_rng(13)
        DY, DX, DW, a, b = _random_instance(rng, 4, 4)
        params = SolverParams(alpha=0.8, lam=0.05, epsilon=1.0)
        plan = solve_fsugw(DY, DX, DW, params,
                           TransportPlan(T=feasible_product_plan(a, b), a=a, b=b))
        solver_obj = _objective(DY, DX, DW, plan.T, b, params)
        samples = rng.exponential(size=(10000, 4, 4))
        samples *= (a[None, :, None] / samples.sum(axis=2, keepdims=True))
        best = min(_objective(DY, DX, DW, S, b, params) for S in samples[:10000])
        assert solver_obj <= best + 1e-10

    def test_masked_entries_stay_zero(self):
        rng = np.random.default_rng(14)
        DY, DX, DW, a, b = _random_instance(rng, 5, 5)
        mask = np.ones((5, 5))
        mask[0, 0] = mask[3, 4] = 0.0
        params = SolverParams(alpha=0.7, lam=0.1, epsilon=0.5, mask=mask)
        T0 = feasible_product_plan(a, b, mask)
        plan = solve_fsugw(DY, DX, DW, params, TransportPlan(T=T0, a=a, b=b))
        assert plan.T[0, 0] == 0.0 and plan.T[3, 4] == 0.0

    def test_balanced_limit_columns(self):
        rng = np.random.default_rng(15)
        DY, DX, DW, a, b = _random_instance(rng, 6, 6)
        params = SolverParams(alpha=0.8, lam=1e9, epsilon=1.0, sinkhorn_steps=2000)
        plan = solve_fsugw(DY, DX, DW, params,
                           TransportPlan(T=feasible_product_plan(a, b), a=a, b=b))
        assert plan.col_marginal_violation() <= 1e-6

    def test_normalization_invariance_of_first_step(self):
        # scaling both metrics by s and (epsilon, lambda) by s^2 leaves the
        # first mirror-descent iterate unchanged
        rng = np.random.default_rng(16)
        DY, DX, DW, a, b = _random_instance(rng, 5, 5)
        s = 3.7
        base = SolverParams(alpha=1.0, lam=0.05, epsilon=1.0, mirror_steps=1,
                            tol_objective=1e-30)
        scaled = SolverParams(alpha=1.0, lam=0.05 * s**2, epsilon=s**2,
                              mirror_steps=1, tol_objective=1e-30)
        init = TransportPlan(T=feasible_product_plan(a, b), a=a, b=b)
        p1 = solve_fsugw(DY, DX, None, base, init)
        p2 = solve_fsugw(s * DY, s * DX, None, scaled, init)
        assert np.abs(p1.T - p2.T).max() < 1e-12

    def test_trace_records_terms(self):
        rng = np.random.default_rng(17)
        DY, DX, DW, a, b = _random_instance(rng, 4, 5)
        trace = []
        solve_fsugw(DY, DX, DW, SolverParams(),
                    TransportPlan(T=feasible_product_plan(a, b), a=a, b=b), trace=trace)
        assert len(trace) >= 1
        for key in ("objective", "gw_term", "w_term", "kl_term",
                    "entropy_term", "marginal_violation"):
            assert key in trace[0]

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_feasibility_property(self, seed):
        rng = np.random.default_rng(seed)
        DY, DX, DW, a, b = _random_instance(rng)
        alpha = float(rng.uniform(0, 1))
        lam = float(rng.choice([0.0, 0.05, 1.0, 1e9]))
        params = SolverParams(alpha=alpha, lam=lam, epsilon=float(rng.uniform(0.3, 2.0)))
        T0 = random_feasible_plan(rng, a, len(b))
        plan = solve_fsugw(DY, DX, DW, params, TransportPlan(T=T0, a=a, b=b))
        assert (plan.T >= 0).all()
        assert plan.row_marginal_violation() <= 1e-8
        assert _objective(DY, DX, DW, plan.T, b, params) <= \
            _objective(DY, DX, DW, T0, b, params) + 1e-12
