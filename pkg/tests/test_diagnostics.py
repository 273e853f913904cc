"""Metric matrices, saddle-point residuals, descent checks, rate fits."""

import numpy as np
import pytest

from dipgm.diagnostics import (CheckReport, DiagnosticsError,
                               build_metric_matrices, consensus_error,
                               ergodic_averages, fejer_check,
                               fejer_check_trace, g_norm_sq, h1_norm_sq,
                               h_dist_series, h_norm_sq, inexactness_ratio,
                               inexactness_ratios, kkt_residual,
                               kkt_residual_series, metric_min_eigenvalues,
                               monotone_residual_check,
                               monotone_residual_check_trace, mu_bar,
                               quasi_fejer_check, rate_fit, running_best)
from dipgm.inner import ScheduleKind, ToleranceSchedule
from dipgm.model import LossKind, SmoothLoss, lipschitz_bound, partition, synthetic_dataset
from dipgm.prox import RegKind, Regularizer
from dipgm.solvers import (Algorithm, AgentProblem, StopRule,
                           stepsizes_from_bounds, run)
from dipgm.topology import (generate_random_connected_graph,
                            metropolis_hastings_weights)


@pytest.fixture(scope="module")
def small_setup():
    """Four agents, three features: small enough for dense oracles."""
    graph = generate_random_connected_graph(4, 0.7, 2)
    mixing = metropolis_hastings_weights(graph)
    dataset = synthetic_dataset(LossKind.LINEAR, 40, 3, seed=4)
    shards = partition(dataset, 4, 0)
    loss = SmoothLoss(LossKind.LINEAR, 1.0)
    L = np.array([lipschitz_bound(loss, s) for s in shards])
    reg = Regularizer(RegKind.L1, 0.05)
    problems = [AgentProblem(loss, s, reg, L[i]) for i, s in enumerate(shards)]
    sizes = stepsizes_from_bounds(L)
    mm = build_metric_matrices(sizes.tau, sizes.beta, mixing.V, L)
    return problems, mixing, sizes, L, mm


@pytest.fixture(scope="module")
def exact_trace(small_setup):
    problems, mixing, sizes, L, mm = small_setup
    trace = run(Algorithm.DIPGM, problems, mixing, sizes, None,
                StopRule(max_iters=300), diagnostic=True, keep_arrays=True)
    return trace


class TestMetricMatrices:
    def test_block_structure(self, small_setup):
        *_, mm = small_setup
        n = mm.tau.size
        np.testing.assert_allclose(mm.H[:n, :n], np.diag(1.0 / mm.tau))
        np.testing.assert_allclose(mm.H[n:, n:], np.eye(n) / mm.beta)
        assert np.all(mm.H[:n, n:] == 0)
        # G's dual block subtracts V Gamma V
        np.testing.assert_allclose(
            mm.G[n:, n:], np.eye(n) / mm.beta - mm.V @ np.diag(mm.tau) @ mm.V,
            atol=1e-12)

    def test_h_equals_q_m_inverse(self, small_setup):
        *_, mm = small_setup
        np.testing.assert_allclose(mm.H, mm.Q @ np.linalg.inv(mm.M),
                                   atol=1e-12)

    def test_g_equals_qt_plus_q_minus_mhm(self, small_setup):
        *_, mm = small_setup
        np.testing.assert_allclose(mm.G, mm.Q.T + mm.Q - mm.M.T @ mm.H @ mm.M,
                                   atol=1e-12)

    def test_positive_definite_inside_bounds(self, small_setup):
        *_, mm = small_setup
        eigs = metric_min_eigenvalues(mm)
        assert all(v > 0 for v in eigs.values())
        assert mm.pd_H and mm.pd_G and mm.pd_H1

    def test_h1_singular_at_tau_boundary(self, small_setup):
        _, mixing, _, L, _ = small_setup
        tau = 2.0 / L
        mm = build_metric_matrices(tau, 0.5 / tau.max(), mixing.V, L)
        assert abs(metric_min_eigenvalues(mm)["H1"]) <= 1e-8
        assert not mm.pd_H1

    def test_g_dual_block_closed_form(self):
        # shared tau = 1, beta = 0.5, sigma_max(I-W) = 1.5 gives 0.5
        eigvecs = np.linalg.qr(np.random.default_rng(0).standard_normal((3, 3)))[0]
        V = eigvecs @ np.diag([0.0, 1.0, np.sqrt(1.5)]) @ eigvecs.T
        mm = build_metric_matrices(np.ones(3), 0.5, V, np.ones(3))
        dual_min = np.linalg.eigvalsh(mm.G[3:, 3:]).min()
        assert dual_min == pytest.approx(1.0 / 0.5 - 1.5, abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(DiagnosticsError):
            build_metric_matrices(np.ones(2), 0.5, np.eye(3), np.ones(2))


class TestBlockwiseNorms:
    def test_norms_match_dense_evaluation(self, small_setup):
        *_, mm = small_setup
        rng = np.random.default_rng(1)
        N, n_feat = mm.tau.size, 2
        X = rng.standard_normal((N, n_feat))
        A = rng.standard_normal((N, n_feat))
        for blockwise, dense in ((h_norm_sq, mm.H), (g_norm_sq, mm.G),
                                 (h1_norm_sq, mm.H1)):
            expected = sum(
                np.concatenate([X[:, j], A[:, j]]) @ dense
                @ np.concatenate([X[:, j], A[:, j]])
                for j in range(n_feat))
            assert blockwise(mm, X, A) == pytest.approx(expected, rel=1e-12)

    def test_zero_is_zero(self, small_setup):
        *_, mm = small_setup
        Z = np.zeros((mm.tau.size, 3))
        assert h_norm_sq(mm, Z, Z) == 0.0

    def test_identity_blocks(self):
        V = np.zeros((2, 2))
        mm = build_metric_matrices(np.ones(2), 1.0, V, np.ones(2))
        X = np.array([[1.0, 2.0], [0.0, 1.0]])
        A = np.array([[2.0, 0.0], [1.0, 1.0]])
        assert h_norm_sq(mm, X, A) == pytest.approx(
            np.sum(X ** 2) + np.sum(A ** 2))

    def test_h1_norm_requires_pd(self, small_setup):
        _, mixing, _, L, _ = small_setup
        tau = 3.0 / L  # beyond the 2/L_i bound: H1 indefinite
        mm = build_metric_matrices(tau, 0.5 / tau.max(), mixing.V, L)
        with pytest.raises(DiagnosticsError):
            h1_norm_sq(mm, np.ones((L.size, 1)), np.ones((L.size, 1)))


class TestKktResidual:
    def test_single_agent_quadratic_hand_value(self):
        # f = x^2/2 on one agent, g = 0, one exact step from x0:
        # x~ = (1 - tau) x0 and the residual is |x~ - x0| |1 - 1/tau|
        tau = np.array([0.8])
        x0 = 3.0
        mm = build_metric_matrices(tau, 0.5 / tau[0], np.zeros((1, 1)),
                                   np.ones(1))
        x_tilde = (1 - tau[0]) * x0
        val = kkt_residual(mm,
                           X=np.array([[x0]]), X_tilde=np.array([[x_tilde]]),
                           Alpha=np.zeros((1, 1)), Alpha_tilde=np.zeros((1, 1)),
                           grad_X=np.array([[x0]]),
                           grad_X_tilde=np.array([[x_tilde]]))
        assert val == pytest.approx(abs(x_tilde - x0) * abs(1 - 1 / tau[0]))

    def test_invariant_to_consensus_shift_in_alpha(self, small_setup):
        *_, mm = small_setup
        rng = np.random.default_rng(2)
        N = mm.tau.size
        args = dict(
            X=rng.standard_normal((N, 2)), X_tilde=rng.standard_normal((N, 2)),
            grad_X=rng.standard_normal((N, 2)),
            grad_X_tilde=rng.standard_normal((N, 2)))
        A = rng.standard_normal((N, 2))
        At = rng.standard_normal((N, 2))
        base = kkt_residual(mm, Alpha=A, Alpha_tilde=At, **args)
        shift = np.outer(np.ones(N), np.array([5.0, -3.0]))
        shifted = kkt_residual(mm, Alpha=A + shift, Alpha_tilde=At + shift,
                               **args)
        assert shifted == pytest.approx(base, rel=1e-9)

    def test_series_decays_on_exact_run(self, small_setup, exact_trace):
        *_, mm = small_setup
        kkt = kkt_residual_series(mm, exact_trace)
        assert kkt[0] > kkt[-1]
        assert kkt[-1] < 1e-6


class TestDescentChecks:
    def test_exact_run_fejer_clean(self, small_setup, exact_trace):
        problems, mixing, sizes, L, mm = small_setup
        report = fejer_check_trace(mm, exact_trace, exact_trace.final_X,
                                   exact_trace.final_Alpha)
        assert report.passed and report.n_checked == 300

    def test_constant_trace_at_reference(self, small_setup):
        *_, mm = small_setup
        N = mm.tau.size
        X_ref = np.ones((N, 2))
        A_ref = np.zeros((N, 2))
        K = 5
        report = fejer_check(mm, [X_ref] * K, [A_ref] * K, [X_ref] * K,
                             [A_ref] * K, [np.zeros((N, 2))] * K,
                             X_ref, A_ref, X_ref, A_ref)
        assert report.passed

    def test_exact_run_monotone_clean(self, small_setup, exact_trace):
        *_, mm = small_setup
        report = monotone_residual_check_trace(mm, exact_trace)
        assert report.passed

    def test_monotone_rejects_inexact_trace(self, small_setup):
        *_, mm = small_setup
        N = mm.tau.size
        Z = [np.zeros((N, 1))] * 3
        D = [np.full((N, 1), 1e-3)] * 3
        with pytest.raises(DiagnosticsError, match="exact"):
            monotone_residual_check(mm, Z, Z, Z, Z, D)

    def test_monotone_detects_growth(self, small_setup):
        *_, mm = small_setup
        N = mm.tau.size
        X = [np.full((N, 1), 1.0), np.full((N, 1), 1.0)]
        X_tilde = [np.full((N, 1), 0.9), np.full((N, 1), 0.5)]  # growing gap
        A = [np.zeros((N, 1))] * 2
        D = [np.zeros((N, 1))] * 2
        report = monotone_residual_check(mm, X, A, X_tilde, A, D)
        assert not report.passed

    def test_quasi_fejer_on_inexact_run(self, small_setup):
        problems, mixing, sizes, L, mm = small_setup
        reg = Regularizer(RegKind.GENERALIZED_LASSO, 0.05,
                          D=np.random.default_rng(3).standard_normal((2, 3)))
        inexact = [AgentProblem(p.loss, p.shard, reg, p.L) for p in problems]
        schedule = ToleranceSchedule(ScheduleKind.INV_K_SQUARED, 1e-2)
        trace = run(Algorithm.DIPGM, inexact, mixing, sizes, schedule,
                    StopRule(max_iters=150), diagnostic=True, keep_arrays=True)
        long = run(Algorithm.DIPGM, inexact, mixing, sizes,
                   ToleranceSchedule(ScheduleKind.CONSTANT, 1e-12),
                   StopRule(max_iters=2000), diagnostic=True)
        # per-step certified residual totals drive the allowed growth
        eps = np.array([np.sqrt(np.sum(r.d_norms ** 2))
                        for r in trace.records[1:]])
        report = quasi_fejer_check(mm, trace, long.final_X, long.final_Alpha,
                                   eps)
        assert report.passed

    def test_mu_bar_positive(self, small_setup):
        *_, mm = small_setup
        assert mu_bar(mm) > 0


class TestSeriesTools:
    def test_rate_fit_power_model(self):
        k = np.arange(1, 200)
        fit = rate_fit(1.0 / k, "power")
        assert fit.exponent == pytest.approx(-1.0, abs=0.05)
        assert fit.r_squared > 0.999

    def test_rate_fit_geometric_model(self):
        k = np.arange(1, 200)
        fit = rate_fit(0.9 ** k, "geometric")
        assert fit.ratio == pytest.approx(0.9, abs=0.005)
        assert fit.r_squared > 0.999

    def test_rate_fit_constant_series(self):
        fit = rate_fit(np.full(100, 2.0), "power")
        assert fit.exponent == pytest.approx(0.0, abs=1e-10)

    def test_rate_fit_drops_nonpositive(self):
        vals = np.concatenate([1.0 / np.arange(1, 100), np.zeros(5)])
        fit = rate_fit(vals, "power")
        assert np.isfinite(fit.exponent)

    def test_rate_fit_too_short(self):
        with pytest.raises(DiagnosticsError):
            rate_fit(np.array([1.0, 0.5]), "power")

    def test_rate_fit_unknown_model(self):
        with pytest.raises(DiagnosticsError):
            rate_fit(np.ones(50), "exponentialish")

    def test_running_best_is_cummin(self):
        vals = np.array([3.0, 1.0, 2.0, 0.5, 0.7])
        np.testing.assert_allclose(running_best(vals), [3, 1, 1, 0.5, 0.5])

    def test_ergodic_averages(self):
        seq = [np.array([[2.0]]), np.array([[4.0]]), np.array([[6.0]])]
        avgs = ergodic_averages(seq)
        np.testing.assert_allclose([a[0, 0] for a in avgs], [2.0, 3.0, 4.0])

    def test_ergodic_constant_sequence(self):
        seq = [np.ones((2, 2))] * 5
        for a in ergodic_averages(seq):
            np.testing.assert_allclose(a, np.ones((2, 2)))

    def test_consensus_error_zero_on_consensus(self, small_setup):
        _, mixing, *_ = small_setup
        X = np.tile(np.array([1.0, -2.0, 3.0]), (4, 1))
        assert consensus_error(mixing.V, X) < 1e-12

    def test_inexactness_ratio_edge_cases(self):
        assert inexactness_ratio(0.0, 0.0) == 0.0
        assert inexactness_ratio(1.0, 0.0) == float("inf")
        assert inexactness_ratio(1.0, 2.0) == 0.5
        with pytest.raises(DiagnosticsError):
            inexactness_ratio(-1.0, 1.0)

    def test_exact_trace_ratios_are_zero(self, exact_trace):
        ratios = inexactness_ratios(exact_trace)
        assert np.all(ratios == 0.0)

    def test_h_dist_series_decreases(self, small_setup, exact_trace):
        *_, mm = small_setup
        dist = h_dist_series(mm, exact_trace, exact_trace.final_X,
                             exact_trace.final_Alpha)
        assert dist[-1] < dist[0]
