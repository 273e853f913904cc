"""Data parsing, sharding, losses, and curvature bounds."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dipgm.model import (AgentShard, DataError, LossKind, SmoothLoss,
                         lipschitz_bound, local_value_grad, parse_libsvm,
                         partition, synthetic_dataset)


class TestParseLibsvm:
    def test_basic_parse(self):
        ds = parse_libsvm("+1 1:0.5 3:-2\n-1 2:1.0\n")
        assert ds.n_samples == 2 and ds.n_features == 3
        dense = np.asarray(ds.features.todense())
        np.testing.assert_allclose(dense, [[0.5, 0, -2], [0, 1, 0]])
        np.testing.assert_allclose(ds.labels, [1, -1])

    def test_comments_and_blank_lines(self):
        ds = parse_libsvm("# header\n\n+1 1:2  # trailing\n")
        assert ds.n_samples == 1

    def test_bad_label_reports_line(self):
        with pytest.raises(DataError, match="line 2"):
            parse_libsvm("+1 1:1\nxyz 1:1\n")

    def test_bad_token_reports_line(self):
        with pytest.raises(DataError, match="line 1"):
            parse_libsvm("+1 1:one\n")

    def test_nonincreasing_indices_rejected(self):
        with pytest.raises(DataError, match="increasing"):
            parse_libsvm("+1 2:1 2:2\n")

    def test_empty_file_rejected(self):
        with pytest.raises(DataError, match="empty"):
            parse_libsvm("# only comments\n")

    def test_explicit_n_features(self):
        ds = parse_libsvm("+1 1:1\n", n_features=5)
        assert ds.n_features == 5
        with pytest.raises(DataError):
            parse_libsvm("+1 7:1\n", n_features=5)


class TestSyntheticAndPartition:
    def test_shapes_and_determinism(self):
        a = synthetic_dataset(LossKind.LINEAR, 50, 7, seed=3)
        b = synthetic_dataset(LossKind.LINEAR, 50, 7, seed=3)
        assert a.n_samples == 50 and a.n_features == 7
        np.testing.assert_array_equal(np.asarray(a.features.todense()),
                                      np.asarray(b.features.todense()))

    def test_classification_labels_are_signs(self):
        ds = synthetic_dataset(LossKind.LOGISTIC, 40, 5, seed=1)
        assert set(np.unique(ds.labels)) <= {-1.0, 1.0}

    def test_partition_covers_exactly(self):
        ds = synthetic_dataset(LossKind.LINEAR, 23, 4, seed=0)
        shards = partition(ds, 4, seed=1)
        sizes = [s.m for s in shards]
        assert sorted(sizes, reverse=True) == sizes  # remainder to low ids
        assert sum(sizes) == 23
        all_idx = np.concatenate([s.indices for s in shards])
        assert sorted(all_idx.tolist()) == list(range(23))

    def test_partition_too_many_agents(self):
        ds = synthetic_dataset(LossKind.LINEAR, 3, 4, seed=0)
        with pytest.raises(DataError):
            partition(ds, 5, seed=0)


class TestLocalValueGrad:
    def _shard(self, A, b):
        return AgentShard(agent_id=0, indices=np.arange(len(b)),
                          A=np.asarray(A, float), b=np.asarray(b, float))

    def test_linear_matches_hand_value(self):
        # f = (1/2m)||Ax - b||^2 with A = I, b = (1, 2), x = 0 -> 5/4
        shard = self._shard(np.eye(2), [1.0, 2.0])
        loss = SmoothLoss(LossKind.LINEAR)
        value, grad = local_value_grad(loss, shard, np.zeros(2))
        assert value == pytest.approx(1.25)
        np.testing.assert_allclose(grad, [-0.5, -1.0])

    def test_ridge_term(self):
        shard = self._shard(np.eye(2), [0.0, 0.0])
        loss = SmoothLoss(LossKind.LINEAR, l2_weight=2.0)
        x = np.array([1.0, -1.0])
        value, grad = local_value_grad(loss, shard, x)
        assert value == pytest.approx(0.5 + 2.0)
        # data term is averaged over the 2 samples, ridge is not
        np.testing.assert_allclose(grad, 0.5 * x + 2.0 * x)

    def test_logistic_at_zero(self):
        # log(1 + e^0) = ln 2 per sample; gradient -A^T b sigma(0) / m
        shard = self._shard(np.eye(2), [1.0, -1.0])
        loss = SmoothLoss(LossKind.LOGISTIC)
        value, grad = local_value_grad(loss, shard, np.zeros(2))
        assert value == pytest.approx(np.log(2.0))
        np.testing.assert_allclose(grad, [-0.25, 0.25])

    def test_logistic_stable_at_large_scores(self):
        shard = self._shard([[1000.0]], [-1.0])
        loss = SmoothLoss(LossKind.LOGISTIC)
        value, grad = local_value_grad(loss, shard, np.array([1.0]))
        assert np.isfinite(value) and np.isfinite(grad).all()
        assert value == pytest.approx(1000.0, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 100))
    def test_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        shard = self._shard(rng.standard_normal((6, 4)),
                            np.sign(rng.standard_normal(6)))
        loss = SmoothLoss(LossKind.LOGISTIC, l2_weight=0.3)
        x = rng.standard_normal(4)
        _, grad = local_value_grad(loss, shard, x)
        h = 1e-6
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            fp = local_value_grad(loss, shard, x + e)[0]
            fm = local_value_grad(loss, shard, x - e)[0]
            assert grad[j] == pytest.approx((fp - fm) / (2 * h), abs=1e-5)

    def test_dimension_mismatch(self):
        shard = self._shard(np.eye(2), [0.0, 0.0])
        with pytest.raises(DataError):
            local_value_grad(SmoothLoss(LossKind.LINEAR), shard, np.zeros(3))


class TestLipschitzBound:
    def _shard(self, A):
        return AgentShard(agent_id=0, indices=np.arange(A.shape[0]),
                          A=A, b=np.zeros(A.shape[0]))

    def test_linear_matches_eigenvalue(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((12, 5))
        shard = self._shard(A)
        loss = SmoothLoss(LossKind.LINEAR, l2_weight=0.7)
        smax = np.linalg.eigvalsh(A.T @ A).max()
        assert lipschitz_bound(loss, shard) == pytest.approx(
            smax / 12 + 0.7, rel=1e-6)

    def test_logistic_quarter_factor(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((8, 3))
        shard = self._shard(A)
        lin = lipschitz_bound(SmoothLoss(LossKind.LINEAR), shard)
        log = lipschitz_bound(SmoothLoss(LossKind.LOGISTIC), shard)
        assert log == pytest.approx(lin / 4.0, rel=1e-6)

    def test_unscaled_gram_drops_scaling(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((10, 4))
        shard = self._shard(A)
        loss = SmoothLoss(LossKind.LINEAR, l2_weight=1.0)
        smax = np.linalg.eigvalsh(A.T @ A).max()
        assert lipschitz_bound(loss, shard, unscaled_gram=True) == \
            pytest.approx(smax + 1.0, rel=1e-6)

    def test_bound_is_valid_curvature(self):
        # the gradient map must be L-Lipschitz: test on random pairs
        rng = np.random.default_rng(3)
        A = rng.standard_normal((9, 4))
        shard = AgentShard(0, np.arange(9), A, rng.standard_normal(9))
        loss = SmoothLoss(LossKind.LINEAR, l2_weight=0.5)
        L = lipschitz_bound(loss, shard)
        for _ in range(20):
            x, y = rng.standard_normal(4), rng.standard_normal(4)
            gx = local_value_grad(loss, shard, x)[1]
            gy = local_value_grad(loss, shard, y)[1]
            assert np.linalg.norm(gx - gy) <= L * np.linalg.norm(x - y) + 1e-9
