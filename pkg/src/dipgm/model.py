"""Smooth losses, LIBSVM parsing, synthetic data, and per-agent sharding."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp


class DataError(ValueError):
    pass


class LossKind(str, Enum):
    LINEAR = "linear"
    LOGISTIC = "logistic"


@dataclass
class Dataset:
    """Sparse design matrix plus labels (real for regression, +-1 for classification)."""

    features: sp.csr_matrix
    labels: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass
class AgentShard:
    agent_id: int
    indices: np.ndarray
    A: np.ndarray  # dense local design matrix, m_i x n
    b: np.ndarray

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass
class SmoothLoss:
    """f_i = (1/m_i) sum_j loss(A_ij^T x, b_ij) + (nu2/2) ||x||^2."""

    kind: LossKind
    l2_weight: float = 0.0

    def __post_init__(self):
        if self.l2_weight < 0:
            raise DataError("l2_weight must be nonnegative")


def parse_libsvm(stream, n_features: int | None = None) -> Dataset:
    """Parse LIBSVM text: "<label> <idx>:<val> ...", 1-based increasing indices.

    ``stream`` is an iterable of lines or a string. Malformed lines raise
    DataError with the line number.
    """
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = list(stream)
    labels = []
    rows, cols, vals = [], [], []
    max_idx = 0
    row = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0].replace("−", "-")))
        except ValueError as exc:
            raise DataError(f"line {lineno}: bad label {tokens[0]!r}") from exc
        prev = 0
        for tok in tokens[1:]:
            try:
                idx_s, val_s = tok.split(":", 1)
                idx = int(idx_s)
                val = float(val_s)
            except ValueError as exc:
                raise DataError(f"line {lineno}: bad feature token {tok!r}") from exc
            if idx <= prev:
                raise DataError(f"line {lineno}: indices not strictly increasing")
            prev = idx
            rows.append(row)
            cols.append(idx - 1)  # 1-based file indices -> 0-based
            vals.append(val)
            max_idx = max(max_idx, idx)
        row += 1
    if row == 0:
        raise DataError("empty file")
    n = n_features if n_features is not None else max_idx
    if max_idx > n:
        raise DataError(f"feature index {max_idx} exceeds n_features={n}")
    features = sp.csr_matrix((vals, (rows, cols)), shape=(row, n))
    return Dataset(features, np.asarray(labels))


def synthetic_dataset(kind: LossKind, n_samples: int, n_features: int,
                      noise_std: float = 0.1, seed: int = 0,
                      sparsity: float = 0.5) -> Dataset:
    """Gaussian features with a planted sparse ground truth.

    For classification the labels are signs of the noisy linear scores.
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n_samples, n_features))
    x_true = rng.standard_normal(n_features)
    mask = rng.random(n_features) < sparsity
    x_true[mask] = 0.0
    score = A @ x_true + noise_std * rng.standard_normal(n_samples)
    if kind == LossKind.LINEAR:
        b = score
    else:
        b = np.where(score >= 0, 1.0, -1.0)
    return Dataset(sp.csr_matrix(A), b)


def partition(dataset: Dataset, n_agents: int, seed: int) -> list:
    """Random even split: permute by seed, contiguous blocks, remainder to low ids."""
    if n_agents < 1:
        raise DataError("need at least one agent")
    m = dataset.n_samples
    if m < n_agents:
        raise DataError(f"{m} samples cannot cover {n_agents} agents")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    base, extra = divmod(m, n_agents)
    shards = []
    start = 0
    for i in range(n_agents):
        size = base + (1 if i < extra else 0)
        idx = np.sort(perm[start:start + size])
        start += size
        shards.append(AgentShard(
            agent_id=i,
            indices=idx,
            A=np.asarray(dataset.features[idx].todense()),
            b=dataset.labels[idx],
        ))
    return shards


def local_value_grad(loss: SmoothLoss, shard: AgentShard, x: np.ndarray):
    """Return (f_i(x), grad f_i(x)) for one agent."""
    x = np.asarray(x, dtype=float)
    if x.shape != (shard.A.shape[1],):
        raise DataError(f"x has shape {x.shape}, expected ({shard.A.shape[1]},)")
    if shard.m == 0:
        raise DataError("empty shard")
    A, b, m = shard.A, shard.b, shard.m
    z = A @ x
    if loss.kind == LossKind.LINEAR:
        r = z - b
        value = 0.5 / m * float(r @ r)
        grad = (A.T @ r) / m
    else:
        t = -z * b
        # log(1 + e^t) evaluated stably
        value = float(np.sum(np.logaddexp(0.0, t))) / m
        sig = 1.0 / (1.0 + np.exp(-t))
        grad = (A.T @ (-b * sig)) / m
    if loss.l2_weight:
        value += 0.5 * loss.l2_weight * float(x @ x)
        grad = grad + loss.l2_weight * x
    return value, grad


def _gram_sigma_max(A: np.ndarray, tol: float = 1e-8, max_iters: int = 10_000) -> float:
    """Largest eigenvalue of A^T A by power iteration."""
    n = A.shape[1]
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iters):
        w = A.T @ (A @ v)
        new_sigma = float(np.linalg.norm(w))
        if new_sigma == 0.0:
            return 0.0
        v = w / new_sigma
        if abs(new_sigma - sigma) <= tol * max(new_sigma, 1.0):
            return new_sigma
        sigma = new_sigma
    raise DataError(f"power iteration did not converge; best estimate {sigma}")


def lipschitz_bound(loss: SmoothLoss, shard: AgentShard,
                    unscaled_gram: bool = False) -> float:
    """Gradient Lipschitz constant of f_i.

    Exact curvature bound: (1/m_i) sigma_max(A^T A) + nu2 for linear and a
    quarter of that for logistic. ``unscaled_gram`` drops the 1/m_i and
    the 1/4 factors (looser, still valid for m_i >= 1) for A/B comparisons.
    """
    if shard.m == 0:
        raise DataError("empty shard")
    smax = _gram_sigma_max(shard.A)
    if unscaled_gram:
        return smax + loss.l2_weight
    if loss.kind == LossKind.LINEAR:
        return smax / shard.m + loss.l2_weight
    return smax / (4.0 * shard.m) + loss.l2_weight
