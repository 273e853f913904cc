"""Communication graphs, Metropolis-Hastings mixing matrices, and their spectra."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected connected communication graph on agents 0..n_agents-1."""

    n_agents: int
    edges: frozenset  # frozenset of (i, j) tuples with i < j

    def __post_init__(self):
        if self.n_agents < 1:
            raise TopologyError("need at least one agent")
        for (i, j) in self.edges:
            if i == j:
                raise TopologyError(f"self-loop at {i}")
            if not (0 <= i < j < self.n_agents):
                raise TopologyError(f"bad edge ({i}, {j})")
        if not self.is_connected():
            raise TopologyError("graph is not connected")

    @property
    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n_agents, dtype=int)
        for (i, j) in self.edges:
            d[i] += 1
            d[j] += 1
        return d

    def neighbors(self, i: int) -> list:
        out = []
        for (a, b) in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_agents, self.n_agents), dtype=bool)
        for (i, j) in self.edges:
            a[i, j] = a[j, i] = True
        return a

    def is_connected(self) -> bool:
        # breadth-first traversal from agent 0
        if self.n_agents == 1:
            return True
        adj = {i: [] for i in range(self.n_agents)}
        for (i, j) in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for v in frontier:
                for w in adj[v]:
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            frontier = nxt
        return len(seen) == self.n_agents

    # edge-list text format: first line "N M", then M lines "i j" (0-based)
    def to_edge_list(self) -> str:
        lines = [f"{self.n_agents} {len(self.edges)}"]
        for (i, j) in sorted(self.edges):
            lines.append(f"{i} {j}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "Graph":
        tokens = text.split()
        if len(tokens) < 2:
            raise TopologyError("edge list header missing")
        n, m = int(tokens[0]), int(tokens[1])
        body = tokens[2:]
        if len(body) != 2 * m:
            raise TopologyError(f"expected {2 * m} indices, got {len(body)}")
        edges = set()
        for k in range(m):
            i, j = int(body[2 * k]), int(body[2 * k + 1])
            edges.add((min(i, j), max(i, j)))
        return cls(n, frozenset(edges))


@dataclass(frozen=True)
class MixingMatrix:
    """Doubly stochastic weight matrix with cached spectral quantities.

    V is the symmetric PSD square root of I-W; it is used by the
    diagnostics only, never by a solver communication step.
    """

    W: np.ndarray
    W_tilde: np.ndarray
    V: np.ndarray
    sigma_max_IminusW: float
    sigma_min_W: float
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def n_agents(self) -> int:
        return self.W.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        for row in self.W:
            writer.writerow([f"{v:.17g}" for v in row])
        return buf.getvalue()


def generate_random_connected_graph(n_agents: int, connectivity_ratio: float,
                                    seed: int) -> Graph:
    """Random spanning tree plus uniformly random extra edges.

    The target edge count is max(N-1, floor(ratio * N(N-1)/2)); the ratio
    is rejected if it asks for fewer edges than any spanning tree needs.
    """
    if n_agents < 1:
        raise TopologyError("need at least one agent")
    if not (0.0 < connectivity_ratio <= 1.0):
        raise TopologyError("connectivity ratio must be in (0, 1]")
    n = n_agents
    if n == 1:
        return Graph(1, frozenset())
    target = int(np.floor(connectivity_ratio * n * (n - 1) / 2))
    if target < n - 1:
        if target < n - 1 and max(n - 1, target) != n - 1:
            raise TopologyError("unreachable")
        # clamp below by the spanning-tree size
        target = n - 1
    rng = np.random.default_rng(seed)
    # random spanning tree: attach each new vertex to a uniformly random
    # previously attached one, over a random vertex ordering
    order = rng.permutation(n)
    edges = set()
    for idx in range(1, n):
        v = order[idx]
        u = order[rng.integers(0, idx)]
        edges.add((min(u, v), max(u, v)))
    # add uniformly random non-edges until the target count
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(all_pairs)
    for pair in all_pairs:
        if len(edges) >= target:
            break
        if pair not in edges:
            edges.add(pair)
    return Graph(n, frozenset(edges))


def metropolis_hastings_weights(graph: Graph) -> MixingMatrix:
    """W_ij = 1/(1 + max(d_i, d_j)) on edges, diagonal fills the row to 1."""
    if not graph.is_connected():
        raise TopologyError("mixing weights require a connected graph")
    n = graph.n_agents
    d = graph.degrees
    W = np.zeros((n, n))
    for (i, j) in graph.edges:
        w = 1.0 / (1.0 + max(d[i], d[j]))
        W[i, j] = W[j, i] = w
    np.fill_diagonal(W, 1.0 - W.sum(axis=1))
    return spectral_quantities(W)


def spectral_quantities(W: np.ndarray, zero_tol: float = 1e-9) -> MixingMatrix:
    """Eigendecompose W and cache W~, V = sqrt(I-W) and the sigma values.

    A singular value is treated as nonzero when it exceeds ``zero_tol``.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise TopologyError("W must be square")
    if not np.allclose(W, W.T, atol=1e-12):
        raise TopologyError("W must be symmetric")
    eigvals, eigvecs = np.linalg.eigh(W)
    one_minus = np.clip(1.0 - eigvals, 0.0, None)
    V = (eigvecs * np.sqrt(one_minus)) @ eigvecs.T
    V = 0.5 * (V + V.T)
    sing = np.abs(eigvals)
    nonzero = sing[sing > zero_tol]
    sigma_min_W = float(nonzero.min()) if nonzero.size else 0.0
    return MixingMatrix(
        W=W,
        W_tilde=0.5 * (np.eye(W.shape[0]) + W),
        V=V,
        sigma_max_IminusW=float(one_minus.max()),
        sigma_min_W=sigma_min_W,
        eigenvalues=eigvals,
        eigenvectors=eigvecs,
    )


@dataclass
class MixingCheck:
    name: str
    passed: bool
    violation: float


def validate_mixing(W: np.ndarray, graph: Graph, tol: float = 1e-10) -> list:
    """Check each mixing-matrix condition; returns one report entry per check.

    The overall result passes iff every entry does. Failures are report
    entries, not exceptions.
    """
    W = np.asarray(W, dtype=float)
    n = graph.n_agents
    checks = []
    if W.shape != (n, n):
        return [MixingCheck("shape", False, float("inf"))]

    sym_v = float(np.abs(W - W.T).max())
    checks.append(MixingCheck("symmetry", sym_v <= tol, sym_v))

    row_v = float(np.abs(W.sum(axis=1) - 1.0).max())
    checks.append(MixingCheck("row_sums", row_v <= tol, row_v))
    col_v = float(np.abs(W.sum(axis=0) - 1.0).max())
    checks.append(MixingCheck("col_sums", col_v <= tol, col_v))

    adj = graph.adjacency()
    off = ~np.eye(n, dtype=bool)
    sparsity_v = float(np.abs(W[off & ~adj]).max()) if (off & ~adj).any() else 0.0
    checks.append(MixingCheck("zero_off_edge", sparsity_v <= tol, sparsity_v))
    pos_v = float(-min(W[adj].min(), 0.0)) if adj.any() else 0.0
    positive = bool(adj.any() and (W[adj] > tol).all()) or not adj.any()
    checks.append(MixingCheck("positive_on_edge", positive, pos_v))

    sym = 0.5 * (W + W.T)
    eigvals = np.linalg.eigvalsh(sym)
    lo_v = float(max(-1.0 - eigvals.min(), 0.0))
    checks.append(MixingCheck("eigs_above_minus_one", eigvals.min() > -1.0 + tol, lo_v))
    hi_v = float(max(eigvals.max() - 1.0, 0.0))
    checks.append(MixingCheck("eigs_at_most_one", eigvals.max() <= 1.0 + tol, hi_v))
    # null(I-W) = span(1): eigenvalue 1 must be simple
    near_one = int(np.sum(np.abs(eigvals - 1.0) <= tol))
    checks.append(MixingCheck("eigenvalue_one_simple", near_one == 1,
                              float(abs(near_one - 1))))
    return checks


def mixing_ok(checks: list) -> bool:
    return all(c.passed for c in checks)
