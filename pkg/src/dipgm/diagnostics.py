"""Convergence diagnostics: metric matrices, saddle-point residuals,
descent-inequality checks, and empirical rate fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DiagnosticsError(RuntimeError):
    pass


@dataclass
class MetricMatrices:
    """The quadratic forms governing the corrected primal-dual iteration.

    All blocks are N x N and act on the agent axis of stacked iterates;
    the full forms on pairs u = (X, Alpha) are block diagonal across the
    feature axis, so 2N x 2N matrices capture their spectra exactly.

    Q   = [[Gamma^-1, V], [0, (1/beta) I]]
    M   = [[I, Gamma V], [0, I]]              -- the correction map
    H   = Q M^-1 = diag(Gamma^-1, (1/beta) I) -- the Fejer metric
    G   = Q^T + Q - M^T H M = diag(Gamma^-1, (1/beta) I - V Gamma V)
    H1  = G - (1/2) diag(L, 0)                -- the descent metric
    H2  = G - diag(L, 0)

    c1 and c2 cache sqrt of the extreme eigenvalues sigma_max(H) and
    sigma_min(H1) used by the error-propagation constants.
    """

    tau: np.ndarray
    beta: float
    V: np.ndarray
    L: np.ndarray
    Q: np.ndarray
    M: np.ndarray
    H: np.ndarray
    G: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    c1: float
    c2: float
    pd_H: bool
    pd_G: bool
    pd_H1: bool


def build_metric_matrices(tau: np.ndarray, beta: float, V: np.ndarray,
                          L: np.ndarray) -> MetricMatrices:
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    L = np.atleast_1d(np.asarray(L, dtype=float))
    n = tau.size
    if V.shape != (n, n) or L.size != n:
        raise DiagnosticsError("inconsistent dimensions")
    if np.any(tau <= 0) or beta <= 0:
        raise DiagnosticsError("stepsizes must be positive")
    Z = np.zeros((n, n))
    eye = np.eye(n)
    gamma_inv = np.diag(1.0 / tau)
    dual = eye / beta
    Q = np.block([[gamma_inv, V], [Z, dual]])
    M = np.block([[eye, tau[:, None] * V], [Z, eye]])
    H = np.block([[gamma_inv, Z], [Z, dual]])
    VGV = V @ (tau[:, None] * V)
    G = np.block([[gamma_inv, Z], [Z, dual - VGV]])
    H1 = G.copy()
    H1[:n, :n] -= 0.5 * np.diag(L)
    H2 = G.copy()
    H2[:n, :n] -= np.diag(L)
    eig_H1_min = float(np.linalg.eigvalsh(H1).min())
    eig_G_min = float(np.linalg.eigvalsh(G).min())
    return MetricMatrices(
        tau=tau, beta=beta, V=V, L=L, Q=Q, M=M, H=H, G=G, H1=H1, H2=H2,
        c1=float(np.sqrt(max(1.0 / tau.min(), 1.0 / beta))),
        c2=float(np.sqrt(max(eig_H1_min, 0.0))),
        pd_H=True, pd_G=eig_G_min > 0, pd_H1=eig_H1_min > 0)


def metric_min_eigenvalues(mm: MetricMatrices) -> dict:
    """Smallest eigenvalue of each metric (all positive under the
    stepsize conditions tau_i < 2/L_i and beta <= 1/(2 max tau))."""
    return {name: float(np.linalg.eigvalsh(M).min())
            for name, M in (("H", mm.H), ("G", mm.G), ("H1", mm.H1))}


def _pair_norm_sq(weights_x: np.ndarray, beta: float, X: np.ndarray,
                  Alpha: np.ndarray) -> float:
    return float(np.sum(weights_x[:, None] * X * X) +
                 np.sum(Alpha * Alpha) / beta)


def h_norm_sq(mm: MetricMatrices, X: np.ndarray, Alpha: np.ndarray) -> float:
    """||u||_H^2 = sum_i ||x_i||^2 / tau_i + ||alpha||^2 / beta."""
    return _pair_norm_sq(1.0 / mm.tau, mm.beta, X, Alpha)


def g_norm_sq(mm: MetricMatrices, X: np.ndarray, Alpha: np.ndarray) -> float:
    """||u||_G^2 = ||u||_H^2 - sum_i tau_i ||(V alpha)_i||^2."""
    VA = mm.V @ Alpha
    return h_norm_sq(mm, X, Alpha) - float(np.sum(mm.tau[:, None] * VA * VA))


def h1_norm_sq(mm: MetricMatrices, X: np.ndarray, Alpha: np.ndarray) -> float:
    """||u||_H1^2 = ||u||_G^2 - (1/2) sum_i L_i ||x_i||^2.

    Only meaningful as a (semi)norm when H1 is positive definite, which
    the stepsize conditions guarantee strictly inside their bounds.
    """
    if not mm.pd_H1:
        raise DiagnosticsError("H1 is not positive definite for these stepsizes")
    return g_norm_sq(mm, X, Alpha) - 0.5 * float(np.sum(mm.L[:, None] * X * X))


def mu_bar(mm: MetricMatrices, n_agents: int | None = None) -> float:
    """Error-propagation constant of the quasi-nonexpansive recursion:

        sqrt(N) * sigma_max(H^(1/2) M) * max tau * (beta sigma_max(V) + 1)

    It bounds the growth ||u+ - u_ref||_H <= ||u - u_ref||_H + mu_bar*eps
    per iteration when every agent's prox residual is within eps.
    """
    N = mm.tau.size if n_agents is None else n_agents
    sqrtH = np.diag(np.sqrt(np.diag(mm.H)))
    s_hm = float(np.linalg.norm(sqrtH @ mm.M, 2))
    s_v = float(np.linalg.norm(mm.V, 2))
    return float(np.sqrt(N)) * s_hm * float(mm.tau.max()) * (mm.beta * s_v + 1.0)


def kkt_residual(mm: MetricMatrices, X: np.ndarray, X_tilde: np.ndarray,
                 Alpha: np.ndarray, Alpha_tilde: np.ndarray,
                 grad_X: np.ndarray, grad_X_tilde: np.ndarray,
                 D_res: np.ndarray | None = None) -> float:
    """First-order saddle-point residual at the predictor pair (x~, alpha~).

    Combines the primal stationarity defect (subgradient inclusion with
    the inexactness residual d substituted back in) with the dual
    feasibility defect V x~, whose dual-metric form is (alpha~-alpha)/beta.
    """
    d = np.zeros_like(X) if D_res is None else D_res
    primal = (grad_X_tilde - grad_X - mm.V @ (Alpha_tilde - Alpha)
              - (X_tilde - X) / mm.tau[:, None] + d)
    dual = (Alpha_tilde - Alpha) / mm.beta
    return float(np.sqrt(np.sum(primal * primal) + np.sum(dual * dual)))


def consensus_error(V: np.ndarray, X: np.ndarray) -> float:
    """Frobenius norm of V X; zero exactly on the consensus subspace."""
    return float(np.linalg.norm(V @ X))


@dataclass
class CheckReport:
    n_checked: int
    n_violations: int
    worst_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def fejer_check(mm: MetricMatrices, X: list, Alpha: list, X_tilde: list,
                Alpha_tilde: list, D_res: list,
                X_ref: np.ndarray, Alpha_ref: np.ndarray,
                final_X: np.ndarray, final_Alpha: np.ndarray) -> CheckReport:
    """Verify the per-iteration descent inequality against a saddle point:

        ||u+ - u*||_H^2 <= ||u - u*||_H^2 - ||u - u~||_H1^2
                           + 2 <x~ - x*, d>

    The tolerance scales with the initial distance so that checks near
    machine precision do not produce spurious violations.
    """
    K = len(X)
    if not (len(Alpha) == len(X_tilde) == len(Alpha_tilde) == len(D_res) == K):
        raise DiagnosticsError("trace arrays have mismatched lengths")
    if K == 0:
        raise DiagnosticsError("empty trace")
    d0 = h_norm_sq(mm, X[0] - X_ref, Alpha[0] - Alpha_ref)
    tol = 1e-9 * (1.0 + d0)
    worst = 0.0
    violations = 0
    for k in range(K):
        X_next = X[k + 1] if k + 1 < K else final_X
        A_next = Alpha[k + 1] if k + 1 < K else final_Alpha
        lhs = h_norm_sq(mm, X_next - X_ref, A_next - Alpha_ref)
        dist = h_norm_sq(mm, X[k] - X_ref, Alpha[k] - Alpha_ref)
        descent = h1_norm_sq(mm, X[k] - X_tilde[k], Alpha[k] - Alpha_tilde[k])
        slack = 2.0 * float(np.sum((X_tilde[k] - X_ref) * D_res[k]))
        gap = lhs - (dist - descent + slack)
        if gap > tol:
            violations += 1
            worst = max(worst, gap)
    return CheckReport(n_checked=K, n_violations=violations,
                       worst_violation=worst, tolerance=tol)


def monotone_residual_check(mm: MetricMatrices, X: list, Alpha: list,
                            X_tilde: list, Alpha_tilde: list,
                            D_res: list,
                            rel_slack: float = 1e-12) -> CheckReport:
    """Verify that r_k = ||M(u^k - u~^k)||_H^2 is nonincreasing, where
    M(u - u~) = (x - x~ + Gamma V(alpha - alpha~), alpha - alpha~).

    This monotonicity holds for exact proximal steps only; traces carrying
    nonzero inexactness residuals are rejected.
    """
    K = len(X)
    if K == 0:
        raise DiagnosticsError("empty trace")
    if any(float(np.abs(d).max()) > 0.0 for d in D_res):
        raise DiagnosticsError(
            "residual monotonicity is only guaranteed for exact proximal steps")
    r = np.empty(K)
    for k in range(K):
        dA = Alpha[k] - Alpha_tilde[k]
        dX = X[k] - X_tilde[k] + mm.tau[:, None] * (mm.V @ dA)
        r[k] = h_norm_sq(mm, dX, dA)
    worst = 0.0
    violations = 0
    for k in range(1, K):
        tol = rel_slack * max(r[k - 1], 1.0)
        gap = r[k] - r[k - 1]
        if gap > tol:
            violations += 1
            worst = max(worst, gap)
    return CheckReport(n_checked=K - 1, n_violations=violations,
                       worst_violation=worst, tolerance=rel_slack)


def ergodic_averages(X: list) -> list:
    """Running means bar X^K = (1/(K+1)) sum_{k<=K} X^k, one per iterate."""
    if not X:
        raise DiagnosticsError("empty trace")
    out = []
    acc = np.zeros_like(X[0])
    for k, x in enumerate(X):
        acc = acc + x
        out.append(acc / (k + 1))
    return out


@dataclass
class RateFit:
    """Least-squares fit of a decay model to the tail of a series.

    For ``power`` the model is y_k ~ C * k^exponent (log-log linear);
    for ``geometric`` it is y_k ~ C * rho^k with rho = exp(exponent).
    """

    model: str
    exponent: float
    intercept: float
    r_squared: float
    n_points: int

    @property
    def ratio(self) -> float:
        return float(np.exp(self.exponent))


def rate_fit(values: np.ndarray, model: str = "power",
             tail_fraction: float = 0.5) -> RateFit:
    """Fit the decay rate over the last ``tail_fraction`` of the series.

    Nonpositive entries (exhausted precision) are dropped before fitting;
    the series index is 1-based so the power model is defined at the start.
    """
    if model not in ("power", "geometric"):
        raise DiagnosticsError(f"unknown rate model {model!r}")
    y = np.asarray(values, dtype=float)
    k = np.arange(1, y.size + 1, dtype=float)
    start = int(np.floor(y.size * (1.0 - tail_fraction)))
    y, k = y[start:], k[start:]
    keep = y > 0
    y, k = y[keep], k[keep]
    if y.size < 3:
        raise DiagnosticsError("too few positive points to fit a rate")
    t = np.log(k) if model == "power" else k
    logy = np.log(y)
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, logy, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((logy - pred) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(model=model, exponent=float(coef[0]),
                   intercept=float(coef[1]), r_squared=r2, n_points=y.size)


def running_best(values: np.ndarray) -> np.ndarray:
    """Cumulative minimum; the certified-progress envelope of a residual."""
    return np.minimum.accumulate(np.asarray(values, dtype=float))


def _require_arrays(trace, need_alpha: bool):
    a = trace.arrays
    if a is None or not a.X:
        raise DiagnosticsError("trace was run without state history")
    if need_alpha and not a.Alpha:
        raise DiagnosticsError("trace was run without diagnostic duals")
    return a


def fejer_check_trace(mm: MetricMatrices, trace, X_ref: np.ndarray,
                      Alpha_ref: np.ndarray) -> CheckReport:
    """Run the descent-inequality check directly on a diagnostic trace."""
    a = _require_arrays(trace, need_alpha=True)
    return fejer_check(mm, a.X, a.Alpha, a.X_tilde, a.Alpha_tilde, a.D,
                       X_ref, Alpha_ref, trace.final_X, trace.final_Alpha)


def monotone_residual_check_trace(mm: MetricMatrices, trace,
                                  rel_slack: float = 1e-12) -> CheckReport:
    a = _require_arrays(trace, need_alpha=True)
    return monotone_residual_check(mm, a.X, a.Alpha, a.X_tilde, a.Alpha_tilde,
                                   a.D, rel_slack=rel_slack)


def quasi_fejer_check(mm: MetricMatrices, trace, X_ref: np.ndarray,
                      Alpha_ref: np.ndarray, eps: np.ndarray,
                      rel_slack: float = 1e-9) -> CheckReport:
    """Check ||u+ - u_ref||_H <= ||u - u_ref||_H + mu_bar * eps_k per step."""
    a = _require_arrays(trace, need_alpha=True)
    K = len(a.X)
    if len(eps) < K:
        raise DiagnosticsError("need one tolerance per recorded iteration")
    mu = mu_bar(mm)
    worst = 0.0
    violations = 0
    for k in range(K):
        X_next = a.X[k + 1] if k + 1 < K else trace.final_X
        A_next = a.Alpha[k + 1] if k + 1 < K else trace.final_Alpha
        lhs = np.sqrt(h_norm_sq(mm, X_next - X_ref, A_next - Alpha_ref))
        rhs = np.sqrt(h_norm_sq(mm, a.X[k] - X_ref, a.Alpha[k] - Alpha_ref)) \
            + mu * float(eps[k])
        tol = rel_slack * (1.0 + rhs)
        gap = lhs - rhs
        if gap > tol:
            violations += 1
            worst = max(worst, gap)
    return CheckReport(n_checked=K, n_violations=violations,
                       worst_violation=worst, tolerance=rel_slack)


def kkt_residual_series(mm: MetricMatrices, trace) -> np.ndarray:
    """Per-iteration saddle-point residuals over a diagnostic trace."""
    a = _require_arrays(trace, need_alpha=True)
    if not a.grad_X_tilde:
        raise DiagnosticsError("trace lacks predictor gradients")
    out = np.empty(len(a.X))
    for k in range(len(a.X)):
        out[k] = kkt_residual(mm, a.X[k], a.X_tilde[k], a.Alpha[k],
                              a.Alpha_tilde[k], a.grad_X[k],
                              a.grad_X_tilde[k], a.D[k])
    return out


def h_dist_series(mm: MetricMatrices, trace, X_ref: np.ndarray,
                  Alpha_ref: np.ndarray) -> np.ndarray:
    """||u^k - u_ref||_H along a diagnostic trace (pre-step states)."""
    a = _require_arrays(trace, need_alpha=True)
    return np.array([np.sqrt(h_norm_sq(mm, X - X_ref, A - Alpha_ref))
                     for X, A in zip(a.X, a.Alpha)])


def inexactness_ratios(trace) -> np.ndarray:
    """Series of ||d^k|| / ||x^{k+1} - x^k|| over a trace with history."""
    a = _require_arrays(trace, need_alpha=False)
    K = len(a.X)
    out = np.empty(K)
    for k in range(K):
        X_next = a.X[k + 1] if k + 1 < K else trace.final_X
        step = float(np.linalg.norm(X_next - a.X[k]))
        out[k] = inexactness_ratio(float(np.linalg.norm(a.D[k])), step)
    return out


def inexactness_ratio(d_norm: float, step_norm: float) -> float:
    """||d|| relative to the predictor step length; 0/0 is defined as 0."""
    if d_norm < 0 or step_norm < 0:
        raise DiagnosticsError("norms must be nonnegative")
    if step_norm == 0.0:
        return 0.0 if d_norm == 0.0 else float("inf")
    return d_norm / step_norm
