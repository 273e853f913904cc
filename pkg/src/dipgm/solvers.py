"""Decentralized solvers: the inexact proximal gradient method with a
primal correction step, plus PG-EXTRA and NIDS baselines.

All algorithms operate on stacked iterates X (N x n) and consume exactly
one neighbor-exchange round per iteration; only the exchanged payload
differs between them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .inner import ToleranceSchedule, cv_prox_solve, tolerance
from .model import AgentShard, SmoothLoss, local_value_grad
from .prox import ProxResult, RegKind, Regularizer, prox_l1, prox_l2norm
from .topology import MixingMatrix


class SolverError(RuntimeError):
    pass


class Algorithm(str, Enum):
    DIPGM = "dipgm"
    PG_EXTRA = "pg_extra"
    NIDS = "nids"


@dataclass
class AgentProblem:
    """One agent's smooth loss oracle and nonsmooth regularizer."""

    loss: SmoothLoss
    shard: AgentShard
    reg: Regularizer
    L: float

    def grad(self, x: np.ndarray) -> np.ndarray:
        return local_value_grad(self.loss, self.shard, x)[1]

    def value(self, x: np.ndarray) -> float:
        return local_value_grad(self.loss, self.shard, x)[0]


@dataclass
class StepSizes:
    """Per-agent primal stepsizes tau_i and the dual stepsize beta."""

    tau: np.ndarray
    beta: float

    def __post_init__(self):
        self.tau = np.atleast_1d(np.asarray(self.tau, dtype=float))

    @property
    def tau_max(self) -> float:
        return float(self.tau.max())


def stepsizes_from_bounds(L: np.ndarray, tau_frac: float = 1.99,
                          tau_beta: float = 0.5,
                          shared_tau: bool = False) -> StepSizes:
    """tau_i = tau_frac / L_i and beta = tau_beta / max_i tau_i."""
    L = np.asarray(L, dtype=float)
    tau = np.full_like(L, tau_frac / L.max()) if shared_tau else tau_frac / L
    return StepSizes(tau=tau, beta=tau_beta / tau.max())


@dataclass
class StepSizeViolation:
    name: str
    detail: str


def validate_stepsizes(algorithm: Algorithm, L: np.ndarray, sizes: StepSizes,
                       mixing: MixingMatrix) -> list:
    """Check the algorithm's stepsize condition; returns violations (empty = ok)."""
    L = np.asarray(L, dtype=float)
    tau, beta = sizes.tau, sizes.beta
    if np.any(tau <= 0) or beta <= 0:
        raise SolverError("stepsizes must be positive")
    violations = []
    if algorithm == Algorithm.PG_EXTRA:
        if not np.allclose(tau, tau[0]):
            violations.append(StepSizeViolation(
                "shared_tau", "PG-EXTRA requires a single shared tau"))
        bound = (1.0 + mixing.sigma_min_W) / L.max()
        if not tau[0] < bound:
            violations.append(StepSizeViolation(
                "tau_bound", f"tau={tau[0]:.6g} not < (1+sigma_m(W))/L_F={bound:.6g}"))
        return violations
    # network-independent condition shared by the other two
    bad = np.where(tau >= 2.0 / L)[0]
    for i in bad:
        violations.append(StepSizeViolation(
            "tau_bound", f"agent {i}: tau={tau[i]:.6g} not < 2/L_i={2.0 / L[i]:.6g}"))
    if beta > 0.5 / sizes.tau_max + 1e-15:
        violations.append(StepSizeViolation(
            "beta_bound", f"beta={beta:.6g} not <= 0.5/max tau={0.5 / sizes.tau_max:.6g}"))
    return violations


@dataclass
class SolverState:
    X: np.ndarray
    Lambda: np.ndarray
    k: int = 0
    Alpha: np.ndarray | None = None       # diagnostic duals, Lambda = V @ Alpha
    X_prev: np.ndarray | None = None      # for step-dependent schedules
    X_tilde_prev: np.ndarray | None = None
    grad: np.ndarray | None = None        # grad F at X, lazily filled
    grad_prev: np.ndarray | None = None   # NIDS cache: grad F at previous X
    inner_duals: list = field(default_factory=list)  # per-agent warm dual


def initial_state(n_agents: int, n_features: int, x0: np.ndarray | None = None,
                  diagnostic: bool = False) -> SolverState:
    """Zero duals per the algorithm's initialization; x0 defaults to zero."""
    if x0 is None:
        X = np.zeros((n_agents, n_features))
    else:
        X = np.array(x0, dtype=float)
        if X.shape != (n_agents, n_features):
            raise SolverError(f"x0 has shape {X.shape}")
    return SolverState(
        X=X,
        Lambda=np.zeros((n_agents, n_features)),
        Alpha=np.zeros((n_agents, n_features)) if diagnostic else None,
        inner_duals=[None] * n_agents,
    )


@dataclass
class IterationRecord:
    k: int
    relative_error: float
    consensus_error: float
    kkt_residual: float
    d_norms: np.ndarray
    inner_iterations: int
    wall_time: float
    h_dist: float = float("nan")


@dataclass
class TraceArrays:
    """Per-iteration state history used by the convergence diagnostics."""

    X: list = field(default_factory=list)
    Alpha: list = field(default_factory=list)
    X_tilde: list = field(default_factory=list)
    Alpha_tilde: list = field(default_factory=list)
    D: list = field(default_factory=list)
    grad_X: list = field(default_factory=list)
    grad_X_tilde: list = field(default_factory=list)


@dataclass
class Trace:
    algorithm: Algorithm
    records: list = field(default_factory=list)
    arrays: TraceArrays | None = None
    diverged: bool = False
    reached_target: bool = False
    final_X: np.ndarray | None = None
    final_Alpha: np.ndarray | None = None

    @property
    def total_inner_iterations(self) -> int:
        return int(sum(r.inner_iterations for r in self.records))

    @property
    def outer_iterations(self) -> int:
        return self.records[-1].k if self.records else 0

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def _grad_stack(problems: list, X: np.ndarray) -> np.ndarray:
    return np.stack([p.grad(X[i]) for i, p in enumerate(problems)])


def _agent_prox(problem: AgentProblem, s: np.ndarray, tau: float, tol: float,
                warm_dual: np.ndarray | None, inner_opts: dict) -> ProxResult:
    reg = problem.reg
    theta = tau * reg.nu1
    if reg.kind == RegKind.L1:
        point = prox_l1(s, theta)
        return ProxResult(point=point, residual_bound=0.0, inner_iterations=0,
                          residual=np.zeros_like(point))
    if reg.kind == RegKind.L2NORM:
        point = prox_l2norm(s, theta)
        return ProxResult(point=point, residual_bound=0.0, inner_iterations=0,
                          residual=np.zeros_like(point))
    return cv_prox_solve(
        reg.D, s, theta,
        warm_start=inner_opts.get("warm_start_point"),
        tol=tol,
        t1=inner_opts.get("t1"), t2=inner_opts.get("t2"),
        max_iters=inner_opts.get("max_iters", 100_000),
        warm_dual=warm_dual)


def _prox_row(problems, X, Lambda, grads, tau, tols, state, inner_opts):
    """Run every agent's (in)exact proximal step; returns X~, d, d-norms, inner count.

    The inner primal always warm starts at the agent's current outer
    iterate; the inner dual restarts at zero unless warm_start_dual is set.
    """
    n_agents = len(problems)
    X_tilde = np.empty_like(X)
    D_res = np.zeros_like(X)
    d_norms = np.zeros(n_agents)
    inner_total = 0
    for i, p in enumerate(problems):
        s = X[i] - tau[i] * (grads[i] - Lambda[i])
        opts = dict(inner_opts)
        opts["warm_start_point"] = X[i]
        warm_dual = state.inner_duals[i] if inner_opts.get("warm_start_dual", False) else None
        res = _agent_prox(p, s, tau[i], tols[i], warm_dual, opts)
        X_tilde[i] = res.point
        if res.residual is not None:
            # inclusion residual scaled to the outer criterion: d is the
            # subgradient residual of tau*g + quadratic, divided by tau
            D_res[i] = res.residual / tau[i] if p.reg.kind == RegKind.GENERALIZED_LASSO else res.residual
        d_norms[i] = res.residual_bound / tau[i] if p.reg.kind == RegKind.GENERALIZED_LASSO else res.residual_bound
        if res.dual is not None:
            state.inner_duals[i] = res.dual
        inner_total += res.inner_iterations
    return X_tilde, D_res, d_norms, inner_total


def _schedule_tols(schedule, k, state, n_agents):
    """Per-agent inner tolerances for outer iteration k (1-based)."""
    if schedule is None:
        return np.full(n_agents, 1e-10)
    if schedule.step_dependent:
        if state.X_prev is None:
            # first outer step has no predecessor; fall back to eps0/k
            prev = np.ones(n_agents)
        else:
            prev = np.linalg.norm(state.X - state.X_prev, axis=1)
        return np.array([tolerance(schedule, k, prev[i]) for i in range(n_agents)])
    val = tolerance(schedule, k)
    return np.full(n_agents, val)


def dipgm_step(state: SolverState, problems: list, mixing: MixingMatrix,
               sizes: StepSizes, schedule: ToleranceSchedule | None = None,
               inner_opts: dict | None = None):
    """One outer iteration: inexact prox, one exchange of X~, dual update,
    and the local primal correction."""
    inner_opts = inner_opts or {}
    tau, beta = sizes.tau, sizes.beta
    W = mixing.W
    if state.grad is None:
        state.grad = _grad_stack(problems, state.X)
    k = state.k + 1
    tols = _schedule_tols(schedule, k, state, len(problems))

    X_tilde, D_res, d_norms, inner_total = _prox_row(
        problems, state.X, state.Lambda, state.grad, tau, tols, state, inner_opts)

    mixed = W @ X_tilde                       # the single communication round
    disagreement = X_tilde - mixed            # (I - W) X~
    Lambda_new = state.Lambda - beta * disagreement
    # correction x^{k+1} = x~ - Gamma (lambda^k - lambda^{k+1})
    X_new = X_tilde - tau[:, None] * beta * disagreement

    Alpha_tilde = None
    if state.Alpha is not None:
        Alpha_tilde = state.Alpha - beta * (mixing.V @ X_tilde)

    new = SolverState(
        X=X_new, Lambda=Lambda_new, k=k,
        Alpha=Alpha_tilde,
        X_prev=state.X, X_tilde_prev=X_tilde,
        inner_duals=state.inner_duals,
    )
    info = dict(X_tilde=X_tilde, Alpha_tilde=Alpha_tilde, D=D_res,
                d_norms=d_norms, inner_iterations=inner_total,
                grad_X=state.grad)
    return new, info


def dipgm_alpha_step(state: SolverState, problems: list, mixing: MixingMatrix,
                     sizes: StepSizes):
    """Exact-prox transition in (x, alpha) coordinates.

    Uses V explicitly; with zero initial duals its X-sequence coincides
    with dipgm_step's. Exposes the predictor pair for diagnostics.
    """
    if state.Alpha is None:
        raise SolverError("alpha-form step needs diagnostic duals")
    tau, beta = sizes.tau, sizes.beta
    V = mixing.V
    if state.grad is None:
        state.grad = _grad_stack(problems, state.X)
    Lambda = V @ state.Alpha
    tols = np.full(len(problems), 1e-14)
    X_tilde, D_res, d_norms, inner_total = _prox_row(
        problems, state.X, Lambda, state.grad, tau, tols, state, {})
    Alpha_tilde = state.Alpha - beta * (V @ X_tilde)
    # u^{k+1} = u - M (u - u~) with M = [[I, Gamma V], [0, I]]
    X_new = X_tilde - tau[:, None] * (V @ (state.Alpha - Alpha_tilde))
    new = SolverState(X=X_new, Lambda=V @ Alpha_tilde, k=state.k + 1,
                      Alpha=Alpha_tilde, X_prev=state.X, X_tilde_prev=X_tilde,
                      inner_duals=state.inner_duals)
    info = dict(X_tilde=X_tilde, Alpha_tilde=Alpha_tilde, D=D_res,
                d_norms=d_norms, inner_iterations=inner_total,
                grad_X=state.grad)
    return new, info


def pgextra_step(state: SolverState, problems: list, mixing: MixingMatrix,
                 sizes: StepSizes, schedule: ToleranceSchedule | None = None,
                 inner_opts: dict | None = None):
    """Primal-dual update: prox step, then one exchange of 2x^{k+1} - x^k."""
    inner_opts = inner_opts or {}
    tau = sizes.tau
    if not np.allclose(tau, tau[0]):
        raise SolverError("PG-EXTRA needs a shared tau")
    t = tau[0]
    W = mixing.W
    if state.grad is None:
        state.grad = _grad_stack(problems, state.X)
    k = state.k + 1
    tols = _schedule_tols(schedule, k, state, len(problems))
    X_new, D_res, d_norms, inner_total = _prox_row(
        problems, state.X, state.Lambda, state.grad, tau, tols, state, inner_opts)
    payload = 2.0 * X_new - state.X
    Lambda_new = state.Lambda - (payload - W @ payload) / (2.0 * t)
    Alpha_tilde = None
    if state.Alpha is not None:
        Alpha_tilde = state.Alpha - (mixing.V @ payload) / (2.0 * t)
    new = SolverState(X=X_new, Lambda=Lambda_new, k=k, Alpha=Alpha_tilde,
                      X_prev=state.X, X_tilde_prev=X_new,
                      inner_duals=state.inner_duals)
    info = dict(X_tilde=X_new, Alpha_tilde=Alpha_tilde, D=D_res,
                d_norms=d_norms, inner_iterations=inner_total,
                grad_X=state.grad)
    return new, info


def nids_step(state: SolverState, problems: list, mixing: MixingMatrix,
              sizes: StepSizes, schedule: ToleranceSchedule | None = None,
              inner_opts: dict | None = None):
    """Prox step, then one exchange of the gradient-corrected combination
    2x^{k+1} - x^k + Gamma(grad F(x^k) - grad F(x^{k+1}))."""
    inner_opts = inner_opts or {}
    tau, beta = sizes.tau, sizes.beta
    W = mixing.W
    if state.grad is None:
        state.grad = _grad_stack(problems, state.X)
    k = state.k + 1
    tols = _schedule_tols(schedule, k, state, len(problems))
    X_new, D_res, d_norms, inner_total = _prox_row(
        problems, state.X, state.Lambda, state.grad, tau, tols, state, inner_opts)
    grad_new = _grad_stack(problems, X_new)
    payload = 2.0 * X_new - state.X + tau[:, None] * (state.grad - grad_new)
    Lambda_new = state.Lambda - beta * (payload - W @ payload)
    Alpha_tilde = None
    if state.Alpha is not None:
        Alpha_tilde = state.Alpha - beta * (mixing.V @ payload)
    new = SolverState(X=X_new, Lambda=Lambda_new, k=k, Alpha=Alpha_tilde,
                      X_prev=state.X, X_tilde_prev=X_new,
                      grad=grad_new, grad_prev=state.grad,
                      inner_duals=state.inner_duals)
    info = dict(X_tilde=X_new, Alpha_tilde=Alpha_tilde, D=D_res,
                d_norms=d_norms, inner_iterations=inner_total,
                grad_X=state.grad)
    return new, info


def _exact_prox_stack(problems, S, tau):
    out = np.empty_like(S)
    for i, p in enumerate(problems):
        theta = tau[i] * p.reg.nu1
        if p.reg.kind == RegKind.L1:
            out[i] = prox_l1(S[i], theta)
        elif p.reg.kind == RegKind.L2NORM:
            out[i] = prox_l2norm(S[i], theta)
        else:
            out[i] = cv_prox_solve(p.reg.D, S[i], theta, tol=1e-13).point
    return out


def run_pgextra_eliminated(problems: list, mixing: MixingMatrix, tau: float,
                           x0: np.ndarray, n_iters: int) -> list:
    """Dual-free transcription of PG-EXTRA; cross-check for the primal-dual form."""
    taus = np.full(len(problems), tau)
    X = np.array(x0, dtype=float)
    G = _grad_stack(problems, X)
    S = X - tau * G
    out = []
    for _ in range(n_iters):
        X_new = _exact_prox_stack(problems, S, taus)
        G_new = _grad_stack(problems, X_new)
        S = S - X_new + mixing.W_tilde @ (2.0 * X_new - X) + tau * (G - G_new)
        X, G = X_new, G_new
        out.append(X.copy())
    return out


def run_nids_eliminated(problems: list, mixing: MixingMatrix, tau: float,
                        x0: np.ndarray, n_iters: int) -> list:
    """Dual-free transcription of NIDS (gradient correction inside the mixing)."""
    taus = np.full(len(problems), tau)
    X = np.array(x0, dtype=float)
    G = _grad_stack(problems, X)
    S = X - tau * G
    out = []
    for _ in range(n_iters):
        X_new = _exact_prox_stack(problems, S, taus)
        G_new = _grad_stack(problems, X_new)
        S = S - X_new + mixing.W_tilde @ (2.0 * X_new - X + tau * (G - G_new))
        X, G = X_new, G_new
        out.append(X.copy())
    return out


def centralized_proximal_gradient(problem: AgentProblem, tau: float,
                                  x0: np.ndarray, n_iters: int) -> list:
    """Plain proximal gradient; the single-agent limit of all three algorithms."""
    x = np.array(x0, dtype=float)
    out = []
    for _ in range(n_iters):
        s = x - tau * problem.grad(x)
        theta = tau * problem.reg.nu1
        if problem.reg.kind == RegKind.L1:
            x = prox_l1(s, theta)
        elif problem.reg.kind == RegKind.L2NORM:
            x = prox_l2norm(s, theta)
        else:
            x = cv_prox_solve(problem.reg.D, s, theta, tol=1e-13).point
        out.append(x.copy())
    return out


_STEP_FUNCS = {
    Algorithm.DIPGM: dipgm_step,
    Algorithm.PG_EXTRA: pgextra_step,
    Algorithm.NIDS: nids_step,
}


@dataclass
class StopRule:
    max_iters: int
    rel_err_target: float | None = None
    reference: np.ndarray | None = None  # centralized solution x*
    divergence_threshold: float = 1e8


def relative_error(X: np.ndarray, x_ref: np.ndarray) -> float:
    ref = np.tile(np.asarray(x_ref, dtype=float), (X.shape[0], 1))
    denom = float(np.linalg.norm(ref))
    if denom == 0:
        raise SolverError("zero reference solution")
    return float(np.linalg.norm(X - ref)) / denom


def run(algorithm: Algorithm, problems: list, mixing: MixingMatrix,
        sizes: StepSizes, schedule: ToleranceSchedule | None,
        stop: StopRule, x0: np.ndarray | None = None,
        diagnostic: bool = False, keep_arrays: bool = False,
        inner_opts: dict | None = None,
        allow_invalid_stepsizes: bool = False) -> Trace:
    """Drive an algorithm to its stop rule and collect the iteration trace.

    Deterministic for a fixed configuration; the only nondeterministic
    record field is wall_time.
    """
    L = np.array([p.L for p in problems])
    violations = validate_stepsizes(algorithm, L, sizes, mixing)
    if violations and not allow_invalid_stepsizes:
        raise SolverError("; ".join(v.detail for v in violations))
    n = problems[0].shard.A.shape[1]
    state = initial_state(len(problems), n, x0, diagnostic=diagnostic)
    step = _STEP_FUNCS[algorithm]
    trace = Trace(algorithm=algorithm,
                  arrays=TraceArrays() if keep_arrays else None)

    def record(state, info, t0):
        rel = (relative_error(state.X, stop.reference)
               if stop.reference is not None else float("nan"))
        cons = float(np.linalg.norm(mixing.V @ state.X))
        rec = IterationRecord(
            k=state.k, relative_error=rel, consensus_error=cons,
            kkt_residual=float("nan"),
            d_norms=info["d_norms"] if info else np.zeros(len(problems)),
            inner_iterations=info["inner_iterations"] if info else 0,
            wall_time=time.perf_counter() - t0)
        trace.records.append(rec)
        return rel

    t0 = time.perf_counter()
    rel = record(state, None, t0)  # initial record at k = 0
    if stop.reference is not None and stop.rel_err_target is not None \
            and rel <= stop.rel_err_target:
        trace.reached_target = True
    for _ in range(stop.max_iters):
        if trace.reached_target or trace.diverged:
            break
        alpha_pre = None if state.Alpha is None else state.Alpha
        state, info = step(state, problems, mixing, sizes,
                           schedule=schedule, inner_opts=inner_opts or {})
        rel = record(state, info, t0)
        if keep_arrays:
            a = trace.arrays
            a.X.append(state.X_prev)
            a.X_tilde.append(info["X_tilde"])
            a.D.append(info["D"])
            a.grad_X.append(info["grad_X"])
            if diagnostic:
                a.Alpha.append(alpha_pre)
                a.Alpha_tilde.append(info["Alpha_tilde"])
                a.grad_X_tilde.append(_grad_stack(problems, info["X_tilde"]))
        if stop.reference is not None:
            if stop.rel_err_target is not None and rel <= stop.rel_err_target:
                trace.reached_target = True
            if rel > stop.divergence_threshold or not np.isfinite(rel):
                trace.diverged = True
    trace.final_X = state.X
    trace.final_Alpha = state.Alpha
    return trace
