"""Primal-dual inner solver for the prox of theta*||Dx||_1, plus
the outer-iteration tolerance schedules."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .prox import ProxResult, prox_l1

EPS_FLOOR = 1e-15


class InnerError(RuntimeError):
    pass


def default_stepsizes(D: np.ndarray) -> tuple:
    """t2 = 1 and t1 = 0.9/(1/2 + ||D^T D||), satisfying the strict
    condition t1/2 + t1*t2*||D^T D|| < 1."""
    gram_norm = float(np.linalg.norm(D, 2)) ** 2
    t2 = 1.0
    t1 = 0.9 / (0.5 + t2 * gram_norm) if gram_norm > 0 else 0.9 / 0.5
    return t1, t2


def check_inner_stepsizes(D: np.ndarray, t1: float, t2: float) -> None:
    gram_norm = float(np.linalg.norm(D, 2)) ** 2
    if not (t1 > 0 and t2 > 0):
        raise InnerError("inner stepsizes must be positive")
    if t1 / 2 + t1 * t2 * gram_norm >= 1.0:
        raise InnerError(
            f"inner stepsize condition violated: {t1 / 2 + t1 * t2 * gram_norm:.6g} >= 1")


def _l1_residual_vector(x: np.ndarray, s: np.ndarray, D: np.ndarray,
                        theta: float, w_hint: np.ndarray,
                        kink_tol: float = 1e-10) -> np.ndarray:
    """An admissible residual d in theta*D^T sub||.||_1(Dx) + (x - s).

    On coordinates where Dx sits at a kink the subgradient is chosen from
    [-theta, theta], seeded by the dual iterate; elsewhere it is the sign.
    """
    z = D @ x
    xi = np.where(np.abs(z) > kink_tol,
                  theta * np.sign(z),
                  np.clip(w_hint, -theta, theta))
    return x - s + D.T @ xi


def cv_prox_solve(D: np.ndarray, s: np.ndarray, theta: float,
                  warm_start: np.ndarray | None = None,
                  tol: float = 1e-10,
                  t1: float | None = None, t2: float | None = None,
                  max_iters: int = 100_000,
                  warm_dual: np.ndarray | None = None) -> ProxResult:
    """Approximate argmin_x theta*||Dx||_1 + ||x - s||^2/2.

    Iterates the primal-dual recursion until both the primal and the dual
    step norms drop to ``tol`` (primal alone can stall at zero for one
    iteration when the start point equals s with a cold dual). The
    returned residual bound is the norm of a concretely constructed
    admissible subgradient residual at the final point, which always
    upper-bounds the minimal one. ``warm_start`` seeds the primal iterate
    (defaults to s); ``warm_dual`` seeds the dual (defaults to 0).
    """
    if tol <= 0:
        raise InnerError("tol must be positive")
    D = np.asarray(D, dtype=float)
    s = np.asarray(s, dtype=float)
    if theta < 0:
        raise InnerError("theta must be nonnegative")
    m, n = D.shape
    if s.shape != (n,):
        raise InnerError(f"s has shape {s.shape}, expected ({n},)")
    op_norm = float(np.linalg.norm(D, 2)) if D.size else 0.0
    if theta == 0.0 or op_norm == 0.0:
        # objective reduces to the quadratic; s is the exact minimizer
        return ProxResult(point=s.copy(), residual_bound=0.0,
                          inner_iterations=0, residual=np.zeros(n),
                          dual=np.zeros(m))
    if t1 is None or t2 is None:
        t1_def, t2_def = default_stepsizes(D)
        t1 = t1_def if t1 is None else t1
        t2 = t2_def if t2 is None else t2
    check_inner_stepsizes(D, t1, t2)

    x = s.copy() if warm_start is None else np.asarray(warm_start, dtype=float).copy()
    w = np.zeros(m) if warm_dual is None else np.asarray(warm_dual, dtype=float).copy()
    step_norm = np.inf
    for it in range(1, max_iters + 1):
        x_new = x - t1 * (x - s + D.T @ w)
        v = w + t2 * (D @ (2.0 * x_new - x))
        w_new = v - t2 * prox_l1(v / t2, theta / t2)
        step_norm = max(float(np.linalg.norm(x_new - x)),
                        float(np.linalg.norm(w_new - w)))
        x, w = x_new, w_new
        if step_norm <= tol:
            d = _l1_residual_vector(x, s, D, theta, w)
            return ProxResult(point=x, residual_bound=float(np.linalg.norm(d)),
                              inner_iterations=it, residual=d, dual=w)
    raise InnerError(
        f"inner solver hit {max_iters} iterations (last step {step_norm:.3g}, tol {tol:.3g})")


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    INV_K_SQUARED = "inv_k_squared"
    LOG_K_OVER_K_SQUARED = "log_k_over_k_squared"
    STEP_OVER_K = "step_over_k"
    STEP_OVER_LN_K = "step_over_ln_k"


SUMMABLE_KINDS = frozenset(
    {ScheduleKind.CONSTANT, ScheduleKind.INV_K_SQUARED,
     ScheduleKind.LOG_K_OVER_K_SQUARED})


@dataclass(frozen=True)
class ToleranceSchedule:
    """Inner tolerance eps_k as a function of the outer iteration.

    The log-based rules use ln(k+1) so that k = 1 is well defined.
    """

    kind: ScheduleKind
    eps0: float

    def __post_init__(self):
        if self.eps0 <= 0:
            raise InnerError("eps0 must be positive")

    @property
    def step_dependent(self) -> bool:
        return self.kind in (ScheduleKind.STEP_OVER_K, ScheduleKind.STEP_OVER_LN_K)


def tolerance(schedule: ToleranceSchedule, k: int, prev_step_norm: float = 0.0) -> float:
    """Evaluate eps_k; results are clamped below at the 1e-15 floor."""
    if k < 1:
        raise InnerError("outer iteration index must be >= 1")
    if prev_step_norm < 0:
        raise InnerError("prev_step_norm must be nonnegative")
    e0 = schedule.eps0
    if schedule.kind == ScheduleKind.CONSTANT:
        val = e0
    elif schedule.kind == ScheduleKind.INV_K_SQUARED:
        val = e0 / k ** 2
    elif schedule.kind == ScheduleKind.LOG_K_OVER_K_SQUARED:
        val = e0 * np.log(k + 1.0) / k ** 2
    elif schedule.kind == ScheduleKind.STEP_OVER_K:
        val = e0 * prev_step_norm / k
    else:
        val = e0 * prev_step_norm / np.log(k + 1.0)
    return max(float(val), EPS_FLOOR)
