"""Regularizers, closed-form proximal mappings, and residual certificates."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class ProxError(ValueError):
    pass


class RegKind(str, Enum):
    L1 = "l1"
    L2NORM = "l2norm"
    GENERALIZED_LASSO = "generalized_lasso"


@dataclass
class Regularizer:
    """g_i(x): nu1*||x||_1, nu1*||x||, or nu1*||D x||_1."""

    kind: RegKind
    nu1: float
    D: np.ndarray | None = None

    def __post_init__(self):
        if self.nu1 < 0:
            raise ProxError("nu1 must be nonnegative")
        if self.kind == RegKind.GENERALIZED_LASSO:
            if self.D is None:
                raise ProxError("generalized lasso needs a D matrix")
            self.D = np.asarray(self.D, dtype=float)
            if not np.all(np.isfinite(self.D)):
                raise ProxError("D must be finite")
        elif self.D is not None:
            raise ProxError(f"{self.kind} takes no D matrix")

    def value(self, x: np.ndarray) -> float:
        if self.kind == RegKind.L1:
            return self.nu1 * float(np.abs(x).sum())
        if self.kind == RegKind.L2NORM:
            return self.nu1 * float(np.linalg.norm(x))
        return self.nu1 * float(np.abs(self.D @ x).sum())

    @property
    def has_closed_form(self) -> bool:
        return self.kind != RegKind.GENERALIZED_LASSO


@dataclass
class ProxResult:
    """(In)exact proximal step with a certified residual bound.

    ``residual_bound`` upper-bounds the norm of an admissible subgradient
    residual d at ``point``; it is 0 for closed-form mappings.
    ``residual`` is the concrete residual vector when one is available.
    """

    point: np.ndarray
    residual_bound: float
    inner_iterations: int = 0
    residual: np.ndarray | None = None
    dual: np.ndarray | None = None  # inner dual iterate, for warm starts

    def __post_init__(self):
        if self.residual_bound < 0:
            raise ProxError("residual bound must be nonnegative")


def prox_l1(s: np.ndarray, theta: float) -> np.ndarray:
    """Componentwise soft threshold."""
    if theta < 0:
        raise ProxError("negative threshold")
    s = np.asarray(s, dtype=float)
    return np.sign(s) * np.maximum(np.abs(s) - theta, 0.0)


def prox_l2norm(s: np.ndarray, theta: float) -> np.ndarray:
    """Block soft threshold: (1 - theta/max(||s||, theta)) s."""
    if theta < 0:
        raise ProxError("negative threshold")
    s = np.asarray(s, dtype=float)
    nrm = float(np.linalg.norm(s))
    if theta == 0.0:
        return s.copy()
    return (1.0 - theta / max(nrm, theta)) * s


def subgradient_interval_l1(x: np.ndarray, weight: float, kink_tol: float = 1e-10):
    """Per-coordinate [lo, hi] bounds of weight * subdifferential of ||.||_1."""
    x = np.asarray(x, dtype=float)
    lo = np.where(x > kink_tol, weight, -weight)
    hi = np.where(x < -kink_tol, -weight, weight)
    return lo, hi


def l1_prox_residual(x_tilde: np.ndarray, s: np.ndarray, theta: float,
                     kink_tol: float = 1e-10) -> float:
    """Norm of the minimal residual in theta*sub||.||_1(x~) + (x~ - s)."""
    lo, hi = subgradient_interval_l1(x_tilde, theta, kink_tol)
    target = np.asarray(s, dtype=float) - np.asarray(x_tilde, dtype=float)
    # residual is distance from target to the subgradient box, per coordinate
    d = np.maximum(lo - target, 0.0) + np.maximum(target - hi, 0.0)
    return float(np.linalg.norm(d))


def exact_residual(reg: Regularizer, x_tilde: np.ndarray, x: np.ndarray,
                   grad: np.ndarray, lam: np.ndarray, tau: float,
                   prox_result: ProxResult | None = None) -> float:
    """Certified bound on ||d|| for the primal-update optimality inclusion.

    For closed-form regularizers the exact prox admits d = 0; the returned
    value then measures only how far ``x_tilde`` drifted from that exact
    output (0 when it is the genuine prox point). For the generalized
    lasso the inner solver's certificate is passed through.
    """
    x_tilde = np.asarray(x_tilde, dtype=float)
    for arr in (x, grad, lam):
        if np.asarray(arr).shape != x_tilde.shape:
            raise ProxError("dimension mismatch")
    if reg.kind == RegKind.GENERALIZED_LASSO:
        if prox_result is None:
            raise ProxError("generalized lasso residual needs the inner ProxResult")
        return prox_result.residual_bound
    s = x - tau * (grad - lam)
    if reg.kind == RegKind.L1:
        return l1_prox_residual(x_tilde, s, tau * reg.nu1) / tau
    exact = prox_l2norm(s, tau * reg.nu1)
    # prox is nonexpansive, so the optimality residual grows at most by
    # the drift over tau
    return float(np.linalg.norm(x_tilde - exact)) * 2.0 / tau
