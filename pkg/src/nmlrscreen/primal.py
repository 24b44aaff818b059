"""Proximal-gradient oracle for the nuclear-norm regularized regression

    minimize_B  0.5 * ||Y - X B||_F^2 + lam * ||B||_*

plus the KKT and duality-gap diagnostics shared with the dual solver.
The oracle is deliberately independent of the ADMM code path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, nuclear_norm, spectral_norm, svt

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PgConfig:
    max_iter: int = 20000
    tol: float = 1e-10
    use_acceleration: bool = True
    step_tol: float = 1e-9

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class PrimalSolution:
    B: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: list[float]


@dataclass(frozen=True)
class KktReport:
    dual_norm_excess: float
    subgradient_alignment_gap: float
    residual_feasibility: float

    def max(self) -> float:
        return max(self.dual_norm_excess, self.subgradient_alignment_gap,
                   self.residual_feasibility)


def _check_dims(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")


def primal_objective(X, Y, B, lam: float) -> float:
    R = Y - X @ B
    return 0.5 * float(np.sum(R * R)) + lam * nuclear_norm(B)


def dual_objective(Y, C, lam: float) -> float:
    """Normalized-scale dual objective; its negative lower-bounds the primal."""
    D = C - Y / lam
    return 0.5 * lam**2 * float(np.sum(D * D)) - 0.5 * float(np.sum(Y * Y))


def duality_gap(X, Y, B, C, lam: float) -> float:
    """``primal(B) + dual(C)``; zero at an optimal pair, >= 0 for feasible C."""
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    return primal_objective(X, Y, B, lam) + dual_objective(Y, C, lam)


def dual_certificate(X, Y, B, lam: float) -> np.ndarray:
    """Dual point ``(Y - X B) / lam`` implied by a primal solution."""
    return (Y - X @ B) / lam


def kkt_residuals(X, Y, B, C, lam: float) -> KktReport:
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    B, C = as_matrix(B, "B"), as_matrix(C, "C")
    _check_dims(X, Y)
    if B.shape != (X.shape[1], Y.shape[1]):
        raise ValueError(f"B has shape {B.shape}, expected {(X.shape[1], Y.shape[1])}")
    if C.shape != Y.shape:
        raise ValueError(f"C has shape {C.shape}, expected {Y.shape}")
    XtC = X.T @ C
    return KktReport(
        dual_norm_excess=max(0.0, spectral_norm(XtC) - 1.0),
        subgradient_alignment_gap=abs(float(np.sum(XtC * B)) - nuclear_norm(B)),
        residual_feasibility=float(np.linalg.norm(Y - X @ B - lam * C)),
    )


def solve_primal_full(X, Y, lam: float, config: PgConfig | None = None,
                      B0=None) -> PrimalSolution:
    """Proximal gradient (FISTA when accelerated) with step ``1/||X||_2^2``.

    ``B0`` is an optional warm start. Momentum is reset whenever the
    objective goes up. Stops once the relative objective change stays below
    ``config.tol`` for two iterations and the last step moved B by less than
    ``config.step_tol`` (relative).
    """
    config = config or PgConfig()
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    _check_dims(X, Y)
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    p, q = X.shape[1], Y.shape[1]

    L = spectral_norm(X) ** 2
    if L == 0:
        B = np.zeros((p, q))
        return PrimalSolution(B, primal_objective(X, Y, B, lam), 0, True, [])
    step = 1.0 / L
    XtX = X.T @ X
    XtY = X.T @ Y

    B = np.zeros((p, q)) if B0 is None else as_matrix(B0, "B0").copy()
    W = B.copy()
    t = 1.0
    obj = primal_objective(X, Y, B, lam)
    best, best_B = obj, B
    history = [obj]
    quiet = 0
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        B_new = svt(W - step * (XtX @ W - XtY), step * lam)
        obj_new = primal_objective(X, Y, B_new, lam)
        if config.use_acceleration:
            # adaptive restart keeps the momentum from undoing progress
            if obj_new > obj:
                t = 1.0
                W = B_new
            else:
                t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
                W = B_new + ((t - 1.0) / t_new) * (B_new - B)
                t = t_new
        else:
            W = B_new
        change = abs(obj - obj_new) / max(abs(obj_new), 1e-300)
        moved = float(np.linalg.norm(B_new - B))
        B, obj = B_new, obj_new
        history.append(obj)
        if obj < best:
            best, best_B = obj, B
        quiet = quiet + 1 if change <= config.tol else 0
        if quiet >= 2 and moved <= config.step_tol * (1.0 + float(np.linalg.norm(B))):
            converged = True
            break
    if not converged:
        log.warning("proximal gradient hit max_iter=%d (lam=%g)", config.max_iter, lam)
    return PrimalSolution(best_B, best, it, converged, history)


def solve_primal(X, Y, lam: float, config: PgConfig | None = None, B0=None) -> np.ndarray:
    return solve_primal_full(X, Y, lam, config, B0).B
