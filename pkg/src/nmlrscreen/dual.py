"""Two-block ADMM on the dual of the nuclear-norm regularized regression.

The iteration runs on the unnormalized dual variable ``C~`` (constraint
``||X^T C~||_2 <= lam``) with the splitting ``X^T C~ = E``:

    C <- (I + sigma X X^T)^{-1} (sigma X E + Y - X Z)
    E <- proj_{||.||_2 <= lam}(X^T C + Z / sigma)
    Z <- Z + tau sigma (X^T C - E)

The multiplier ``Z`` converges to the primal coefficient matrix. The
returned dual matrix is rescaled to ``C = C~ / lam`` so that
``||X^T C||_2 <= 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .linalg import as_matrix, project_spectral_ball
from .primal import duality_gap

log = logging.getLogger(__name__)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class AdmmConfig:
    sigma: float = 1.0
    tau: float = 1.618
    max_iter: int = 5000
    tol: float = 1e-8

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.tau < GOLDEN:
            raise ValueError(f"tau must lie in (0, {GOLDEN:.6f}), got {self.tau}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class AdmmState:
    C: np.ndarray
    E: np.ndarray
    Z: np.ndarray
    iter: int = 0
    primal_residual: float = math.inf
    dual_residual: float = math.inf


@dataclass
class DualSolution:
    C_star: np.ndarray
    B_star: np.ndarray
    iterations: int
    final_primal_residual: float
    final_dual_residual: float
    duality_gap: float
    converged: bool
    lam: float
    residual_history: list[float] = field(default_factory=list, repr=False)


class DualAdmm:
    """Holds the per-solve factorization; exposes the three updates."""

    def __init__(self, X, Y, lam: float, config: AdmmConfig | None = None):
        self.X = as_matrix(X, "X")
        self.Y = as_matrix(Y, "Y")
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError(f"X has {self.X.shape[0]} rows but Y has {self.Y.shape[0]}")
        if not lam > 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        self.lam = float(lam)
        self.config = config or AdmmConfig()
        n = self.X.shape[0]
        sigma = self.config.sigma
        self._chol = cho_factor(np.eye(n) + sigma * (self.X @ self.X.T))

    def initial_state(self) -> AdmmState:
        # C~ = Y is the unconstrained minimizer; it need not be feasible
        C = self.Y.copy()
        E = self.X.T @ C
        Z = np.zeros_like(E)
        return AdmmState(C, E, Z)

    def c_update(self, E, Z) -> np.ndarray:
        rhs = self.config.sigma * (self.X @ E) + self.Y - self.X @ Z
        return cho_solve(self._chol, rhs)

    def e_update(self, C, Z) -> np.ndarray:
        return project_spectral_ball(self.X.T @ C + Z / self.config.sigma, self.lam)

    def z_update(self, Z, XtC, E) -> np.ndarray:
        return Z + self.config.tau * self.config.sigma * (XtC - E)

    def step(self, state: AdmmState) -> AdmmState:
        sigma = self.config.sigma
        C = self.c_update(state.E, state.Z)
        XtC = self.X.T @ C
        E = project_spectral_ball(XtC + state.Z / sigma, self.lam)
        Z = self.z_update(state.Z, XtC, E)
        return AdmmState(
            C, E, Z, state.iter + 1,
            primal_residual=float(np.linalg.norm(XtC - E)),
            dual_residual=sigma * float(np.linalg.norm(self.X @ (E - state.E))),
        )

    def run(self, state: AdmmState | None = None) -> DualSolution:
        state = state or self.initial_state()
        cfg = self.config
        threshold = cfg.tol * (1.0 + float(np.linalg.norm(self.Y)))
        history = []
        converged = False
        while state.iter < cfg.max_iter:
            state = self.step(state)
            r = max(state.primal_residual, state.dual_residual)
            history.append(r)
            if r <= threshold:
                converged = True
                break
        if not converged:
            log.warning("ADMM hit max_iter=%d (lam=%g, residual=%.3e)",
                        cfg.max_iter, self.lam, history[-1] if history else math.nan)
        C_star = state.C / self.lam
        B_star = state.Z.copy()
        return DualSolution(
            C_star=C_star,
            B_star=B_star,
            iterations=state.iter,
            final_primal_residual=state.primal_residual,
            final_dual_residual=state.dual_residual,
            duality_gap=duality_gap(self.X, self.Y, B_star, C_star, self.lam),
            converged=converged,
            lam=self.lam,
            residual_history=history,
        )


def solve_dual(X, Y, lam: float, config: AdmmConfig | None = None) -> DualSolution:
    """Solve the dual problem by ADMM; see the module docstring."""
    return DualAdmm(X, Y, lam, config).run()


def recover_primal(solution: DualSolution) -> np.ndarray:
    return solution.B_star
