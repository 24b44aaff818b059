"""Dense matrix primitives built on the SVD.

Everything downstream depends only on singular values and on basis-invariant
maps (projections, thresholding), never on individual singular vectors, so
repeated singular values cannot change results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-8
STRICT_EPS = 1e-9


class SolverError(RuntimeError):
    """Raised when a numerical kernel fails (e.g. SVD non-convergence)."""


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate ``M`` as a finite 2-d float array and return it."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf")
    return A


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray

    def reconstruct(self, s: np.ndarray | None = None) -> np.ndarray:
        s = self.s if s is None else s
        return (self.U * s) @ self.Vt


def svd(M) -> SvdResult:
    """Thin SVD with singular values sorted nonincreasing."""
    A = as_matrix(M)
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"SVD did not converge: {exc}") from exc
    return SvdResult(U, s, Vt)


def singular_values(M) -> np.ndarray:
    A = as_matrix(M)
    try:
        return np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"SVD did not converge: {exc}") from exc


def spectral_norm(M) -> float:
    return float(singular_values(M)[0])


def nuclear_norm(M) -> float:
    return float(np.sum(singular_values(M)))


def frobenius_norm(M) -> float:
    return float(np.linalg.norm(as_matrix(M), "fro"))


def project_spectral_ball(M, radius: float) -> np.ndarray:
    """Frobenius-nearest point of ``{N : ||N||_2 <= radius}``.

    Clips singular values at ``radius``. Points already inside are returned
    as a copy without touching the SVD.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    A = as_matrix(M)
    res = svd(A)
    if res.s[0] <= radius:
        return A.copy()
    return res.reconstruct(np.minimum(res.s, radius))


def svt(M, threshold: float) -> np.ndarray:
    """Singular value soft-thresholding, the prox of ``threshold * ||.||_*``."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    A = as_matrix(M)
    if threshold == 0:
        return A.copy()
    res = svd(A)
    return res.reconstruct(np.maximum(res.s - threshold, 0.0))


def rank_eps(M, tol: float = RANK_TOL) -> int:
    """Number of singular values above ``tol * sigma_1``; zero for ``M = 0``."""
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    s = singular_values(M)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))
