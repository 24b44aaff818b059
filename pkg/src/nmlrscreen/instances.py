"""Seeded synthetic instances ``Y = X B + W``.

Random numbers come from numpy's PCG64 bit generator; normals use numpy's
ziggurat transform (``Generator.standard_normal``). Both are fixed across
platforms for a given numpy major version.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class InstanceSpec:
    n: int = 100
    p: int = 200
    q: int = 50
    noise_std: float = 0.01
    true_rank: int | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.p, self.q) < 1:
            raise ValueError("n, p, q must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if self.true_rank is not None and not 1 <= self.true_rank <= min(self.p, self.q):
            raise ValueError(f"true_rank must lie in 1..{min(self.p, self.q)}")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def generate_instance(spec: InstanceSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``(X, Y, B_true)``; X and B factors are i.i.d. standard normal."""
    rng = rng_for(spec.seed)
    X = rng.standard_normal((spec.n, spec.p))
    if spec.true_rank is None:
        B = rng.standard_normal((spec.p, spec.q))
    else:
        k = spec.true_rank
        B = rng.standard_normal((spec.p, k)) @ rng.standard_normal((k, spec.q))
    W = spec.noise_std * rng.standard_normal((spec.n, spec.q))
    return X, X @ B + W, B


def equal_singular_value_instance(n: int, p: int, q: int, scale: float = 1.0,
                                  seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """X with orthonormal columns and ``Y = X G``, G a scaled partial isometry.

    Every nonzero singular value of ``X^T Y = G`` equals ``scale``.
    """
    if n < p:
        raise ValueError("orthonormal columns need n >= p")
    rng = rng_for(seed)
    X, _ = np.linalg.qr(rng.standard_normal((n, p)))
    U, _ = np.linalg.qr(rng.standard_normal((p, min(p, q))))
    V, _ = np.linalg.qr(rng.standard_normal((q, min(p, q))))
    G = scale * U @ V.T
    return X, X @ G


def rank_deficient_instance(n: int, p: int, q: int, rank: int, noise_std: float = 0.01,
                            seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """X of exact rank ``rank`` (< min(n, p)) with a dense response."""
    rng = rng_for(seed)
    X = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, p))
    B = rng.standard_normal((p, q))
    return X, X @ B + noise_std * rng.standard_normal((n, q))


def low_rank_image(rows: int = 64, cols: int = 64, rank: int = 5, seed: int = 0) -> np.ndarray:
    """Smooth rank-``rank`` pattern with entries in [0, 1]."""
    rng = rng_for(seed)
    u = np.linspace(0.0, 1.0, rows)
    v = np.linspace(0.0, 1.0, cols)
    img = np.zeros((rows, cols))
    for k in range(rank):
        fu, fv = rng.uniform(0.5, 3.0, size=2)
        pu, pv = rng.uniform(0.0, np.pi, size=2)
        img += rng.uniform(0.5, 1.0) * np.outer(np.cos(np.pi * fu * u + pu),
                                                np.cos(np.pi * fv * v + pv))
    img -= img.min()
    peak = img.max()
    return img / peak if peak > 0 else img
