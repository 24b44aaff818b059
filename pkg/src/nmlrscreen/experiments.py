"""Harnesses behind the CLI: rule tables, oracle sweeps, image recovery."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dual import AdmmConfig, solve_dual
from .instances import rng_for
from .linalg import RANK_TOL, rank_eps, spectral_norm
from .primal import PgConfig, dual_certificate, duality_gap, solve_primal
from .rules import (
    RuleCertificate, RuleKind, ReferenceError, lambda_max, reference_from_admm,
    rule_certificate,
)


def certificates(X, Y, lambda0_frac: float, rules, admm: AdmmConfig | None = None
                 ) -> tuple[float, dict[RuleKind, RuleCertificate]]:
    """Solve the dual at ``lambda0 = frac * lambda_max`` and certify each rule."""
    if not 0 < lambda0_frac <= 1:
        raise ValueError(f"lambda0 fraction must lie in (0, 1], got {lambda0_frac}")
    rules = [RuleKind.parse(r) if isinstance(r, str) else RuleKind(r) for r in rules]
    lmax = lambda_max(X, Y)
    if lmax == 0:
        return 0.0, {r: RuleCertificate(r, 0.0, [], [], []) for r in rules}
    if lambda0_frac == 1:
        bad = [r.value for r in rules if r.needs_v1]
        if bad:
            raise ReferenceError(f"{', '.join(bad)} requires lambda0 < lambda_max")
    ref = reference_from_admm(X, Y, lambda0_frac * lmax, admm)
    return lmax, {r: rule_certificate(r, ref, X, Y) for r in rules}


def certificate_rows(certs: dict[RuleKind, RuleCertificate]) -> list[dict]:
    rows = []
    for rule, cert in certs.items():
        for iv in cert.intervals:
            i = iv.rank_bound + 1
            rows.append({
                "rule": rule.value,
                "index": i,
                "threshold": iv.lower,
                "upper": iv.upper,
                "rank_bound": iv.rank_bound,
                "non_monotone": int(i in cert.non_monotone),
            })
    return rows


def feasible_dual(X, Y, B, lam: float) -> np.ndarray:
    """KKT dual point rescaled into ``||X^T C||_2 <= 1``."""
    C = dual_certificate(X, Y, B, lam)
    return C / max(1.0, spectral_norm(X.T @ C))


def oracle_path(X, Y, lambdas, config: PgConfig | None = None) -> dict[float, np.ndarray]:
    """Primal oracle at every lambda, warm-started from the next larger one."""
    out = {}
    B = None
    for lam in sorted(set(float(v) for v in lambdas), reverse=True):
        B = solve_primal(X, Y, lam, config, B0=B)
        out[lam] = B
    return out


@dataclass
class SweepRow:
    lam: float
    bounds: dict[RuleKind, int | None]
    oracle_rank: int
    duality_gap: float

    def violations(self) -> list[RuleKind]:
        return [r for r, b in self.bounds.items() if b is not None and self.oracle_rank > b]


@dataclass
class SweepReport:
    lambda_max: float
    lambda0: float
    rules: list[RuleKind]
    rows: list[SweepRow] = field(default_factory=list)

    def violations(self) -> list[tuple[float, RuleKind]]:
        return [(row.lam, r) for row in self.rows for r in row.violations()]

    def rank_increases(self, slack: int = 0) -> int:
        """Count of grid steps where the oracle rank grows with lambda."""
        ranks = [row.oracle_rank for row in sorted(self.rows, key=lambda r: r.lam)]
        return sum(1 for a, b in zip(ranks, ranks[1:]) if b > a + slack)


def sweep(X, Y, lambda0_frac: float, rules, grid: int = 50, lo_frac: float = 1e-3,
          admm: AdmmConfig | None = None, pg: PgConfig | None = None,
          rank_tol: float = RANK_TOL) -> SweepReport:
    """Oracle rank against each rule's certified bound on a geometric grid."""
    lmax, certs = certificates(X, Y, lambda0_frac, rules, admm)
    report = SweepReport(lmax, lambda0_frac * lmax, list(certs))
    if lmax == 0:
        return report
    lambdas = np.geomspace(lo_frac * lmax, lmax, grid)
    path = oracle_path(X, Y, lambdas, pg)
    for lam in lambdas:
        B = path[float(lam)]
        report.rows.append(SweepRow(
            lam=float(lam),
            bounds={r: c.bound_at(lam) for r, c in certs.items()},
            oracle_rank=rank_eps(B, rank_tol),
            duality_gap=duality_gap(X, Y, B, feasible_dual(X, Y, B, lam), lam),
        ))
    return report


def interval_samples(lower: float, upper: float, count: int = 10) -> np.ndarray:
    """``count`` evenly spaced points in ``(lower, upper]``."""
    return lower + (upper - lower) * np.arange(1, count + 1) / count


@dataclass
class SafetyResult:
    checks: int
    violations: list[tuple[RuleKind, float, int, int]]


def safety_check(X, Y, certs: dict[RuleKind, RuleCertificate], per_interval: int = 10,
                 pg: PgConfig | None = None, rank_tol: float = RANK_TOL) -> SafetyResult:
    """Sample every certified interval and compare with the oracle rank."""
    samples = []
    for rule, cert in certs.items():
        for iv in cert.intervals:
            for lam in interval_samples(iv.lower, iv.upper, per_interval):
                samples.append((rule, float(lam), iv.rank_bound))
    path = oracle_path(X, Y, [s[1] for s in samples], pg)
    violations = []
    for rule, lam, bound in samples:
        rank = rank_eps(path[lam], rank_tol)
        if rank > bound:
            violations.append((rule, lam, bound, rank))
    return SafetyResult(len(samples), violations)


@dataclass
class RecoveryResult:
    recovered: np.ndarray
    seconds: float
    iterations: int
    mse: float
    lam: float
    converged: bool


def mse(B, Z) -> float:
    B = np.asarray(B)
    return float(np.sum((B - Z) ** 2)) / B.size


def recover_image(image, n: int, noise_std: float = 0.01, lam: float | None = None,
                  lam_frac: float | None = None, seed: int = 0,
                  config: AdmmConfig | None = None) -> RecoveryResult:
    """Treat ``image`` as B, observe ``Y = X B + W`` and recover B by ADMM.

    Exactly one of ``lam`` (absolute) or ``lam_frac`` (fraction of
    ``lambda_max``) must be given.
    """
    if (lam is None) == (lam_frac is None):
        raise ValueError("give exactly one of lam or lam_frac")
    B = np.asarray(image, dtype=float)
    rng = rng_for(seed)
    X = rng.standard_normal((n, B.shape[0]))
    Y = X @ B + noise_std * rng.standard_normal((n, B.shape[1]))
    if lam is None:
        lam = lam_frac * lambda_max(X, Y)
    start = time.perf_counter()
    sol = solve_dual(X, Y, lam, config)
    seconds = time.perf_counter() - start
    return RecoveryResult(sol.B_star, seconds, sol.iterations, mse(B, sol.B_star),
                          float(lam), sol.converged)
