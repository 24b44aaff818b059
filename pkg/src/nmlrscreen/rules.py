"""Rank-certifying tuning-parameter rules for nuclear-norm regression.

Given the dual solution ``C0 = C*(lam0)`` at a reference value ``lam0``, each
rule bounds the unknown ``C*(lam)`` for ``lam < lam0`` by a Frobenius ball and
uses Weyl's inequality to certify ``sigma_i(X^T C*(lam)) < 1``, which forces
``sigma_i(B*(lam)) = 0`` and hence ``rank(B*(lam)) <= i - 1``.

====== ================================ ===================================
rule   ball centre                      ball radius
====== ================================ ===================================
PSR    C0                               (1/lam - 1/lam0) ||Y||_F
PSRi   C0                               ||V3||_F
PSRfn  C0 + (1/lam - 1/lam0) Y / 2      (1/lam - 1/lam0) ||Y||_F / 2
PSR+   C0 + V3 / 2                      ||V3||_F / 2
====== ================================ ===================================

with ``V1 = Y/lam0 - C0``, ``V2 = Y/lam - C0`` and ``V3`` the part of ``V2``
orthogonal to ``V1``. Thresholds are in the original ``lam`` units.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dual import AdmmConfig, solve_dual
from .linalg import STRICT_EPS, as_matrix, singular_values, spectral_norm
from .primal import PgConfig, dual_certificate, solve_primal

GRID_POINTS = 64
GRID_FLOOR = 1e-6
BISECT_REL_TOL = 1e-6
C0_SLACK_FACTOR = 10.0
FEASIBILITY_TOL = 1e-6
_AT_MAX_RTOL = 1e-12


class RuleKind(str, enum.Enum):
    PSR = "PSR"
    PSRi = "PSRi"
    PSRfn = "PSRfn"
    PSRplus = "PSRplus"

    @classmethod
    def parse(cls, name: str) -> "RuleKind":
        key = name.strip().lower().replace("+", "plus")
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown rule {name!r}; expected one of PSR, PSRi, PSRfn, PSR+")

    @property
    def needs_v1(self) -> bool:
        return self in (RuleKind.PSRi, RuleKind.PSRplus)


class ReferenceError(ValueError):
    """Raised when a rule needs something the reference solution cannot give."""


def lambda_max(X, Y) -> float:
    """Smallest regularization value for which the solution is exactly zero."""
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    return spectral_norm(X.T @ Y)


@dataclass(frozen=True)
class ReferenceSolution:
    """Dual solution ``C0 = C*(lambda0)`` in the normalized scale.

    ``slack`` is subtracted from the right-hand side of every rule inequality
    to absorb the error of a numerically computed ``C0``; it is zero for the
    exact closed form at ``lambda_max``.
    """

    lambda0: float
    C0: np.ndarray
    source: str
    lambda_max: float
    slack: float = 0.0

    def __post_init__(self):
        if self.source not in ("admm", "primal_kkt", "closed_form_lambda_max"):
            raise ValueError(f"unknown reference source {self.source!r}")
        if not 0 < self.lambda0 <= self.lambda_max * (1 + _AT_MAX_RTOL):
            raise ValueError(
                f"lambda0={self.lambda0} must lie in (0, lambda_max={self.lambda_max}]")

    @property
    def at_lambda_max(self) -> bool:
        return self.lambda0 >= self.lambda_max * (1 - _AT_MAX_RTOL)


def reference_at_lambda_max(X, Y) -> ReferenceSolution:
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    lmax = lambda_max(X, Y)
    if lmax == 0:
        raise ReferenceError("X^T Y = 0: lambda_max is zero and no reference exists")
    return ReferenceSolution(lmax, Y / lmax, "closed_form_lambda_max", lmax, 0.0)


def _checked_reference(X, lam0, C0, source, lmax, tol) -> ReferenceSolution:
    excess = spectral_norm(X.T @ C0) - 1.0
    if excess > FEASIBILITY_TOL:
        raise ReferenceError(
            f"reference C0 violates ||X^T C0||_2 <= 1 by {excess:.3e}; solve more accurately")
    slack = C0_SLACK_FACTOR * tol + max(excess, 0.0)
    return ReferenceSolution(float(lam0), C0, source, lmax, slack)


def reference_from_admm(X, Y, lambda0: float, config: AdmmConfig | None = None
                        ) -> ReferenceSolution:
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    config = config or AdmmConfig()
    lmax = lambda_max(X, Y)
    if lambda0 >= lmax * (1 - _AT_MAX_RTOL):
        return reference_at_lambda_max(X, Y)
    sol = solve_dual(X, Y, lambda0, config)
    return _checked_reference(X, lambda0, sol.C_star, "admm", lmax, config.tol)


def reference_from_primal(X, Y, lambda0: float, config: PgConfig | None = None
                          ) -> ReferenceSolution:
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    config = config or PgConfig()
    lmax = lambda_max(X, Y)
    if lambda0 >= lmax * (1 - _AT_MAX_RTOL):
        return reference_at_lambda_max(X, Y)
    B = solve_primal(X, Y, lambda0, config)
    C0 = dual_certificate(X, Y, B, lambda0)
    return _checked_reference(X, lambda0, C0, "primal_kkt", lmax, config.tol)


# ---------------------------------------------------------------------------
# displacement matrices

def v1(ref: ReferenceSolution, Y) -> np.ndarray:
    if ref.at_lambda_max:
        raise ReferenceError("V1 has no closed form at lambda0 = lambda_max")
    return as_matrix(Y, "Y") / ref.lambda0 - ref.C0


def v2(lam: float, ref: ReferenceSolution, Y) -> np.ndarray:
    _check_lambda(lam, ref)
    return as_matrix(Y, "Y") / lam - ref.C0


def _orthogonal_part(V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Component of ``W`` orthogonal to ``V``."""
    vv = float(np.sum(V * V))
    if vv == 0:
        raise ReferenceError("V1 is zero; the reference point is not strictly inside (0, lambda_max)")
    return W - (float(np.sum(V * W)) / vv) * V


def v3(lam: float, ref: ReferenceSolution, Y) -> np.ndarray:
    return _orthogonal_part(v1(ref, Y), v2(lam, ref, Y))


def _check_lambda(lam: float, ref: ReferenceSolution) -> None:
    if not 0 < lam < ref.lambda0:
        raise ValueError(f"lambda={lam} must lie in (0, lambda0={ref.lambda0})")


# ---------------------------------------------------------------------------
# estimate balls

@dataclass(frozen=True)
class EstimateBall:
    center: np.ndarray
    radius: float

    def distance(self, C) -> float:
        return float(np.linalg.norm(np.asarray(C) - self.center))

    def contains(self, C, slack: float = 0.0) -> bool:
        return self.distance(C) <= self.radius + slack

    def inside(self, other: "EstimateBall", slack: float = 0.0) -> bool:
        """Ball-in-ball test: ``self`` is a subset of ``other``."""
        return float(np.linalg.norm(self.center - other.center)) + self.radius <= other.radius + slack


def estimate_ball(rule: RuleKind, lam: float, ref: ReferenceSolution, Y) -> EstimateBall:
    rule = RuleKind(rule)
    Y = as_matrix(Y, "Y")
    _check_lambda(lam, ref)
    gap = 1.0 / lam - 1.0 / ref.lambda0
    if rule is RuleKind.PSR:
        return EstimateBall(ref.C0, gap * float(np.linalg.norm(Y)))
    if rule is RuleKind.PSRfn:
        return EstimateBall(ref.C0 + 0.5 * gap * Y, 0.5 * gap * float(np.linalg.norm(Y)))
    V3 = v3(lam, ref, Y)
    r3 = float(np.linalg.norm(V3))
    if rule is RuleKind.PSRi:
        return EstimateBall(ref.C0, r3)
    return EstimateBall(ref.C0 + 0.5 * V3, 0.5 * r3)


# ---------------------------------------------------------------------------
# thresholds

@dataclass
class ThresholdResult:
    """Smallest certified ``lam`` at one index; ``inf`` when nothing is certified."""

    value: float
    non_monotone: bool = False

    @property
    def certified(self) -> bool:
        return math.isfinite(self.value)


class _Problem:
    """Quantities shared by all rules for a fixed ``(X, Y, ref)``."""

    def __init__(self, X, Y, ref: ReferenceSolution):
        self.X = as_matrix(X, "X")
        self.Y = as_matrix(Y, "Y")
        if self.X.shape[0] != self.Y.shape[0] or ref.C0.shape != self.Y.shape:
            raise ValueError("X, Y and C0 have inconsistent shapes")
        self.ref = ref
        self.r = min(self.X.shape[1], self.Y.shape[1])
        self.x_norm = spectral_norm(self.X)
        self.y_norm = float(np.linalg.norm(self.Y))
        self.XtC0 = self.X.T @ ref.C0
        self.XtY = self.X.T @ self.Y
        self.sv_C0 = singular_values(self.XtC0)
        self._XtV3_dir = None

    def _v3_parts(self):
        # V3(lam) = V2 - t V1 is affine in 1/lam; cache X^T of both pieces
        if self._XtV3_dir is None:
            V1 = v1(self.ref, self.Y)
            W0 = _orthogonal_part(V1, -self.ref.C0)
            W1 = _orthogonal_part(V1, self.Y)
            self._XtV3_dir = (W0, W1, self.X.T @ W0, self.X.T @ W1)
        return self._XtV3_dir

    def check_index(self, i: int) -> None:
        if not 1 <= i <= self.r:
            raise ValueError(f"index i={i} must lie in 1..{self.r}")

    def margin(self) -> float:
        return self.ref.slack

    # --- closed forms --------------------------------------------------

    def psr(self, i: int) -> float:
        lam0, K = self.ref.lambda0, self.x_norm * self.y_norm
        room = 1.0 - self.margin() - float(self.sv_C0[i - 1])
        denom = K + lam0 * room
        if denom <= 0:
            return math.inf
        return lam0 * K / denom

    def psrfn_at_max(self, i: int) -> float:
        lmax, K = self.ref.lambda0, self.x_norm * self.y_norm
        s = float(singular_values(self.XtY)[i - 1])
        denom = 2.0 * (1.0 - self.margin()) * lmax - s + K
        if denom <= 0:
            return math.inf
        return lmax * (K + s) / denom

    # --- predicates evaluated on all indices at once -------------------

    def predicate(self, rule: RuleKind, lam: float) -> np.ndarray:
        """Boolean vector over i = 1..r: does ``rule`` certify index i at ``lam``?"""
        gap = 1.0 / lam - 1.0 / self.ref.lambda0
        rhs0 = 1.0 - STRICT_EPS - self.margin()
        if rule is RuleKind.PSR:
            return self.sv_C0 <= rhs0 - self.x_norm * gap * self.y_norm
        if rule is RuleKind.PSRfn:
            sv = singular_values(self.XtC0 + 0.5 * gap * self.XtY)
            return sv <= rhs0 - 0.5 * self.x_norm * gap * self.y_norm
        W0, W1, XtW0, XtW1 = self._v3_parts()
        V3 = W0 + W1 / lam
        v3_norm = float(np.linalg.norm(V3))
        if rule is RuleKind.PSRi:
            return self.sv_C0 <= rhs0 - self.x_norm * v3_norm
        sv = singular_values(self.XtC0 + 0.5 * (XtW0 + XtW1 / lam))
        return sv <= rhs0 - 0.5 * self.x_norm * v3_norm

    def grid(self, bisect_tol: float) -> np.ndarray:
        lam0 = self.ref.lambda0
        top = lam0 - bisect_tol
        if top <= GRID_FLOOR * lam0:
            raise ValueError("bisect_tol too large for the reference point")
        return np.geomspace(GRID_FLOOR * lam0, top, GRID_POINTS)

    def scan(self, rule: RuleKind, bisect_tol: float) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid(bisect_tol)
        table = np.array([self.predicate(rule, lam) for lam in g])
        return g, table

    def bisect(self, rule: RuleKind, i: int, g: np.ndarray, col: np.ndarray,
               bisect_tol: float) -> ThresholdResult:
        """Largest false-to-true crossing on the grid, refined by bisection."""
        if not col[-1]:
            return ThresholdResult(math.inf)
        false_idx = np.flatnonzero(~col)
        crossings = np.count_nonzero(col[1:] & ~col[:-1])
        non_monotone = crossings > 1
        if false_idx.size == 0:
            return ThresholdResult(float(g[0]), non_monotone)
        k = int(false_idx[-1])
        lo, hi = float(g[k]), float(g[k + 1])
        while hi - lo > bisect_tol:
            mid = 0.5 * (lo + hi)
            if self.predicate(rule, mid)[i - 1]:
                hi = mid
            else:
                lo = mid
        return ThresholdResult(float(hi), non_monotone)

    def threshold(self, rule: RuleKind, i: int, bisect_tol: float | None = None,
                  scan=None) -> ThresholdResult:
        self.check_index(i)
        if rule.needs_v1 and self.ref.at_lambda_max:
            raise ReferenceError(f"{rule.value} requires lambda0 < lambda_max")
        if rule is RuleKind.PSR:
            return ThresholdResult(self.psr(i))
        if rule is RuleKind.PSRfn and self.ref.at_lambda_max:
            return ThresholdResult(self.psrfn_at_max(i))
        bisect_tol = bisect_tol or BISECT_REL_TOL * self.ref.lambda0
        g, table = scan if scan is not None else self.scan(rule, bisect_tol)
        return self.bisect(rule, i, g, table[:, i - 1], bisect_tol)

    def all_thresholds(self, rule: RuleKind, bisect_tol: float | None = None
                       ) -> list[ThresholdResult]:
        if rule.needs_v1 and self.ref.at_lambda_max:
            raise ReferenceError(f"{rule.value} requires lambda0 < lambda_max")
        scan = None
        if rule is RuleKind.PSRi or rule is RuleKind.PSRplus or (
                rule is RuleKind.PSRfn and not self.ref.at_lambda_max):
            bisect_tol = bisect_tol or BISECT_REL_TOL * self.ref.lambda0
            scan = self.scan(rule, bisect_tol)
        return [self.threshold(rule, i, bisect_tol, scan) for i in range(1, self.r + 1)]


def psr_threshold(i: int, ref: ReferenceSolution, X, Y) -> float:
    return _Problem(X, Y, ref).threshold(RuleKind.PSR, i).value


def psrfn_threshold(i: int, ref: ReferenceSolution, X, Y,
                    bisect_tol: float | None = None) -> float:
    return _Problem(X, Y, ref).threshold(RuleKind.PSRfn, i, bisect_tol).value


def psri_threshold(i: int, ref: ReferenceSolution, X, Y,
                   bisect_tol: float | None = None) -> float:
    return _Problem(X, Y, ref).threshold(RuleKind.PSRi, i, bisect_tol).value


def psrplus_threshold(i: int, ref: ReferenceSolution, X, Y,
                      bisect_tol: float | None = None) -> float:
    return _Problem(X, Y, ref).threshold(RuleKind.PSRplus, i, bisect_tol).value


def rule_thresholds(rule: RuleKind, ref: ReferenceSolution, X, Y,
                    bisect_tol: float | None = None) -> list[ThresholdResult]:
    """Per-index thresholds for i = 1..r sharing one grid scan."""
    return _Problem(X, Y, ref).all_thresholds(RuleKind(rule), bisect_tol)


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class Interval:
    """``(lower, upper]`` on which ``rank(B*(lam)) <= rank_bound``."""

    lower: float
    upper: float
    rank_bound: int

    def __contains__(self, lam: float) -> bool:
        return self.lower < lam <= self.upper


@dataclass
class RuleCertificate:
    rule: RuleKind
    lambda0: float
    thresholds: list[float | None]
    clamped: list[float | None]
    intervals: list[Interval]
    non_monotone: list[int] = field(default_factory=list)
    tied: list[int] = field(default_factory=list)

    def bound_at(self, lam: float) -> int | None:
        """Best certified rank bound at ``lam``, or ``None`` if uncertified."""
        for iv in self.intervals:
            if lam in iv:
                return iv.rank_bound
        return None


def _assemble(rule: RuleKind, lambda0: float, raw: list[ThresholdResult]) -> RuleCertificate:
    thresholds = [t.value if t.value < lambda0 else None for t in raw]
    # rank <= j-1 implies rank <= i-1 for i > j: running minimum over i
    clamped: list[float | None] = []
    best = math.inf
    for t in thresholds:
        if t is not None:
            best = min(best, t)
        clamped.append(best if math.isfinite(best) else None)

    intervals, tied = [], []
    upper = lambda0
    for i, t in enumerate(clamped, start=1):
        if t is None:
            continue
        if t < upper:
            intervals.append(Interval(t, upper, i - 1))
            upper = t
        elif i > 1:
            tied.append(i)
    non_monotone = [i for i, t in enumerate(raw, start=1) if t.non_monotone]
    return RuleCertificate(rule, lambda0, thresholds, clamped, intervals, non_monotone, tied)


def rule_certificate(rule: RuleKind, ref: ReferenceSolution, X, Y,
                     bisect_tol: float | None = None) -> RuleCertificate:
    rule = RuleKind(rule)
    if ref.lambda_max == 0:
        return RuleCertificate(rule, ref.lambda0, [], [], [])
    raw = rule_thresholds(rule, ref, X, Y, bisect_tol)
    return _assemble(rule, ref.lambda0, raw)


def empty_certificate(rule: RuleKind, lambda0: float = 0.0) -> RuleCertificate:
    return RuleCertificate(RuleKind(rule), lambda0, [], [], [])
