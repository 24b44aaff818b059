import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmlrscreen.dual import solve_dual
from nmlrscreen.instances import InstanceSpec, equal_singular_value_instance, generate_instance
from nmlrscreen.linalg import rank_eps, singular_values, spectral_norm
from nmlrscreen.primal import solve_primal
from nmlrscreen.rules import (
    BISECT_REL_TOL, EstimateBall, ReferenceError, ReferenceSolution, RuleKind, estimate_ball,
    lambda_max, psr_threshold, psrfn_threshold, psri_threshold, psrplus_threshold,
    reference_at_lambda_max, reference_from_admm, reference_from_primal, rule_certificate,
    rule_thresholds, v1, v2, v3,
)

SQRT5 = math.sqrt(5.0)
ALL_RULES = list(RuleKind)


def toy_reference(lam0=1.0):
    # X = I, Y = diag(2, 1): C0 is the spectral-ball projection of Y / lam0
    C0 = np.diag(np.minimum([2.0 / lam0, 1.0 / lam0], 1.0))
    return ReferenceSolution(lam0, C0, "admm", 2.0, 0.0)


def small(seed, rank=3, n=20, p=15, q=8):
    X, Y, _ = generate_instance(InstanceSpec(n=n, p=p, q=q, noise_std=0.01, true_rank=rank, seed=seed))
    return X, Y


@pytest.fixture(scope="module")
def anchored():
    X, Y = small(11)
    ref = reference_from_admm(X, Y, 0.5 * lambda_max(X, Y))
    return X, Y, ref


# --- lambda_max ---------------------------------------------------------

def test_lambda_max_toy(toy):
    assert lambda_max(*toy) == pytest.approx(2.0, abs=1e-14)


def test_lambda_max_zero_response():
    assert lambda_max(np.eye(3), np.zeros((3, 2))) == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_lambda_max_brackets_zero_solution(seed):
    X, Y = small(seed)
    lmax = lambda_max(X, Y)
    assert np.linalg.norm(solve_primal(X, Y, 1.01 * lmax)) <= 1e-8 * np.linalg.norm(Y)
    assert np.linalg.norm(solve_primal(X, Y, 0.95 * lmax)) > 1e-4


# --- reference solutions ------------------------------------------------

def test_reference_at_lambda_max_is_exact(toy):
    ref = reference_at_lambda_max(*toy)
    np.testing.assert_array_equal(ref.C0, toy[1] / 2.0)
    assert ref.slack == 0.0 and ref.at_lambda_max


def test_reference_sources_agree(toy):
    a = reference_from_admm(*toy, 1.0)
    b = reference_from_primal(*toy, 1.0)
    np.testing.assert_allclose(a.C0, np.eye(2), atol=1e-7)
    np.testing.assert_allclose(b.C0, np.eye(2), atol=1e-7)
    assert (a.source, b.source) == ("admm", "primal_kkt")
    assert a.slack > 0


def test_reference_rejects_infeasible_c0():
    X, Y = np.eye(2), np.diag([2.0, 1.0])
    from nmlrscreen.rules import _checked_reference
    with pytest.raises(ReferenceError):
        _checked_reference(X, 1.0, 1.1 * np.eye(2), "admm", 2.0, 1e-8)


def test_reference_validates_fields():
    with pytest.raises(ValueError):
        ReferenceSolution(3.0, np.eye(2), "admm", 2.0)
    with pytest.raises(ValueError):
        ReferenceSolution(1.0, np.eye(2), "guess", 2.0)


def test_admm_reference_at_lambda_max_uses_closed_form(toy):
    assert reference_from_admm(*toy, 2.0).source == "closed_form_lambda_max"


# --- V1, V2, V3 ------------------------------------------------------------

def test_v_operators_toy(toy):
    _, Y = toy
    ref = toy_reference()
    np.testing.assert_allclose(v1(ref, Y), np.diag([1.0, 0.0]))
    np.testing.assert_allclose(v2(0.5, ref, Y), np.diag([3.0, 1.0]))
    np.testing.assert_allclose(v3(0.5, ref, Y), np.diag([0.0, 1.0]), atol=1e-15)


def test_v1_rejected_at_lambda_max(toy):
    with pytest.raises(ReferenceError):
        v1(reference_at_lambda_max(*toy), toy[1])


def test_v2_zero_response():
    ref = ReferenceSolution(1.0, np.eye(2), "admm", 2.0)
    np.testing.assert_array_equal(v2(0.5, ref, np.zeros((2, 2))), -np.eye(2))


def test_v2_lambda_out_of_range():
    with pytest.raises(ValueError):
        v2(1.0, toy_reference(), np.diag([2.0, 1.0]))


def test_v3_parallel_is_zero():
    # Y parallel to V1 = Y/lam0 - C0 makes V2 parallel too
    Y = np.diag([2.0, 0.0])
    ref = ReferenceSolution(1.0, np.diag([1.0, 0.0]), "admm", 2.0)
    np.testing.assert_allclose(v3(0.4, ref, Y), 0, atol=1e-14)


def test_v3_orthogonal_unchanged():
    # V1 = diag(-1, 0); at lam = 2/3, V2 = V1 + Y/2 = diag(0, 0.5) is orthogonal to V1
    Y = np.diag([2.0, 1.0])
    ref = ReferenceSolution(1.0, np.diag([3.0, 1.0]), "admm", 4.0)
    lam = 2.0 / 3.0
    V2 = v2(lam, ref, Y)
    np.testing.assert_allclose(V2, np.diag([0.0, 0.5]), atol=1e-15)
    np.testing.assert_allclose(v3(lam, ref, Y), V2, atol=1e-15)


def test_v1_zero_rejected():
    Y = np.diag([2.0, 1.0])
    ref = ReferenceSolution(1.0, Y.copy(), "admm", 2.0)
    with pytest.raises(ReferenceError):
        v3(0.5, ref, Y)


def test_v3_orthogonality(anchored):
    _, Y, ref = anchored
    for frac in (0.1, 0.5, 0.9):
        lam = frac * ref.lambda0
        V1, V2, V3 = v1(ref, Y), v2(lam, ref, Y), v3(lam, ref, Y)
        assert abs(np.sum(V1 * V3)) <= 1e-10 * np.linalg.norm(V1) * np.linalg.norm(V2)


def test_v3_is_scaled_orthogonal_response(anchored):
    _, Y, ref = anchored
    V1 = v1(ref, Y)
    Yperp = Y - np.sum(V1 * Y) / np.sum(V1 * V1) * V1
    for lam in (0.1 * ref.lambda0, 0.7 * ref.lambda0):
        d = 1 / lam - 1 / ref.lambda0
        np.testing.assert_allclose(v3(lam, ref, Y), d * Yperp, atol=1e-10 * np.linalg.norm(Y) * d)


@settings(max_examples=20)
@given(seed=st.integers(0, 10_000), frac0=st.floats(0.2, 0.9), frac=st.floats(0.01, 0.99))
def test_v_norm_properties(seed, frac0, frac):
    X, Y = small(seed, rank=2, n=10, p=8, q=5)
    ref = reference_from_admm(X, Y, frac0 * lambda_max(X, Y))
    lam = frac * ref.lambda0
    d = 1 / lam - 1 / ref.lambda0
    assert np.linalg.norm(v3(lam, ref, Y)) <= d * np.linalg.norm(Y) * (1 + 1e-12)
    V1, V2 = v1(ref, Y), v2(lam, ref, Y)
    assert np.sum(V1 * V2) >= -1e-8 * np.linalg.norm(V1) * np.linalg.norm(V2)


# --- closed-form thresholds ---------------------------------------------

def test_psr_toy(toy):
    ref = reference_at_lambda_max(*toy)
    assert psr_threshold(2, ref, *toy) == pytest.approx(2 * SQRT5 / (1 + SQRT5), abs=1e-9)


def test_psrfn_toy(toy):
    ref = reference_at_lambda_max(*toy)
    assert psrfn_threshold(2, ref, *toy) == pytest.approx(2 * (1 + SQRT5) / (3 + SQRT5), abs=1e-9)
    assert psrfn_threshold(2, ref, *toy) < psr_threshold(2, ref, *toy)


@pytest.mark.parametrize("fn", [psr_threshold, psrfn_threshold])
def test_index_one_at_lambda_max(fn, anchored):
    X, Y, _ = anchored
    ref = reference_at_lambda_max(X, Y)
    assert fn(1, ref, X, Y) == pytest.approx(ref.lambda0, rel=1e-12)


def test_psr_matches_response_form(anchored):
    X, Y, _ = anchored
    ref = reference_at_lambda_max(X, Y)
    lmax, K = ref.lambda0, spectral_norm(X) * np.linalg.norm(Y)
    s = singular_values(X.T @ Y)
    for i in range(1, 9):
        expect = lmax * K / (lmax - s[i - 1] + K)
        assert psr_threshold(i, ref, X, Y) == pytest.approx(expect, rel=1e-12)


def test_psr_toy_oracle_sweep(toy):
    X, Y = toy
    for lam in np.linspace(2 * SQRT5 / (1 + SQRT5), 2.0, 21)[1:]:
        assert rank_eps(solve_primal(X, Y, lam)) <= 1


def test_psri_never_certifies_saturated_index(toy):
    X, Y = toy
    ref = toy_reference()
    assert psri_threshold(2, ref, X, Y) == math.inf
    assert psrplus_threshold(2, ref, X, Y) == math.inf


def test_psri_zero_v3_certifies_below_one():
    # Y parallel to V1 so V3 vanishes; index 2 has sigma_2(X^T C0) = 0 < 1
    Y = np.diag([2.0, 0.0])
    ref = ReferenceSolution(1.0, np.diag([1.0, 0.0]), "admm", 2.0)
    X = np.eye(2)
    t = psri_threshold(2, ref, X, Y)
    assert t <= 1e-6 * 1.0 + 1e-6
    assert psrplus_threshold(2, ref, X, Y) == pytest.approx(t, abs=1e-6)


def test_psri_matches_closed_form_oracle(anchored):
    # V3 = (1/lam - 1/lam0) Y_perp, so the PSRi inequality solves in closed form
    X, Y, ref = anchored
    V1 = v1(ref, Y)
    yperp = np.linalg.norm(Y - np.sum(V1 * Y) / np.sum(V1 * V1) * V1)
    s = singular_values(X.T @ ref.C0)
    tol = BISECT_REL_TOL * ref.lambda0
    for i in range(1, 9):
        room = 1 - 1e-9 - ref.slack - s[i - 1]
        got = psri_threshold(i, ref, X, Y)
        if room <= 0:
            assert got == math.inf
            continue
        expect = 1 / (1 / ref.lambda0 + room / (spectral_norm(X) * yperp))
        assert got == pytest.approx(expect, abs=2 * tol)


def test_psrfn_general_reference_brute_force(anchored):
    X, Y, ref = anchored
    lam0, xn, yn = ref.lambda0, spectral_norm(X), np.linalg.norm(Y)
    grid = np.linspace(1e-3 * lam0, lam0 * (1 - 1e-5), 4000)
    tol = BISECT_REL_TOL * lam0
    for i in range(1, 9):
        holds = []
        for lam in grid:
            d = 1 / lam - 1 / lam0
            lhs = singular_values(X.T @ (ref.C0 + 0.5 * d * Y))[i - 1]
            holds.append(lhs < 1 - 1e-9 - ref.slack - 0.5 * xn * d * yn)
        holds = np.array(holds)
        got = psrfn_threshold(i, ref, X, Y)
        if not holds.any():
            assert got == math.inf or got >= grid[-2]
            continue
        fails = grid[~holds]
        if fails.size:
            assert got >= fails.max() - tol
            assert got <= grid[grid > fails.max()][0] + tol


# --- orderings ----------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_dominance_ordering(seed):
    X, Y = small(seed, rank=[2, 5, 3, 4, 6][seed])
    ref = reference_from_admm(X, Y, 0.5 * lambda_max(X, Y))
    tol = BISECT_REL_TOL * ref.lambda0
    # a threshold at or above lambda0 certifies nothing
    th = {r: [t.value if t.value < ref.lambda0 else math.inf
              for t in rule_thresholds(r, ref, X, Y)] for r in ALL_RULES}
    for i in range(8):
        P, Pi, Pf, Pp = (th[r][i] for r in ALL_RULES)
        assert Pi <= P + tol and Pf <= P + tol
        assert Pp <= Pi + tol
        if math.isfinite(Pf):
            assert Pp <= Pf + tol


@pytest.mark.slow
def test_psrplus_safety_just_above_threshold():
    checks = 0
    for seed in range(50):
        X, Y = small(100 + seed, rank=2 + seed % 5)
        ref = reference_from_admm(X, Y, 0.5 * lambda_max(X, Y))
        B = None
        for i, t in reversed(list(enumerate(rule_thresholds(RuleKind.PSRplus, ref, X, Y), 1))):
            lam = 1.01 * t.value
            if lam >= ref.lambda0:
                continue
            B = solve_primal(X, Y, lam)
            assert rank_eps(B) <= i - 1
            checks += 1
    assert checks > 50


# --- certificates -------------------------------------------------------

def test_psr_certificate_toy(toy):
    cert = rule_certificate(RuleKind.PSR, reference_at_lambda_max(*toy), *toy)
    assert len(cert.intervals) == 1
    iv = cert.intervals[0]
    assert iv.lower == pytest.approx(2 * SQRT5 / (1 + SQRT5), abs=1e-9)
    assert iv.upper == 2.0 and iv.rank_bound == 1
    assert cert.thresholds[0] is None
    assert cert.bound_at(1.9) == 1 and cert.bound_at(1.3) is None


@pytest.mark.parametrize("rule", ALL_RULES)
def test_certificate_shape(rule, anchored):
    X, Y, ref = anchored
    cert = rule_certificate(rule, ref, X, Y)
    finite = [t for t in cert.clamped if t is not None]
    assert finite == sorted(finite, reverse=True)
    for iv in cert.intervals:
        assert 0 < iv.lower < iv.upper <= ref.lambda0
    bounds = [iv.rank_bound for iv in cert.intervals]
    assert bounds == sorted(bounds)
    for a, b in zip(cert.intervals, cert.intervals[1:]):
        assert a.lower == b.upper


@pytest.mark.parametrize("frac", [0.25, 0.5, 0.75])
def test_equal_singular_values_admit_no_rank_reduction(frac):
    X, Y = equal_singular_value_instance(30, 6, 5, scale=2.0, seed=1)
    ref = reference_from_admm(X, Y, frac * lambda_max(X, Y))
    for rule in ALL_RULES:
        cert = rule_certificate(rule, ref, X, Y)
        assert all(iv.rank_bound >= 5 for iv in cert.intervals), rule


def test_psri_rejected_at_lambda_max(toy):
    ref = reference_at_lambda_max(*toy)
    for rule in (RuleKind.PSRi, RuleKind.PSRplus):
        with pytest.raises(ReferenceError):
            rule_certificate(rule, ref, *toy)


def test_threshold_index_range(toy):
    with pytest.raises(ValueError):
        psr_threshold(3, reference_at_lambda_max(*toy), *toy)


def test_rule_parse():
    assert RuleKind.parse("PSR+") is RuleKind.PSRplus
    assert RuleKind.parse(" psrfn ") is RuleKind.PSRfn
    with pytest.raises(ValueError):
        RuleKind.parse("PSRx")


# --- estimate balls -----------------------------------------------------

def test_ball_formulas_toy(toy):
    _, Y = toy
    ref = toy_reference()
    d = 1.0  # lam = 0.5, lam0 = 1
    b = {r: estimate_ball(r, 0.5, ref, Y) for r in ALL_RULES}
    assert b[RuleKind.PSR].radius == pytest.approx(d * SQRT5)
    assert b[RuleKind.PSRi].radius == pytest.approx(1.0)
    np.testing.assert_allclose(b[RuleKind.PSRfn].center, np.eye(2) + 0.5 * Y)
    np.testing.assert_allclose(b[RuleKind.PSRplus].center, np.diag([1.0, 1.5]))
    assert b[RuleKind.PSRplus].radius == pytest.approx(0.5)


def test_ball_radius_orderings(anchored):
    _, Y, ref = anchored
    for lam in ref.lambda0 * np.array([0.05, 0.3, 0.8, 0.99]):
        b = {r: estimate_ball(r, lam, ref, Y) for r in ALL_RULES}
        assert b[RuleKind.PSRi].radius <= b[RuleKind.PSR].radius
        assert b[RuleKind.PSRplus].radius == 0.5 * b[RuleKind.PSRi].radius
        assert b[RuleKind.PSRfn].radius == pytest.approx(0.5 * b[RuleKind.PSR].radius, rel=1e-15)


def test_ball_radius_limit(anchored):
    _, Y, ref = anchored
    assert estimate_ball(RuleKind.PSR, ref.lambda0 * (1 - 1e-12), ref, Y).radius < 1e-9


def test_balls_inside_outer_ball(anchored):
    _, Y, ref = anchored
    for lam in ref.lambda0 * np.array([0.05, 0.3, 0.8]):
        b = {r: estimate_ball(r, lam, ref, Y) for r in ALL_RULES}
        outer = b[RuleKind.PSR]
        assert b[RuleKind.PSRplus].inside(b[RuleKind.PSRi], 1e-10)
        assert b[RuleKind.PSRi].inside(outer, 1e-10)
        assert b[RuleKind.PSRfn].inside(outer, 1e-10)


@pytest.mark.xfail(strict=True, reason="the smallest ball is not nested in the midpoint ball "
                   "whenever Y has components both along and across V1")
def test_smallest_ball_inside_midpoint_ball(toy):
    _, Y = toy
    ref = toy_reference()
    b3 = estimate_ball(RuleKind.PSRplus, 0.5, ref, Y)
    b2 = estimate_ball(RuleKind.PSRfn, 0.5, ref, Y)
    assert b3.inside(b2, 1e-10)


def test_ball_in_ball_excess_formula(anchored):
    _, Y, ref = anchored
    V1 = v1(ref, Y)
    ypar = np.sum(V1 * Y) / np.sum(V1 * V1) * V1
    a, b, c = np.linalg.norm(ypar), np.linalg.norm(Y - ypar), np.linalg.norm(Y)
    for lam in ref.lambda0 * np.array([0.1, 0.6]):
        d = 1 / lam - 1 / ref.lambda0
        b3 = estimate_ball(RuleKind.PSRplus, lam, ref, Y)
        b2 = estimate_ball(RuleKind.PSRfn, lam, ref, Y)
        excess = np.linalg.norm(b3.center - b2.center) + b3.radius - b2.radius
        assert excess == pytest.approx(0.5 * d * (a + b - c), rel=1e-8)


@pytest.mark.parametrize("frac", [0.1, 0.3, 0.45])
def test_dual_solution_lies_in_every_ball(anchored, frac):
    X, Y, ref = anchored
    lam = frac * ref.lambda_max
    C = solve_dual(X, Y, lam).C_star
    for rule in ALL_RULES:
        assert estimate_ball(rule, lam, ref, Y).contains(C, 1e-6), rule


def test_estimate_ball_requires_v1_below_lambda_max(toy):
    ref = reference_at_lambda_max(*toy)
    with pytest.raises(ReferenceError):
        estimate_ball(RuleKind.PSRi, 1.0, ref, toy[1])
    assert estimate_ball(RuleKind.PSR, 1.0, ref, toy[1]).radius == pytest.approx(0.5 * SQRT5)


def test_estimate_ball_distance():
    ball = EstimateBall(np.zeros((2, 2)), 1.0)
    assert ball.contains(np.eye(2) / 2) and not ball.contains(np.eye(2))
