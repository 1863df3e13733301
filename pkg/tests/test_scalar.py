import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maccept.errors import DomainError
from maccept.scalar import (
    BoundVariant,
    Domain,
    abs_le_sq,
    exp_bound,
    grid,
    log_exp_bound,
    partial_series_check,
    scan_inequality,
    slack_at,
)

ABS, SQ = BoundVariant.ABS, BoundVariant.SQ
finite = st.floats(min_value=-700, max_value=700, allow_nan=False, allow_infinity=False)


def mp_bound(x, variant):
    x = mpmath.mpf(x)
    c = abs(x) / 2 if variant is ABS else x * x / 2
    return 1 + x + c * mpmath.exp(abs(x))


@pytest.mark.parametrize("x, variant, expected", [
    (0.0, ABS, 1.0),
    (1.0, ABS, 2 + math.e / 2),
    (1.0, SQ, 2 + math.e / 2),
    (-2.0, ABS, math.e ** 2 - 1),
])
def test_exp_bound_examples(x, variant, expected):
    assert exp_bound(x, variant) == pytest.approx(expected, rel=1e-15)


def test_exp_bound_rejects_non_finite():
    with pytest.raises(DomainError):
        exp_bound(float("nan"), ABS)
    with pytest.raises(DomainError):
        slack_at(float("inf"), SQ)


@pytest.mark.parametrize("x", [-700.0, -50.0, -1.5, -0.3, 1e-6, 0.7, 3.0, 400.0, 900.0, 5000.0])
@pytest.mark.parametrize("variant", [ABS, SQ])
def test_log_exp_bound_matches_multiprecision(x, variant):
    assert log_exp_bound(x, variant) == pytest.approx(float(mpmath.log(mp_bound(x, variant))),
                                                      rel=1e-13)


def test_slack_examples():
    assert slack_at(0.0, ABS).slack == 0.0
    assert slack_at(0.0, SQ).slack == 0.0
    r = slack_at(1.0, ABS)
    assert r.domain_tag is Domain.LINEAR
    assert r.slack == pytest.approx(2 - math.e / 2, rel=1e-14)
    big = slack_at(900.0, ABS)
    assert big.domain_tag is Domain.LOG
    assert big.exp_value == 900.0
    assert big.slack == pytest.approx(math.log(450.0), rel=1e-12)
    assert big.slack > 0


def test_linear_near_overflow_and_log_beyond():
    assert slack_at(700.0, ABS).domain_tag is Domain.LINEAR
    assert slack_at(700.0, SQ).domain_tag is Domain.LOG
    assert slack_at(-700.0, SQ).domain_tag is Domain.LOG
    assert slack_at(-700.0, SQ).slack > 0


@settings(max_examples=500, deadline=None)
@given(finite, st.sampled_from([ABS, SQ]))
def test_majorant_dominates(x, variant):
    r = slack_at(x, variant)
    assert r.slack >= -4 * np.spacing(max(abs(r.bound_value), abs(r.exp_value)))


@settings(max_examples=300, deadline=None)
# near 0 the true slack is O(x**3) and drops below one ulp of 1 for |x| < ~1e-5
@given(st.floats(min_value=1e-4, max_value=700).flatmap(lambda a: st.sampled_from([a, -a])),
       st.sampled_from([ABS, SQ]))
def test_slack_positive_away_from_origin(x, variant):
    assert slack_at(x, variant).slack > 0


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=-30, max_value=30, allow_nan=False))
def test_abs_le_sq_agrees_with_direct_difference(x):
    # the flag is computed without exponentials; compare against the majorants
    d = exp_bound(x, ABS) - exp_bound(x, SQ)
    if abs(d) > 1e-9 * exp_bound(x, SQ):
        assert bool(abs_le_sq(x)) == (d <= 0)


def test_crossover_actual_direction():
    # |x| - x**2 >= 0 on [-1, 1]: ABS is the larger majorant there
    x = np.array([-0.5, 0.25, 0.999, -1.5, 2.0, 30.0])
    assert abs_le_sq(x).tolist() == [False, False, False, True, True, True]
    assert abs_le_sq(np.array([0.0, 1.0, -1.0])).all()


def test_grid_hits_zero_exactly():
    g = grid(-30, 30, 1e-3)
    assert g.size == 60001
    assert 0.0 in g
    assert g[0] == -30 and g[-1] == 30
    assert grid(2.0, 2.0, 0.1).tolist() == [2.0]
    with pytest.raises(DomainError):
        grid(1.0, 0.0, 0.1)
    with pytest.raises(DomainError):
        grid(0.0, 1.0, 0.0)


def test_scan_examples():
    for variant in (ABS, SQ):
        rep = scan_inequality(-30, 30, 1e-3, 0, 0, variant)
        assert rep.violations == 0
        assert rep.min_slack == 0.0
        assert rep.argmin == 0.0
        assert rep.zero_slack_points == (0.0,)


def test_scan_degenerate_grid():
    rep = scan_inequality(0.5, 0.5, 0.1, 0, 0, ABS)
    assert rep.points == 1
    assert rep.argmin == 0.5


def test_scan_deterministic():
    a = scan_inequality(-1, 1, 0.1, 1000, 7, SQ)
    b = scan_inequality(-1, 1, 0.1, 1000, 7, SQ)
    assert a == b


def _series_oracle(x, N):
    # exact rational evaluation of both partial sums
    fx = Fraction(x)
    lhs = sum(fx ** n / math.factorial(n) for n in range(3, N + 1))
    rhs = sum(abs(fx) ** n / (2 * math.factorial(n - 1)) for n in range(3, N + 1))
    return lhs, rhs


@pytest.mark.parametrize("x, N", [(2.0, 5), (0.0, 3), (-3.0, 8), (9.5, 30), (-10.0, 30)])
def test_partial_series_against_rationals(x, N):
    lhs, rhs, ok = partial_series_check(x, N)
    elhs, erhs = _series_oracle(x, N)
    assert lhs == pytest.approx(float(elhs), rel=1e-13, abs=1e-300)
    assert rhs == pytest.approx(float(erhs), rel=1e-13, abs=1e-300)
    assert ok


def test_partial_series_examples():
    lhs, rhs, ok = partial_series_check(2.0, 5)
    assert lhs == pytest.approx(34 / 15, rel=1e-15)
    assert rhs == pytest.approx(4.0, rel=1e-15)
    assert ok
    assert partial_series_check(0.0, 3) == (0.0, 0.0, True)
    lhs, rhs, ok = partial_series_check(-3.0, 8)
    assert ok and rhs >= 0


def test_partial_series_rejects_small_N():
    with pytest.raises(DomainError):
        partial_series_check(1.0, 2)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=-50, max_value=50, allow_nan=False), st.integers(3, 60))
def test_partial_series_always_ok(x, N):
    assert partial_series_check(x, N)[2]
