import itertools
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from maccept.distributions import (
    Bernoulli,
    CenteredBernoulli,
    DiscreteTable,
    Rademacher,
    Uniform,
)
from maccept.errors import DomainError, SizeError, UnsupportedError
from maccept.oracle import (
    ExactPMF,
    binomial_pmf,
    convolve,
    exact_mgf,
    exact_sum_pmf,
    exact_tail,
    exact_upper_tail,
    table_pmf,
)

FINITE = [
    Rademacher(),
    Bernoulli(0.3),
    CenteredBernoulli(0.05),
    DiscreteTable((-1.0, 0.0, 2.0), (0.3, 0.5, 0.2)),
    DiscreteTable((0.0, 0.3, 1.7), (0.2, 0.5, 0.3)),
]


def brute_force(dist, n):
    """Law of the sum by enumerating every outcome vector with rational weights."""
    v, p = dist.support()
    atoms = [(Fraction(float(a)), Fraction(float(b))) for a, b in zip(v, p)]
    law = defaultdict(Fraction)
    for combo in itertools.product(atoms, repeat=n):
        law[sum(a for a, _ in combo)] += math.prod(b for _, b in combo)
    return law


def test_rademacher_pair():
    pmf = exact_sum_pmf(Rademacher(), 2)
    assert pmf.support.tolist() == [-2.0, 0.0, 2.0]
    assert pmf.probs.tolist() == [0.25, 0.5, 0.25]


@pytest.mark.parametrize("dist", FINITE, ids=lambda d: d.label())
@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_sum_law_matches_enumeration(dist, n):
    pmf = exact_sum_pmf(dist, n)
    law = brute_force(dist, n)
    keys = sorted(k for k, w in law.items() if w > 0)
    assert len(keys) == pmf.support.size
    assert np.allclose(pmf.support, [float(k) for k in keys], rtol=0, atol=1e-12)
    assert np.allclose(pmf.probs, [float(law[k]) for k in keys], rtol=1e-12, atol=0)


@pytest.mark.parametrize("trials, q", [(1, 0.5), (10, 0.3), (30, 0.05), (30, 2 / 3), (200, 0.01)])
def test_binomial_matches_scipy(trials, q):
    pmf = binomial_pmf(trials, q)
    ref = stats.binom.pmf(pmf.support.astype(int), trials, q)
    assert np.allclose(pmf.probs, ref, rtol=1e-10, atol=1e-300)
    assert math.fsum(pmf.probs) == pytest.approx(1.0, abs=1e-14)
    assert binomial_pmf(0, 0.3).support.tolist() == [0.0]


@pytest.mark.parametrize("dist", FINITE, ids=lambda d: d.label())
def test_moments_scale_with_n(dist):
    for n in (1, 4, 13):
        pmf = exact_sum_pmf(dist, n)
        assert pmf.mean == pytest.approx(n * dist.mean, abs=1e-12)
        assert pmf.variance == pytest.approx(n * dist.variance, rel=1e-10)


def test_convolution_associative_and_commutative():
    a = table_pmf(DiscreteTable((0.0, 0.3, 1.7), (0.2, 0.5, 0.3)))
    b = table_pmf(DiscreteTable((-1.0, 2.0), (0.4, 0.6)))
    c = ExactPMF.from_dist(Bernoulli(0.3))
    left = convolve(convolve(a, b), c)
    right = convolve(a, convolve(b, c))
    assert np.allclose(left.support, right.support, atol=1e-12)
    assert np.allclose(left.probs, right.probs, rtol=1e-12)
    ab, ba = convolve(a, b), convolve(b, a)
    assert np.allclose(ab.support, ba.support, atol=1e-12)
    assert np.allclose(ab.probs, ba.probs, rtol=1e-12)


def test_non_lattice_merges_equal_sums():
    # 0.1 + 0.2 and 0.3 + 0 collide only up to rounding
    t = DiscreteTable((0.0, 0.1, 0.2, 0.3, math.pi), (0.2, 0.2, 0.2, 0.2, 0.2))
    pmf = exact_sum_pmf(t, 2)
    assert np.all(np.diff(pmf.support) > 1e-6)
    law = brute_force(t, 2)
    merged = defaultdict(float)
    for k, w in law.items():
        merged[round(float(k), 9)] += float(w)
    assert pmf.support.size == len(merged)
    assert np.allclose(pmf.probs, [merged[k] for k in sorted(merged)], rtol=1e-12)


def test_tail_examples():
    pmf = exact_sum_pmf(Rademacher(), 2)
    assert exact_tail(pmf, 0.0, 1.0) == 0.5
    assert exact_tail(pmf, 0.0, 2.0) == 0.0
    assert exact_upper_tail(pmf, 0.0, 1.0) == 0.25
    b = binomial_pmf(30, 0.05)
    assert exact_upper_tail(b, 1.5, 3.5) == pytest.approx(stats.binom.sf(5, 30, 0.05), rel=1e-10)
    assert exact_tail(b, 1.5, 3.5) == pytest.approx(stats.binom.sf(5, 30, 0.05), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(FINITE), st.integers(1, 12), st.floats(0, 5), st.floats(0, 5))
def test_tail_monotone_and_split(dist, n, t1, t2):
    pmf = exact_sum_pmf(dist, n)
    c = n * dist.mean
    lo, hi = sorted((t1, t2))
    assert exact_tail(pmf, c, hi) <= exact_tail(pmf, c, lo) + 1e-15
    lower = math.fsum(pmf.probs[(pmf.support - c) < -lo])
    assert exact_tail(pmf, c, lo) == pytest.approx(exact_upper_tail(pmf, c, lo) + lower, abs=1e-14)


def test_mgf_examples():
    assert exact_mgf(Rademacher(), 0.05) == pytest.approx(math.cosh(0.05), rel=1e-15)
    assert exact_mgf(Rademacher(), 0.05) == pytest.approx(1.00125026, abs=1e-8)
    assert exact_mgf(Bernoulli(0.5), 1.0) == pytest.approx((1 + math.e) / 2, rel=1e-15)
    assert exact_mgf(Bernoulli(0.5), 1.0, centered=True) == pytest.approx(
        math.cosh(0.5), rel=1e-15)
    for dist in FINITE:
        assert exact_mgf(dist, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert exact_mgf(dist, 0.3) == pytest.approx(dist.mgf(0.3), rel=1e-13)


def test_sum_mgf_is_power():
    dist = FINITE[3]
    pmf = exact_sum_pmf(dist, 6)
    assert math.fsum(pmf.probs * np.exp(0.2 * pmf.support)) == pytest.approx(
        dist.mgf(0.2) ** 6, rel=1e-12)


def test_errors():
    with pytest.raises(UnsupportedError):
        exact_sum_pmf(Uniform(), 3)
    with pytest.raises(UnsupportedError):
        exact_mgf(Uniform(), 0.1)
    with pytest.raises(DomainError):
        exact_sum_pmf(Rademacher(), 0)
    with pytest.raises(SizeError):
        exact_sum_pmf(Bernoulli(0.5), 10**8)
    with pytest.raises(SizeError):
        exact_sum_pmf(DiscreteTable(tuple(math.sqrt(k) for k in range(2, 12)), (0.1,) * 10), 40)
    with pytest.raises(DomainError):
        ExactPMF(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    with pytest.raises(DomainError):
        ExactPMF(np.array([0.0, 1.0]), np.array([0.5, 0.6]))
