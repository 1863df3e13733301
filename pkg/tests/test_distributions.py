import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from maccept.distributions import (
    Bernoulli,
    CenteredBernoulli,
    DiscreteTable,
    Gaussian,
    Laplace,
    Rademacher,
    Uniform,
    empirical_profile,
    from_dict,
    moment_profile,
    sample_iid,
)
from maccept.errors import DomainError, UnsupportedError

CONTINUOUS = [
    (Uniform(-1, 1), stats.uniform(-1, 2)),
    (Uniform(0.5, 2.0), stats.uniform(0.5, 1.5)),
    (Uniform(-3.0, -1.0), stats.uniform(-3.0, 2.0)),
    (Laplace(1.0), stats.laplace(0, 1.0)),
    (Laplace(0.5), stats.laplace(0, 0.5)),
    (Gaussian(1.0), stats.norm(0, 1.0)),
    (Gaussian(0.7, mu=-0.4), stats.norm(-0.4, 0.7)),
]

DISCRETE = [
    Rademacher(),
    Bernoulli(0.3),
    CenteredBernoulli(0.3),
    DiscreteTable((-1.0, 0.0, 2.0), (0.3, 0.5, 0.2)),
]

ALL = [d for d, _ in CONTINUOUS] + DISCRETE


def quad_expect(frozen, f=None, log_f=None):
    """E f(X) by adaptive quadrature; ``log_f`` integrates exp(log_f + logpdf) without overflow."""
    lo, hi = frozen.support()
    if log_f is not None:
        def integrand(x):
            return math.exp(log_f(x) + frozen.logpdf(x))
    else:
        def integrand(x):
            return f(x) * frozen.pdf(x)
    # split at 0 where |x| has its kink
    parts = [(lo, 0.0), (0.0, hi)] if lo < 0 < hi else [(lo, hi)]
    return sum(integrate.quad(integrand, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
               for a, b in parts)


@pytest.mark.parametrize("dist, frozen", CONTINUOUS, ids=lambda d: getattr(d, "kind", ""))
@pytest.mark.parametrize("delta", [0.1, 0.5, 0.9])
def test_continuous_moments_against_quadrature(dist, frozen, delta):
    if delta >= dist.max_delta():
        pytest.skip("delta outside the finiteness range")
    p = moment_profile(dist, delta)
    assert p.mean == pytest.approx(quad_expect(frozen, lambda x: x), abs=1e-10)
    assert p.second_abs_moment == pytest.approx(quad_expect(frozen, lambda x: x * x), rel=1e-9)
    assert p.abs_exp_moment == pytest.approx(
        quad_expect(frozen, log_f=lambda x: delta * abs(x)), rel=1e-9)


@pytest.mark.parametrize("dist, frozen", CONTINUOUS, ids=lambda d: getattr(d, "kind", ""))
def test_continuous_mgf_against_quadrature(dist, frozen):
    for lam in (-0.4, 0.3):
        assert dist.mgf(lam) == pytest.approx(quad_expect(frozen, log_f=lambda x: lam * x),
                                              rel=1e-9)


@pytest.mark.parametrize("dist", DISCRETE, ids=lambda d: d.kind)
def test_discrete_moments_by_enumeration(dist):
    v, p = dist.support()
    delta = 0.7
    prof = moment_profile(dist, delta)
    assert prof.mean == pytest.approx(sum(a * b for a, b in zip(v, p)), abs=1e-15)
    assert prof.second_abs_moment == pytest.approx(sum(a * a * b for a, b in zip(v, p)), rel=1e-14)
    assert prof.abs_exp_moment == pytest.approx(
        sum(math.exp(delta * abs(a)) * b for a, b in zip(v, p)), rel=1e-14)
    assert dist.mgf(0.3) == pytest.approx(sum(math.exp(0.3 * a) * b for a, b in zip(v, p)),
                                          rel=1e-14)


def test_profile_examples():
    p = moment_profile(Rademacher(), 1.0)
    assert (p.mean, p.second_abs_moment) == (0.0, 1.0)
    assert p.abs_exp_moment == pytest.approx(math.e, rel=1e-15)
    assert p.k_constant == pytest.approx(math.e, rel=1e-15)

    p = moment_profile(Uniform(-1, 1), 1.0)
    assert p.second_abs_moment == pytest.approx(1 / 3, rel=1e-15)
    assert p.abs_exp_moment == pytest.approx(math.e - 1, rel=1e-15)
    assert p.k_constant == pytest.approx((math.e - 1) / math.sqrt(3), rel=1e-14)
    assert p.k_constant == pytest.approx(0.99205048, abs=1e-8)

    p = moment_profile(Laplace(1.0), 0.5)
    assert p.second_abs_moment == 2.0
    assert p.abs_exp_moment == 2.0
    assert p.k_constant == pytest.approx(2 * math.sqrt(2), rel=1e-15)


def test_laplace_divergence_is_reported():
    with pytest.raises(DomainError, match="abs_exp_moment diverges"):
        moment_profile(Laplace(1.0), 1.0)


@pytest.mark.parametrize("bad", [
    lambda: Uniform(1, 1), lambda: Bernoulli(1.5), lambda: Laplace(0.0), lambda: Gaussian(-1.0),
    lambda: DiscreteTable((0.0, 1.0), (0.5, 0.6)), lambda: DiscreteTable((0.0,), (0.5, 0.5)),
])
def test_invalid_parameters(bad):
    with pytest.raises(DomainError):
        bad()


def test_non_positive_delta_rejected():
    with pytest.raises(DomainError):
        moment_profile(Rademacher(), 0.0)


def test_continuous_has_no_support():
    with pytest.raises(UnsupportedError):
        Gaussian(1.0).support()


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.kind)
def test_profile_invariants(dist):
    deltas = [d for d in (0.05, 0.1, 0.3, 0.5, 0.8) if d < dist.max_delta()]
    prev = None
    for delta in deltas:
        p = moment_profile(dist, delta)
        assert p.k_sung / p.k_constant == 2.0
        assert p.k_sung == 2 * p.k_constant
        assert p.abs_exp_moment >= 1.0
        assert p.k_constant > 0
        # Jensen: E exp(delta|X|) >= exp(delta E|X|) >= exp(delta |EX|)
        assert p.abs_exp_moment >= math.exp(delta * abs(p.mean)) * (1 - 1e-15)
        if prev is not None:
            assert p.abs_exp_moment >= prev.abs_exp_moment
            assert p.k_constant >= prev.k_constant
        prev = p


def test_discrete_table_merges_and_sorts():
    t = DiscreteTable((2.0, 0.0, 2.0), (0.25, 0.5, 0.25))
    assert t.values == (0.0, 2.0)
    assert t.probs == (0.5, 0.5)


def test_from_dict_round_trip():
    for d in ALL:
        assert from_dict(d.to_dict()) == d
    with pytest.raises(DomainError, match="unknown key"):
        from_dict({"kind": "laplace", "scal": 1.0})
    with pytest.raises(DomainError, match="unknown distribution"):
        from_dict({"kind": "cauchy"})


def test_sample_iid_support_and_determinism():
    x = sample_iid(Rademacher(), 5, 11)
    assert x.shape == (5,)
    assert set(np.unique(x)) <= {-1.0, 1.0}
    assert np.array_equal(sample_iid(Uniform(), 100, 3), sample_iid(Uniform(), 100, 3))
    assert not np.array_equal(sample_iid(Uniform(), 100, 3), sample_iid(Uniform(), 100, 4))
    with pytest.raises(DomainError):
        sample_iid(Rademacher(), 0, 1)


def test_uniform_sample_mean_clt():
    x = sample_iid(Uniform(-1, 1), 10**6, 2024)
    assert abs(x.mean()) < 3 * (1 / math.sqrt(3)) / 1e3


def test_empirical_profile_examples():
    p = empirical_profile([1, -1, 1, 1], 1.0)
    assert p.second_abs_moment == 1.0
    assert p.abs_exp_moment == pytest.approx(math.e, rel=1e-15)
    assert p.k_constant == pytest.approx(math.e, rel=1e-15)
    assert empirical_profile([0, 0, 0], 0.3).k_constant == 0.0
    with pytest.raises(DomainError):
        empirical_profile([], 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=1, max_size=50), st.floats(0.01, 2.0))
def test_empirical_k_ratio_exact(xs, delta):
    p = empirical_profile(xs, delta)
    assert p.k_sung == 2 * p.k_constant


def _standard_errors(x, delta):
    """Delta-method standard errors of the plug-in estimates."""
    m = x.size
    x2 = x * x
    e = np.exp(delta * np.abs(x))
    se_mean = x.std(ddof=1) / math.sqrt(m)
    se_x2 = x2.std(ddof=1) / math.sqrt(m)
    se_e = e.std(ddof=1) / math.sqrt(m)
    # K = sqrt(A) * B, gradient (B / (2 sqrt A), sqrt A)
    A, B = x2.mean(), e.mean()
    g = np.array([B / (2 * math.sqrt(A)), math.sqrt(A)])
    cov = np.cov(np.vstack([x2, e])) / m
    se_k = math.sqrt(float(g @ cov @ g))
    return se_mean, se_x2, se_e, se_k


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.kind)
def test_empirical_converges_to_analytic(dist):
    delta = 0.4
    x = sample_iid(dist, 10**6, 99)
    emp = empirical_profile(x, delta)
    ana = moment_profile(dist, delta)
    # floor for laws where a field is constant (e.g. |X| == 1) and only rounding remains
    se_mean, se_x2, se_e, se_k = (max(s, 1e-12) for s in _standard_errors(x, delta))
    assert abs(emp.mean - ana.mean) <= 3 * se_mean
    assert abs(emp.second_abs_moment - ana.second_abs_moment) <= 3 * se_x2
    assert abs(emp.abs_exp_moment - ana.abs_exp_moment) <= 3 * se_e
    assert abs(emp.k_constant - ana.k_constant) <= 3 * se_k


def test_rademacher_k_estimate():
    x = sample_iid(Rademacher(), 10**6, 5)
    emp = empirical_profile(x, 1.0)
    # |x| == 1 identically, so every draw gives K = e exactly
    assert emp.k_constant == pytest.approx(math.e, rel=1e-12)
