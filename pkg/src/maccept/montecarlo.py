"""Seeded Monte Carlo estimates and the verification suites built on them.

Tail probabilities come with exact (Clopper-Pearson) intervals and MGFs with
CLT intervals.  Wherever an exact oracle exists it replaces simulation.
Verdicts are conservative: a row only FAILs when even the lower confidence
limit of the left side exceeds the bound.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from scipy import stats

from maccept import rng
from maccept.bounds import TailBoundQuery, lemma_log_bound, theorem1_log_bound
from maccept.distributions import DiscreteTable, Distribution, Gaussian, moment_profile
from maccept.errors import DomainError, SizeError
from maccept.families import IID, Family, marginal_profile
from maccept.oracle import ExactPMF, exact_mgf, exact_sum_pmf, exact_tail

CI_LEVEL = 0.99
HEAVY_TAIL_KURTOSIS = 50.0


class Verdict(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    VACUOUS = "VACUOUS"


def clopper_pearson(hits: int, reps: int, level: float = CI_LEVEL,
                    sided: str = "two") -> tuple[float, float]:
    """Exact binomial interval for ``hits`` successes in ``reps`` trials.

    ``sided="upper"`` returns the one-sided interval ``[0, u]``.
    """
    if not 0 <= hits <= reps or reps < 1:
        raise DomainError(f"need 0 <= hits <= reps and reps >= 1, got {hits}/{reps}")
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    if sided == "two":
        a = (1 - level) / 2
        lo = 0.0 if hits == 0 else float(stats.beta.ppf(a, hits, reps - hits + 1))
    elif sided == "upper":
        a = 1 - level
        lo = 0.0
    else:
        raise ValueError(f"sided must be 'two' or 'upper', got {sided!r}")
    hi = 1.0 if hits == reps else float(stats.beta.ppf(1 - a, hits + 1, reps - hits))
    return lo, hi


@dataclass(frozen=True)
class TailEstimate:
    hits: int
    reps: int
    p_hat: float
    ci_low: float
    ci_high: float
    ci_level: float
    seed: int

    @classmethod
    def from_hits(cls, hits: int, reps: int, seed: int, level: float = CI_LEVEL,
                  sided: str = "two") -> "TailEstimate":
        lo, hi = clopper_pearson(hits, reps, level, sided)
        return cls(hits, reps, hits / reps, lo, hi, level, seed)


class MgfEstimate(NamedTuple):
    mean: float
    se: float
    heavy_tailed: bool


@dataclass(frozen=True)
class VerificationRow:
    case: str
    lhs: float
    lhs_low: float
    lhs_high: float
    rhs: float
    log_rhs: float
    margin: float
    verdict: Verdict
    exact: bool
    params: dict[str, Any] = field(default_factory=dict)


def judge(lhs_low: float, rhs: float, probability: bool) -> Verdict:
    if probability and rhs >= 1.0:
        return Verdict.VACUOUS
    return Verdict.FAIL if lhs_low > rhs else Verdict.PASS


def _centre(spec: Family) -> float:
    return math.fsum(spec.marginal(i).mean for i in range(spec.n))


def estimate_tail(spec: Family, epsilon: float, reps: int, seed: int, workers: int = 1,
                  ci_level: float = CI_LEVEL) -> TailEstimate:
    """Count replications with ``|sum(X_i - E X_i)| > n epsilon``."""
    if reps < 1000:
        raise DomainError(f"reps must be at least 1000, got {reps}")
    centre = _centre(spec)
    threshold = spec.n * epsilon

    def block(b: int, m: int) -> int:
        x = spec.sample_many(rng.stream(seed, rng.TAIL, b), m)
        return int(np.count_nonzero(np.abs(x.sum(axis=1) - centre) > threshold))

    hits = sum(rng.map_blocks(block, reps, workers))
    return TailEstimate.from_hits(hits, reps, seed, ci_level)


def estimate_mgf(dist: Distribution, lam: float, centered: bool, reps: int, seed: int,
                 delta: float | None = None, workers: int = 1) -> MgfEstimate:
    """Sample mean of ``exp(lam (X - c))`` with its CLT standard error.

    When ``delta`` is given, ``2 |lam| <= delta`` is enforced so that the
    summands have finite variance.  ``heavy_tailed`` flags an empirical
    excess kurtosis above 50, where the CLT error is not to be trusted.
    """
    if delta is not None and 2 * abs(lam) > delta:
        raise DomainError(f"need 2|lambda| <= delta for a finite-variance estimate; "
                          f"got lambda={lam}, delta={delta}")
    if reps < 2:
        raise DomainError(f"reps must be at least 2, got {reps}")
    shift = dist.mean if centered else 0.0

    def block(b: int, m: int) -> tuple[float, ...]:
        w = np.exp(lam * (dist.sample(rng.stream(seed, rng.MGF, b), m) - shift))
        w2 = w * w
        return math.fsum(w), math.fsum(w2), math.fsum(w2 * w), math.fsum(w2 * w2)

    parts = rng.map_blocks(block, reps, workers)
    s1, s2, s3, s4 = (math.fsum(p[k] for p in parts) / reps for k in range(4))
    var = max(0.0, s2 - s1 * s1)
    se = math.sqrt(var * reps / (reps - 1) / reps)
    heavy = False
    if var > 0:
        m4 = s4 - 4 * s1 * s3 + 6 * s1 * s1 * s2 - 3 * s1 ** 4
        heavy = m4 / (var * var) - 3.0 > HEAVY_TAIL_KURTOSIS
    return MgfEstimate(s1, se, heavy)


def verify_lemma(dist: Distribution, delta: float, lambda_grid, reps: int, seed: int,
                 workers: int = 1, proof_tight: bool = False,
                 ci_level: float = CI_LEVEL) -> list[VerificationRow]:
    """Check ``E exp(lam (X - EX)) <= exp(K lam)`` for each ``lam`` in the grid.

    Finite-support laws use the exact MGF; the others use the upper
    one-sided CLT limit of a Monte Carlo mean.
    """
    lambda_grid = list(lambda_grid)
    for lam in lambda_grid:
        if not 0 < lam <= delta / 2:
            raise DomainError(f"lambda grid must lie in (0, delta/2]; got {lam} for delta={delta}")
    prof = moment_profile(dist, delta)
    z = float(stats.norm.ppf(ci_level))
    rows = []
    for lam in lambda_grid:
        log_rhs = lemma_log_bound(prof.k_constant, lam, delta, proof_tight)
        rhs = math.exp(log_rhs)
        if dist.finite_support:
            v = exact_mgf(dist, lam, centered=True)
            lo = hi = v
            exact, se = True, 0.0
        else:
            est = estimate_mgf(dist, lam, True, reps, seed, delta=delta, workers=workers)
            v, se = est.mean, est.se
            lo, hi = v - z * se, v + z * se
            exact = False
        rows.append(VerificationRow(
            case=f"lemma:{dist.label()}:delta={delta!r}:lambda={lam!r}",
            lhs=v, lhs_low=lo, lhs_high=hi, rhs=rhs, log_rhs=log_rhs, margin=rhs - hi,
            verdict=judge(lo, rhs, probability=False), exact=exact,
            params={"dist": dist.label(), "delta": delta, "lambda": lam, "k": prof.k_constant,
                    "se": se},
        ))
    return rows


def exact_family_tail(spec: Family, epsilon: float) -> float | None:
    """Exact ``P(|S - ES| > n epsilon)`` when an oracle covers ``spec``, else None."""
    centre = _centre(spec)
    threshold = spec.n * epsilon
    if isinstance(spec, IID):
        if not spec.dist.finite_support:
            return None
        try:
            pmf = exact_sum_pmf(spec.dist, spec.n)
        except SizeError:
            return None
        return exact_tail(pmf, centre, threshold)
    law = spec.sum_law()
    if isinstance(law, DiscreteTable):
        return exact_tail(ExactPMF.from_dist(law), centre, threshold)
    if isinstance(law, Gaussian):
        return float(2 * stats.norm.sf(threshold / law.sigma))
    return None


def verify_theorem1(spec: Family, delta: float, epsilon_grid, reps: int, seed: int,
                    workers: int = 1, use_oracle: bool = True,
                    ci_level: float = CI_LEVEL) -> list[VerificationRow]:
    """Check the two-sided tail bound at each ``epsilon`` (each must be ``>= K``).

    The left side is an exact tail when an oracle applies, otherwise the
    Clopper-Pearson interval of a Monte Carlo estimate.
    """
    if not spec.identically_distributed():
        raise DomainError("the tail bound needs identically distributed coordinates")
    if delta / 2 > spec.declared_delta:
        raise DomainError(f"delta/2 must not exceed the family's declared_delta "
                          f"({spec.declared_delta}); got delta={delta}")
    prof = marginal_profile(spec, 0, delta)
    epsilon_grid = list(epsilon_grid)
    for eps in epsilon_grid:
        if eps < prof.k_constant:
            raise DomainError(f"epsilon={eps} is below K={prof.k_constant}; the bound needs epsilon >= K")
    rows = []
    for j, eps in enumerate(epsilon_grid):
        res = theorem1_log_bound(TailBoundQuery(spec.n, eps, delta, spec.declared_M, prof.k_constant))
        exact_v = exact_family_tail(spec, eps) if use_oracle else None
        if exact_v is not None:
            lhs = lo = hi = exact_v
            is_exact = True
        else:
            est = estimate_tail(spec, eps, reps, seed, workers, ci_level)
            lhs, lo, hi = est.p_hat, est.ci_low, est.ci_high
            is_exact = False
        rows.append(VerificationRow(
            case=f"theorem1:{spec.label()}:delta={delta!r}:epsilon={eps!r}",
            lhs=lhs, lhs_low=lo, lhs_high=hi, rhs=res.bound_clipped, log_rhs=res.log_bound,
            margin=res.bound_clipped - hi, verdict=judge(lo, res.bound_clipped, probability=True),
            exact=is_exact,
            params={"family": spec.label(), "n": spec.n, "delta": delta, "epsilon": eps,
                    "k": prof.k_constant, "m": spec.declared_M},
        ))
    return rows
