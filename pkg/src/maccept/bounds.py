"""Exponential tail bounds for sums of M-acceptable variables, in log form.

All bounds are returned as natural logarithms; ``bound_clipped`` is only a
convenience, since ``exp(-(delta/2) n**alpha)`` underflows for modest ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from maccept.distributions import Distribution, moment_profile
from maccept.errors import DomainError


def _positive(name: str, v: float) -> None:
    if not (v > 0 and math.isfinite(v)):
        raise DomainError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class TailBoundQuery:
    n: int
    epsilon: float
    delta: float
    M: float
    K: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        _positive("delta", self.delta)
        _positive("K", self.K)
        if not (self.M >= 1 and math.isfinite(self.M)):
            raise DomainError(f"M must be >= 1, got {self.M}")
        if not math.isfinite(self.epsilon):
            raise DomainError(f"epsilon must be finite, got {self.epsilon}")


@dataclass(frozen=True)
class RateQuery:
    n: int
    alpha: float
    delta: float
    M: float
    K: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        _positive("alpha", self.alpha)
        _positive("delta", self.delta)
        _positive("K", self.K)
        if not (self.M >= 1 and math.isfinite(self.M)):
            raise DomainError(f"M must be >= 1, got {self.M}")


@dataclass(frozen=True)
class BoundResult:
    log_bound: float
    bound_clipped: float
    lambda_star: float

    @classmethod
    def from_log(cls, log_bound: float, lambda_star: float) -> "BoundResult":
        return cls(log_bound, 1.0 if log_bound >= 0 else math.exp(log_bound), lambda_star)


def lemma_log_bound(K: float, lam: float, delta: float, proof_tight: bool = False) -> float:
    """Log of the MGF bound ``E exp(lam (X - EX)) <= exp(K lam)``.

    ``proof_tight=True`` gives ``K lam / 2`` instead, the sharper constant the
    argument actually delivers; it is not what the stated result claims and is
    kept out of the acceptance checks.
    """
    _positive("K", K)
    _positive("delta", delta)
    if not 0 < lam <= delta / 2:
        raise DomainError(f"lambda must lie in (0, delta/2] = (0, {delta / 2}], got {lam}")
    return K * lam / 2 if proof_tight else K * lam


def theorem1_log_bound(q: TailBoundQuery) -> BoundResult:
    """``log(2M) - (n delta / 2)(epsilon - K)``, valid for ``epsilon >= K``."""
    if q.epsilon < q.K:
        raise DomainError(
            f"the two-sided tail bound needs epsilon >= K; got epsilon={q.epsilon}, K={q.K}"
        )
    log_b = math.log(2 * q.M) - (q.n * q.delta / 2) * (q.epsilon - q.K)
    return BoundResult.from_log(log_b, q.delta / 2)


def epsilon_n(n: int, alpha: float, K: float) -> float:
    return n ** (alpha - 1) + K


def theorem2_log_bound(q: RateQuery) -> tuple[BoundResult, float]:
    """Rate form at ``epsilon_n = n**(alpha-1) + K``: ``log(2M) - (delta/2) n**alpha``."""
    log_b = math.log(2 * q.M) - (q.delta / 2) * q.n ** q.alpha
    return BoundResult.from_log(log_b, q.delta / 2), epsilon_n(q.n, q.alpha, q.K)


def sung_log_bound(n: int, alpha: float, K_sung: float) -> tuple[float, float]:
    """Reference NA bound ``2 n**(-alpha)`` at ``2 sqrt(K_sung alpha log(n) / n)``.

    Returns ``(log_bound, epsilon)``.
    """
    if n < 2:
        raise DomainError(f"the reference bound needs n >= 2 (log n > 0), got {n}")
    _positive("alpha", alpha)
    _positive("K_sung", K_sung)
    log_n = math.log(n)
    return math.log(2.0) - alpha * log_n, 2.0 * math.sqrt(K_sung * alpha * log_n / n)


def chernoff_log_curve(lam, n: int, epsilon: float, K: float, M: float):
    """One-sided Markov bound ``log M - lam n (epsilon - K)``; vectorises over ``lam``."""
    lam = np.asarray(lam, dtype=float)
    out = math.log(M) - lam * n * (epsilon - K)
    return out if out.ndim else float(out)


def chernoff_grid_argmin(n: int, epsilon: float, K: float, M: float, delta: float,
                         points: int = 10_000) -> float:
    """Minimise the Chernoff curve over ``points`` equispaced values in ``(0, delta/2]``.

    The grid is ``(delta/2) * i / points`` for ``i = 1..points`` so the right
    endpoint is exactly ``delta/2``.  Ties go to the first minimiser.
    """
    lam = (delta / 2) * np.arange(1, points + 1) / points
    lam[-1] = delta / 2
    return float(lam[int(np.argmin(chernoff_log_curve(lam, n, epsilon, K, M)))])


@dataclass(frozen=True)
class ComparisonRow:
    n: int
    alpha: float
    eps_new: float
    log_bound_new: float
    eps_sung: float
    log_bound_sung: float
    k_ratio: float
    eps_shared: float
    log_bound_new_shared: float
    log_bound_ksung_shared: float


def compare_bounds(dist: Distribution, delta: float, n_grid, alpha: float, M: float = 1.0,
                   eps_shared: float | None = None) -> list[ComparisonRow]:
    """Rate bound against the reference NA bound over ``n_grid``.

    Each row also evaluates both exponents at a common level
    ``eps_shared >= K_sung`` (default ``K_sung``): once with ``K`` and once with
    ``K_sung`` substituted.  Reference columns are NaN for ``n < 2``.
    """
    prof = moment_profile(dist, delta)
    n_grid = list(n_grid)
    if not n_grid:
        raise DomainError("n_grid must be non-empty")
    shared = prof.k_sung if eps_shared is None else eps_shared
    if shared < prof.k_sung:
        raise DomainError(f"eps_shared must be >= K_sung={prof.k_sung}, got {shared}")
    rows = []
    for n in n_grid:
        res, eps_new = theorem2_log_bound(RateQuery(n, alpha, delta, M, prof.k_constant))
        if n >= 2:
            sung_log, eps_s = sung_log_bound(n, alpha, prof.k_sung)
        else:
            sung_log, eps_s = math.nan, math.nan
        new_shared = theorem1_log_bound(TailBoundQuery(n, shared, delta, M, prof.k_constant))
        ks_shared = theorem1_log_bound(TailBoundQuery(n, shared, delta, M, prof.k_sung))
        rows.append(ComparisonRow(
            n=n, alpha=alpha, eps_new=eps_new, log_bound_new=res.log_bound,
            eps_sung=eps_s, log_bound_sung=sung_log, k_ratio=prof.k_sung / prof.k_constant,
            eps_shared=shared, log_bound_new_shared=new_shared.log_bound,
            log_bound_ksung_shared=ks_shared.log_bound,
        ))
    return rows
