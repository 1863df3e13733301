"""Majorants of the exponential and their numerical verification.

Two majorants of ``e**x`` are provided:

* ``ABS``: ``1 + x + (|x|/2) e**|x|``
* ``SQ``:  ``1 + x + (x**2/2) e**|x|``

Both hold on the whole real line.  Where the majorant would overflow a
double, comparisons are done on logarithms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from maccept import rng
from maccept.errors import DomainError

# log(DBL_MAX) is about 709.78; leave headroom for the additive terms.
LOG_OVERFLOW = 709.0
ULP_TOLERANCE = 4


class BoundVariant(enum.Enum):
    ABS = "abs"
    SQ = "sq"


class Domain(enum.Enum):
    LINEAR = "linear"
    LOG = "log"


@dataclass(frozen=True)
class SlackReport:
    x: float
    exp_value: float
    bound_value: float
    slack: float
    domain_tag: Domain


@dataclass(frozen=True)
class ScanReport:
    variant: BoundVariant
    points: int
    violations: int
    min_slack: float
    argmin: float
    zero_slack_points: tuple[float, ...]


def _check_finite(x: float) -> None:
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x!r}")


def _coef(ax, variant: BoundVariant):
    return ax / 2 if variant is BoundVariant.ABS else ax * ax / 2


def exp_bound(x: float, variant: BoundVariant) -> float:
    """Evaluate the majorant of ``e**x`` selected by ``variant``.

    May return ``inf`` once ``e**|x|`` overflows; use :func:`log_exp_bound`
    for large arguments.
    """
    _check_finite(x)
    ax = abs(x)
    with np.errstate(over="ignore"):
        tail = _coef(ax, variant) * np.exp(ax)
    return float(1.0 + x + tail)


def log_exp_bound(x, variant: BoundVariant):
    """Logarithm of the majorant, stable for every finite ``x``.

    Works elementwise on arrays.  The sign of ``1 + x`` selects between a
    log-sum-exp (non-negative) and a log1p correction (negative).
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    a = 1.0 + x
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = np.log(_coef(ax, variant)) + ax
        pos = np.logaddexp(np.log(np.where(a >= 0, a, 1.0)), t)
        neg = t + np.log1p(np.where(a < 0, a, 0.0) * np.exp(-t))
    out = np.where(a >= 0, pos, neg)
    out = np.where(x == 0, 0.0, out)
    return out if out.ndim else float(out)


def _slack_arrays(x: np.ndarray, variant: BoundVariant):
    """Vectorised core of :func:`slack_at`; returns (exp, bound, slack, is_log, tol)."""
    ax = np.abs(x)
    logb = np.asarray(log_exp_bound(x, variant))
    is_log = (logb > LOG_OVERFLOW) | (x > LOG_OVERFLOW)
    with np.errstate(over="ignore"):
        lin_exp = np.exp(np.where(is_log, 0.0, x))
        lin_bound = 1.0 + x + _coef(ax, variant) * np.exp(np.where(is_log, 0.0, ax))
    exp_v = np.where(is_log, x, lin_exp)
    bound_v = np.where(is_log, logb, lin_bound)
    slack = bound_v - exp_v
    tol = ULP_TOLERANCE * np.spacing(np.maximum(np.abs(bound_v), np.abs(exp_v)))
    return exp_v, bound_v, slack, is_log, tol


def slack_at(x: float, variant: BoundVariant) -> SlackReport:
    """Compare ``e**x`` with its majorant at one point.

    In the ``LOG`` domain, ``exp_value`` is ``x`` and ``bound_value`` is the
    log of the majorant.
    """
    _check_finite(x)
    e, b, s, is_log, _ = _slack_arrays(np.array([float(x)]), variant)
    return SlackReport(
        x=float(x),
        exp_value=float(e[0]),
        bound_value=float(b[0]),
        slack=float(s[0]),
        domain_tag=Domain.LOG if is_log[0] else Domain.LINEAR,
    )


def grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Regular grid from ``lo`` to ``hi`` inclusive.

    When both ends are integer multiples of ``step`` the points are
    ``k * step`` so that zero is hit exactly.
    """
    if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(step)):
        raise DomainError("grid bounds and step must be finite")
    if step <= 0:
        raise DomainError(f"step must be positive, got {step}")
    if hi < lo:
        raise DomainError(f"empty grid: lo={lo} > hi={hi}")
    if lo == hi:
        return np.array([float(lo)])
    klo, khi = lo / step, hi / step
    if abs(klo - round(klo)) < 1e-9 and abs(khi - round(khi)) < 1e-9:
        return np.arange(round(klo), round(khi) + 1, dtype=float) * step
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + np.arange(count, dtype=float) * step


def scan_points(
    lo: float, hi: float, step: float, random_points: int, seed: int,
    random_lo: float = -700.0, random_hi: float = 700.0,
) -> np.ndarray:
    """Grid points followed by seeded uniform points in ``[random_lo, random_hi]``."""
    g = grid(lo, hi, step)
    if random_points <= 0:
        return g
    extra = rng.stream(seed, rng.SCALAR).uniform(random_lo, random_hi, size=random_points)
    return np.concatenate([g, extra])


def scan_inequality(
    lo: float, hi: float, step: float, random_points: int, seed: int,
    variant: BoundVariant, random_lo: float = -700.0, random_hi: float = 700.0,
) -> ScanReport:
    """Check the majorant on a grid plus random points.

    A point is a violation when its slack is below ``-4`` ULP of the larger
    side.  The scan is a single vectorised pass; the minimum is reduced over
    the whole point set, so sharding would not change it.
    """
    x = scan_points(lo, hi, step, random_points, seed, random_lo, random_hi)
    _, _, slack, _, tol = _slack_arrays(x, variant)
    i = int(np.argmin(slack))
    zeros = tuple(float(v) for v in x[slack == 0.0])
    return ScanReport(
        variant=variant,
        points=int(x.size),
        violations=int(np.count_nonzero(slack < -tol)),
        min_slack=float(slack[i]),
        argmin=float(x[i]),
        zero_slack_points=zeros,
    )


def slack_table(x: np.ndarray, variant: BoundVariant) -> list[SlackReport]:
    e, b, s, is_log, _ = _slack_arrays(np.asarray(x, dtype=float), variant)
    return [
        SlackReport(float(xi), float(ei), float(bi), float(si),
                    Domain.LOG if li else Domain.LINEAR)
        for xi, ei, bi, si, li in zip(x, e, b, s, is_log)
    ]


def abs_le_sq(x) -> np.ndarray:
    """Whether the ``ABS`` majorant is no larger than ``SQ`` at ``x``.

    The two differ by ``(e**|x| / 2) (|x| - x**2)``, so only the sign of
    ``|x| - x**2`` matters and no exponential is evaluated.
    """
    ax = np.abs(np.asarray(x, dtype=float))
    return ax - ax * ax <= 0


def partial_series_check(x: float, N: int) -> tuple[float, float, bool]:
    """Compare ``sum x**n/n!`` with ``sum |x|**n/(2 (n-1)!)`` for ``n = 3..N``.

    Termwise the right side dominates because ``2 (n-1)! <= n!`` once
    ``n >= 3``.
    """
    _check_finite(x)
    if N < 3:
        raise DomainError(f"N must be at least 3, got {N}")
    ax = abs(x)
    lhs_terms, rhs_terms = [], []
    # x**n/n! and |x|**n/(n-1)! built by recurrence from n = 3
    term = x ** 3 / 6.0
    aterm = ax ** 3 / 2.0
    for n in range(3, N + 1):
        if n > 3:
            term *= x / n
            aterm *= ax / (n - 1)
        lhs_terms.append(term)
        rhs_terms.append(aterm / 2.0)
    lhs = math.fsum(lhs_terms)
    rhs = math.fsum(rhs_terms)
    return lhs, rhs, lhs <= rhs
