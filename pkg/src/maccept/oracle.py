"""Exact laws of partial sums for finite-support marginals.

Atoms that sit on a lattice ``offset + h*k`` (Rademacher, Bernoulli,
centred Bernoulli, integer tables) are convolved on integer indices, so
equal sums can never be split by rounding.  Other tables fall back to a
value-keyed merge with a 1e-9 tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from maccept.distributions import PROB_TOL, Bernoulli, DiscreteTable, Distribution
from maccept.errors import DomainError, SizeError, UnsupportedError

MAX_STATES = 10_000_000
MERGE_TOL = 1e-9


@dataclass(frozen=True)
class ExactPMF:
    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if s.ndim != 1 or s.shape != p.shape or s.size == 0:
            raise DomainError("support and probs must be equal-length non-empty vectors")
        if np.any(np.diff(s) <= 0):
            raise DomainError("support must be strictly increasing")
        if np.any(p < 0):
            raise DomainError("probabilities must be non-negative")
        if abs(math.fsum(p) - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities must sum to 1, got {math.fsum(p)!r}")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "probs", p)

    @property
    def mean(self) -> float:
        return math.fsum(self.support * self.probs)

    @property
    def variance(self) -> float:
        m = self.mean
        return math.fsum((self.support - m) ** 2 * self.probs)

    @classmethod
    def from_dist(cls, dist: Distribution) -> "ExactPMF":
        v, p = dist.support()
        return cls(v, p)


def _lattice(values: np.ndarray) -> tuple[float, float, np.ndarray] | None:
    """Return ``(offset, h, k)`` with ``values == offset + h*k`` for integer ``k``."""
    offset = float(values[0])
    if values.size == 1:
        return offset, 1.0, np.zeros(1, dtype=np.int64)
    h = float(np.diff(values).min())
    # rounding-level gaps mean near-duplicate atoms, which only the merge path handles
    if h <= MERGE_TOL * max(1.0, float(np.abs(values).max())):
        return None
    k = (values - offset) / h
    ki = np.rint(k)
    if ki.max() > MAX_STATES:
        return None
    if np.all(np.abs(k - ki) <= 1e-6):
        return offset, h, ki.astype(np.int64)
    return None


def _merge(values: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(values, kind="stable")
    v, p = values[order], probs[order]
    out_v, out_p = [v[0]], [[p[0]]]
    for vi, pi in zip(v[1:], p[1:]):
        if abs(vi - out_v[-1]) <= MERGE_TOL * max(1.0, abs(vi)):
            out_p[-1].append(pi)
        else:
            out_v.append(vi)
            out_p.append([pi])
    return np.array(out_v), np.array([math.fsum(g) for g in out_p])


def convolve(a: ExactPMF, b: ExactPMF) -> ExactPMF:
    """Law of the sum of independent draws from ``a`` and ``b``."""
    joint = np.concatenate([a.support, b.support])
    lat = _lattice(np.unique(joint)) if joint.size else None
    if lat is not None:
        offset, h, _ = lat
        ka = np.rint((a.support - offset) / h).astype(np.int64)
        kb = np.rint((b.support - offset) / h).astype(np.int64)
        da = np.zeros(ka.max() - ka.min() + 1)
        db = np.zeros(kb.max() - kb.min() + 1)
        da[ka - ka.min()] = a.probs
        db[kb - kb.min()] = b.probs
        dc = np.convolve(da, db)
        idx = np.nonzero(dc > 0)[0]
        base = ka.min() + kb.min()
        return ExactPMF(2 * offset + h * (base + idx), dc[idx])
    if a.support.size * b.support.size > MAX_STATES:
        raise SizeError("convolution would exceed the state cap")
    v = (a.support[:, None] + b.support[None, :]).ravel()
    p = (a.probs[:, None] * b.probs[None, :]).ravel()
    keep = p > 0
    return ExactPMF(*_merge(v[keep], p[keep]))


def exact_sum_pmf(dist: Distribution, n: int) -> ExactPMF:
    """Exact law of ``X_1 + ... + X_n`` for i.i.d. finite-support ``X_i``."""
    if not dist.finite_support:
        raise UnsupportedError(f"exact sums need a finite-support law, got {dist.kind}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    values, probs = dist.support()
    keep = probs > 0
    values, probs = values[keep], probs[keep]
    lat = _lattice(values)
    s = values.size
    if lat is not None:
        offset, h, k = lat
        states = n * int(k.max()) + 1
        if states > MAX_STATES:
            raise SizeError(f"{states} lattice states exceed the cap {MAX_STATES}")
        dense = np.zeros(int(k.max()) + 1)
        dense[k] = probs
        acc = dense
        for _ in range(n - 1):
            acc = np.convolve(acc, dense)
        idx = np.nonzero(acc > 0)[0]
        return ExactPMF(n * offset + h * idx, acc[idx])
    # number of multisets of size n drawn from s atoms
    if math.comb(n + s - 1, s - 1) > MAX_STATES:
        raise SizeError(f"sum support may exceed the cap {MAX_STATES} states")
    base = ExactPMF(values, probs)
    acc = base
    for _ in range(n - 1):
        acc = convolve(acc, base)
    return acc


def exact_tail(pmf: ExactPMF, center: float, threshold: float) -> float:
    """``P(|S - center| > threshold)`` by summing the qualifying atoms."""
    mask = np.abs(pmf.support - center) > threshold
    return math.fsum(pmf.probs[mask])


def exact_upper_tail(pmf: ExactPMF, center: float, threshold: float) -> float:
    """``P(S - center > threshold)``."""
    return math.fsum(pmf.probs[(pmf.support - center) > threshold])


def exact_mgf(dist: Distribution, lam: float, centered: bool = False) -> float:
    """``E exp(lam (X - c))`` with ``c = EX`` when ``centered`` and 0 otherwise."""
    if not dist.finite_support:
        raise UnsupportedError(f"exact MGF needs a finite-support law, got {dist.kind}")
    v, p = dist.support()
    shift = dist.mean if centered else 0.0
    return math.fsum(p * np.exp(lam * (v - shift)))


def binomial_pmf(trials: int, q: float) -> ExactPMF:
    """Binomial law built as the exact sum of Bernoulli atoms."""
    if trials == 0:
        return ExactPMF(np.array([0.0]), np.array([1.0]))
    return exact_sum_pmf(Bernoulli(q), trials)


def table_pmf(table: DiscreteTable) -> ExactPMF:
    return ExactPMF.from_dist(table)
