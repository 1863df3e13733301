"""Joint laws of dependent coordinates and their acceptability diagnostics.

The negatively associated constructions (multinomial coordinates, sampling
without replacement, random permutations, Gaussians with non-positive
correlations) are acceptable with ``M = 1``; ``IID`` families attain the
acceptability inequality with equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, ClassVar

import numpy as np
from scipy.linalg import lapack
from scipy.stats import binom

from maccept import rng
from maccept.distributions import (
    PROB_TOL,
    DiscreteTable,
    Distribution,
    Gaussian,
    MomentProfile,
    from_dict as dist_from_dict,
    moment_profile,
)
from maccept.errors import DomainError


def _check_common(M: float, delta: float) -> None:
    if not (M >= 1 and math.isfinite(M)):
        # lambda = 0 in the acceptability inequality gives 1 <= M
        raise DomainError(f"declared_M must be >= 1, got {M}")
    if not (delta > 0 and math.isfinite(delta)):
        raise DomainError(f"declared_delta must be positive, got {delta}")


def _check_probs(p: tuple[float, ...], what: str) -> None:
    if not p or any(x < 0 or not math.isfinite(x) for x in p):
        raise DomainError(f"{what}: probabilities must be non-negative and non-empty")
    if abs(math.fsum(p) - 1.0) > PROB_TOL:
        raise DomainError(f"{what}: probabilities must sum to 1, got {math.fsum(p)!r}")


class Family:
    """A joint law of ``n`` coordinates with a declared acceptability constant."""

    kind: ClassVar[str]
    negatively_associated: ClassVar[bool] = True
    declared_M: float
    declared_delta: float

    @property
    def n(self) -> int:
        raise NotImplementedError

    def sample_many(self, gen: np.random.Generator, reps: int) -> np.ndarray:
        """``reps`` independent joint draws as a ``(reps, n)`` array."""
        raise NotImplementedError

    def marginal(self, i: int) -> Distribution:
        raise NotImplementedError

    def sum_law(self) -> DiscreteTable | Gaussian | None:
        """Exact law of the coordinate sum when it is cheaply available."""
        return None

    def _index(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"coordinate {i} out of range for n={self.n}")
        return i

    def identically_distributed(self) -> bool:
        first = self.marginal(0)
        return all(self.marginal(i) == first for i in range(1, self.n))

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def label(self) -> str:
        d = self.to_dict()
        d.pop("declared_M", None)
        d.pop("declared_delta", None)
        kind = d.pop("kind")
        body = ";".join(f"{k}={_compact(v)}" for k, v in d.items())
        return f"{kind}({body})"


def _compact(v: Any) -> str:
    if isinstance(v, dict):
        return "{" + ",".join(f"{k}:{_compact(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + " ".join(_compact(x) for x in v) + "]"
    return str(v)


@dataclass(frozen=True)
class IID(Family):
    dist: Distribution
    size: int
    declared_M: float = 1.0
    declared_delta: float = 1.0
    kind: ClassVar[str] = "iid"
    negatively_associated: ClassVar[bool] = False

    def __post_init__(self):
        _check_common(self.declared_M, self.declared_delta)
        if self.size < 1:
            raise DomainError(f"iid family needs n >= 1, got {self.size}")

    @property
    def n(self):
        return self.size

    def sample_many(self, gen, reps):
        return self.dist.sample(gen, (reps, self.size))

    def marginal(self, i):
        self._index(i)
        return self.dist

    def identically_distributed(self):
        return True

    def to_dict(self):
        return {"kind": self.kind, "dist": self.dist.to_dict(), "n": self.size,
                "declared_M": self.declared_M, "declared_delta": self.declared_delta}


def _binomial_table(trials: int, p: float) -> DiscreteTable:
    k = np.arange(trials + 1)
    if p in (0.0, 1.0):
        probs = (k == round(p * trials)).astype(float)
    else:
        probs = binom.pmf(k, trials, p)
        probs = probs / math.fsum(probs)
    return DiscreteTable(tuple(float(v) for v in k), tuple(float(q) for q in probs))


@dataclass(frozen=True)
class MultinomialCoords(Family):
    """First ``take`` cell counts of a Multinomial(trials, probs) vector."""

    trials: int
    probs: tuple[float, ...]
    take: int
    declared_M: float = 1.0
    declared_delta: float = 1.0
    kind: ClassVar[str] = "multinomial_coords"

    def __post_init__(self):
        _check_common(self.declared_M, self.declared_delta)
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        _check_probs(self.probs, self.kind)
        if self.trials < 0:
            raise DomainError(f"trials must be non-negative, got {self.trials}")
        if not 1 <= self.take <= len(self.probs):
            raise DomainError(f"take must lie in 1..{len(self.probs)}, got {self.take}")

    @property
    def n(self):
        return self.take

    def sample_many(self, gen, reps):
        p = np.array(self.probs)
        return gen.multinomial(self.trials, p / p.sum(), size=reps)[:, : self.take].astype(float)

    def marginal(self, i):
        return _binomial_table(self.trials, self.probs[self._index(i)])

    def sum_law(self):
        q = min(1.0, math.fsum(self.probs[: self.take]))
        return _binomial_table(self.trials, q)

    def to_dict(self):
        return {"kind": self.kind, "trials": self.trials, "probs": list(self.probs),
                "take": self.take, "declared_M": self.declared_M,
                "declared_delta": self.declared_delta}


def _uniform_over(values: tuple[float, ...]) -> DiscreteTable:
    w = 1.0 / len(values)
    return DiscreteTable(values, tuple(w for _ in values))


def _subset_sum_law(values: tuple[float, ...], k: int) -> DiscreteTable:
    """Law of the sum of a uniformly random ``k``-subset, by counting subsets.

    Counts are exact integers; atoms are merged on their exact rational value.
    """
    # dp[j] maps a subset sum to the number of j-subsets seen so far attaining it
    dp: list[dict[Fraction, int]] = [dict() for _ in range(k + 1)]
    dp[0][Fraction(0)] = 1
    for v in values:
        fv = Fraction(v)
        for j in range(min(k, len(values)) - 1, -1, -1):
            for s, c in dp[j].items():
                dp[j + 1][s + fv] = dp[j + 1].get(s + fv, 0) + c
    total = math.comb(len(values), k)
    items = sorted(dp[k].items())
    return DiscreteTable(tuple(float(s) for s, _ in items), tuple(c / total for _, c in items))


@dataclass(frozen=True)
class SRSWithoutReplacement(Family):
    population: tuple[float, ...]
    draws: int
    declared_M: float = 1.0
    declared_delta: float = 1.0
    kind: ClassVar[str] = "srs_without_replacement"

    def __post_init__(self):
        _check_common(self.declared_M, self.declared_delta)
        object.__setattr__(self, "population", tuple(float(v) for v in self.population))
        if not 1 <= self.draws <= len(self.population):
            raise DomainError(f"draws must lie in 1..{len(self.population)}, got {self.draws}")

    @property
    def n(self):
        return self.draws

    def sample_many(self, gen, reps):
        pop = np.array(self.population)
        order = np.argsort(gen.random((reps, pop.size)), axis=1, kind="stable")
        return pop[order[:, : self.draws]]

    def marginal(self, i):
        self._index(i)
        return _uniform_over(self.population)

    def identically_distributed(self):
        return True

    def sum_law(self):
        if len(self.population) > 200:
            return None
        return _subset_sum_law(self.population, self.draws)

    def to_dict(self):
        return {"kind": self.kind, "population": list(self.population), "draws": self.draws,
                "declared_M": self.declared_M, "declared_delta": self.declared_delta}


@dataclass(frozen=True)
class RandomPermutation(Family):
    values: tuple[float, ...]
    declared_M: float = 1.0
    declared_delta: float = 1.0
    kind: ClassVar[str] = "random_permutation"

    def __post_init__(self):
        _check_common(self.declared_M, self.declared_delta)
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise DomainError("random_permutation needs at least one value")

    @property
    def n(self):
        return len(self.values)

    def sample_many(self, gen, reps):
        vals = np.array(self.values)
        order = np.argsort(gen.random((reps, vals.size)), axis=1, kind="stable")
        return vals[order]

    def marginal(self, i):
        self._index(i)
        return _uniform_over(self.values)

    def identically_distributed(self):
        return True

    def sum_law(self):
        return DiscreteTable((math.fsum(self.values),), (1.0,))

    def to_dict(self):
        return {"kind": self.kind, "values": list(self.values),
                "declared_M": self.declared_M, "declared_delta": self.declared_delta}


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """Return ``L`` with ``L @ L.T == cov`` for a symmetric PSD ``cov``.

    Plain Cholesky first; singular inputs fall back to LAPACK's pivoted
    Cholesky (``dpstrf``), whose trailing columns beyond the rank are zeroed.
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    c, piv, rank, info = lapack.dpstrf(cov, lower=1)
    if info < 0:
        raise DomainError("pivoted Cholesky failed on the covariance")
    L = np.tril(c)
    L[:, rank:] = 0.0
    out = np.zeros_like(L)
    out[piv - 1] = L
    return out


@dataclass(frozen=True)
class NegCorrGaussian(Family):
    mean: tuple[float, ...]
    covariance: tuple[tuple[float, ...], ...]
    declared_M: float = 1.0
    declared_delta: float = 1.0
    kind: ClassVar[str] = "neg_corr_gaussian"
    _factor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_common(self.declared_M, self.declared_delta)
        mean = tuple(float(m) for m in self.mean)
        cov = tuple(tuple(float(c) for c in row) for row in self.covariance)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        n = len(mean)
        C = np.array(cov, dtype=float)
        if n == 0 or C.shape != (n, n):
            raise DomainError(f"covariance must be {n}x{n}")
        if not np.allclose(C, C.T, rtol=0, atol=1e-12):
            raise DomainError("covariance must be symmetric")
        off = C[~np.eye(n, dtype=bool)]
        if np.any(off > 0):
            raise DomainError("neg_corr_gaussian needs all off-diagonal covariances <= 0")
        if np.any(np.diag(C) <= 0):
            raise DomainError("neg_corr_gaussian needs positive variances")
        eig = np.linalg.eigvalsh(C)
        if eig[0] < -1e-10 * max(1.0, eig[-1]):
            raise DomainError(f"covariance is not positive semidefinite (min eigenvalue {eig[0]:g})")
        object.__setattr__(self, "_factor", psd_factor(C))

    @property
    def n(self):
        return len(self.mean)

    def sample_many(self, gen, reps):
        z = gen.standard_normal((reps, self.n))
        return np.array(self.mean) + z @ self._factor.T

    def marginal(self, i):
        i = self._index(i)
        return Gaussian(sigma=math.sqrt(self.covariance[i][i]), mu=self.mean[i])

    def sum_law(self):
        var = float(np.sum(np.array(self.covariance)))
        if var <= 0:
            return DiscreteTable((math.fsum(self.mean),), (1.0,))
        return Gaussian(sigma=math.sqrt(var), mu=math.fsum(self.mean))

    def to_dict(self):
        return {"kind": self.kind, "mean": list(self.mean),
                "covariance": [list(r) for r in self.covariance],
                "declared_M": self.declared_M, "declared_delta": self.declared_delta}


FAMILIES: dict[str, type[Family]] = {
    cls.kind: cls
    for cls in (IID, MultinomialCoords, SRSWithoutReplacement, RandomPermutation, NegCorrGaussian)
}

_KEYS = {
    "iid": {"dist", "n"},
    "multinomial_coords": {"trials", "probs", "take"},
    "srs_without_replacement": {"population", "draws"},
    "random_permutation": {"values"},
    "neg_corr_gaussian": {"mean", "covariance"},
}


def from_dict(d: dict[str, Any]) -> Family:
    """Build a family from its config form."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in FAMILIES:
        raise DomainError(f"unknown family kind {kind!r}; expected one of {sorted(FAMILIES)}")
    allowed = _KEYS[kind] | {"declared_M", "declared_delta"}
    unknown = set(d) - allowed
    if unknown:
        raise DomainError(f"unknown key(s) for {kind}: {sorted(unknown)}")
    missing = _KEYS[kind] - set(d)
    if missing:
        raise DomainError(f"missing key(s) for {kind}: {sorted(missing)}")
    if kind == "iid":
        d["dist"] = dist_from_dict(d["dist"])
        d["size"] = d.pop("n")
    for key in ("probs", "population", "values", "mean"):
        if key in d:
            d[key] = tuple(d[key])
    if "covariance" in d:
        d["covariance"] = tuple(tuple(r) for r in d["covariance"])
    return FAMILIES[kind](**d)


def sample_family(spec: Family, seed: int) -> np.ndarray:
    """One joint draw of length ``n``; identical for identical ``(spec, seed)``."""
    return spec.sample_many(rng.stream(seed, rng.FAMILY), 1)[0]


def marginal_profile(spec: Family, i: int, delta: float) -> MomentProfile:
    return moment_profile(spec.marginal(i), delta)


def acceptability_ratio(
    spec: Family, lam: float, reps: int, seed: int, workers: int = 1
) -> tuple[float, float]:
    """Estimate ``E exp(lam S) / prod_i E exp(lam X_i)`` and its standard error.

    The denominator is computed from the analytic marginal MGFs; only the
    numerator is simulated.  Replications are split into fixed blocks with
    one stream each, so the estimate does not depend on ``workers``.
    """
    if abs(lam) > spec.declared_delta:
        raise DomainError(f"|lambda| must be <= declared_delta={spec.declared_delta}, got {lam}")
    if reps < 1000:
        raise DomainError(f"reps must be at least 1000, got {reps}")
    log_den = math.fsum(math.log(spec.marginal(i).mgf(lam)) for i in range(spec.n))

    def block(b: int, m: int) -> tuple[float, float]:
        x = spec.sample_many(rng.stream(seed, rng.FAMILY_REPS, b), m)
        w = np.exp(lam * x.sum(axis=1) - log_den)
        return math.fsum(w), math.fsum(w * w)

    parts = rng.map_blocks(block, reps, workers)
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / reps
    var = max(0.0, (s2 - reps * mean * mean) / (reps - 1))
    return mean, math.sqrt(var / reps)


@dataclass(frozen=True)
class BivariateTable:
    support_x: tuple[float, ...]
    support_y: tuple[float, ...]
    joint_probs: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        sx = tuple(float(v) for v in self.support_x)
        sy = tuple(float(v) for v in self.support_y)
        P = tuple(tuple(float(p) for p in row) for row in self.joint_probs)
        if not sx or not sy:
            raise DomainError("bivariate table needs non-empty supports")
        if len(P) != len(sx) or any(len(r) != len(sy) for r in P):
            raise DomainError(f"joint_probs must be {len(sx)}x{len(sy)}")
        if len(set(sx)) != len(sx) or len(set(sy)) != len(sy):
            raise DomainError("support values must be distinct")
        flat = [p for r in P for p in r]
        if any(p < 0 or not math.isfinite(p) for p in flat):
            raise DomainError("joint probabilities must be non-negative")
        if abs(math.fsum(flat) - 1.0) > PROB_TOL:
            raise DomainError(f"joint probabilities must sum to 1, got {math.fsum(flat)!r}")
        # store sorted by support so thresholds run in increasing order
        ox = sorted(range(len(sx)), key=sx.__getitem__)
        oy = sorted(range(len(sy)), key=sy.__getitem__)
        object.__setattr__(self, "support_x", tuple(sx[i] for i in ox))
        object.__setattr__(self, "support_y", tuple(sy[j] for j in oy))
        object.__setattr__(self, "joint_probs", tuple(tuple(P[i][j] for j in oy) for i in ox))

    @classmethod
    def product(cls, sx, px, sy, py) -> "BivariateTable":
        return cls(tuple(sx), tuple(sy), tuple(tuple(a * b for b in py) for a in px))


def end_min_M(table: BivariateTable) -> float:
    """Smallest ``M`` satisfying both orthant bounds over every threshold pair.

    Probabilities are accumulated as exact rationals, so a product table
    gives exactly 1.  Threshold pairs with a zero product are skipped.
    """
    raw = [[Fraction(p) for p in row] for row in table.joint_probs]
    mass = sum(p for row in raw for p in row)
    P = [[p / mass for p in row] for row in raw]
    nx, ny = len(P), len(P[0])
    # lower[i][j] = P(X <= x_i, Y <= y_j); upper[i][j] = P(X > x_i, Y > y_j)
    lower = [[Fraction(0)] * (ny + 1) for _ in range(nx + 1)]
    for i in range(nx):
        for j in range(ny):
            lower[i + 1][j + 1] = P[i][j] + lower[i][j + 1] + lower[i + 1][j] - lower[i][j]
    total = lower[nx][ny]
    fx = [lower[i + 1][ny] for i in range(nx)]
    fy = [lower[nx][j + 1] for j in range(ny)]
    best = Fraction(0)
    for i in range(nx):
        for j in range(ny):
            lo = lower[i + 1][j + 1]
            d = fx[i] * fy[j]
            if d > 0:
                best = max(best, lo / d)
            up = total - fx[i] - fy[j] + lo
            du = (total - fx[i]) * (total - fy[j])
            if du > 0:
                best = max(best, up / du)
    return float(best)
