"""Closed catalog of marginal laws with analytic moments.

Each law knows its mean, ``E|X|**2``, ``E exp(delta |X|)`` and MGF in closed
form, which makes the catalog usable as ground truth for the estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np
from scipy.special import log_ndtr, ndtr

from maccept import rng
from maccept.errors import DomainError, UnsupportedError

PROB_TOL = 1e-12


@dataclass(frozen=True)
class MomentProfile:
    """Moments at a fixed ``delta`` together with the bound constants.

    ``k_constant`` is ``sqrt(E|X|**2) * E exp(delta |X|)``; ``k_sung`` is
    twice that, the constant of the earlier NA bound it is compared with.
    """

    delta: float
    mean: float
    second_abs_moment: float
    abs_exp_moment: float
    k_constant: float
    k_sung: float

    @classmethod
    def from_moments(cls, delta: float, mean: float, second: float, absexp: float) -> "MomentProfile":
        k = math.sqrt(second) * absexp
        return cls(delta, mean, second, absexp, k, 2.0 * k)


class Distribution:
    """Base class of catalog members.

    Subclasses implement the closed-form moments and a vectorised sampler.
    Finite-support members also expose :meth:`support`.
    """

    kind: ClassVar[str]
    finite_support: ClassVar[bool] = False

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def second_abs_moment(self) -> float:
        raise NotImplementedError

    def abs_exp_moment(self, delta: float) -> float:
        raise NotImplementedError

    def mgf(self, lam: float) -> float:
        """``E exp(lam X)``."""
        raise NotImplementedError

    def max_delta(self) -> float:
        """Supremum of ``delta`` with ``E exp(delta |X|)`` finite."""
        return math.inf

    def sample(self, gen: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        raise UnsupportedError(f"{self.kind} does not have finite support")

    @property
    def variance(self) -> float:
        return self.second_abs_moment - self.mean ** 2

    def check_delta(self, delta: float) -> None:
        if not (delta > 0 and math.isfinite(delta)):
            raise DomainError(f"delta must be positive and finite, got {delta}")
        if delta >= self.max_delta():
            raise DomainError(
                f"abs_exp_moment diverges for {self.label()}: "
                f"requires delta < {self.max_delta():g}, got delta={delta}"
            )

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def label(self) -> str:
        args = ",".join(f"{v}" for k, v in self.to_dict().items() if k != "kind")
        return f"{self.kind}({args})" if args else self.kind


@dataclass(frozen=True)
class Rademacher(Distribution):
    kind: ClassVar[str] = "rademacher"
    finite_support: ClassVar[bool] = True

    mean = 0.0
    second_abs_moment = 1.0

    def abs_exp_moment(self, delta):
        return math.exp(delta)

    def mgf(self, lam):
        return math.cosh(lam)

    def sample(self, gen, size):
        return 2.0 * gen.integers(0, 2, size=size) - 1.0

    def support(self):
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float = -1.0
    b: float = 1.0
    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise DomainError(f"uniform needs finite a < b, got a={self.a}, b={self.b}")

    @property
    def mean(self):
        return (self.a + self.b) / 2

    @property
    def second_abs_moment(self):
        a, b = self.a, self.b
        return (a * a + a * b + b * b) / 3

    def abs_exp_moment(self, delta):
        # antiderivative of exp(delta |x|) that vanishes at 0
        def prim(x):
            return math.copysign(math.expm1(delta * abs(x)), x) / delta

        return (prim(self.b) - prim(self.a)) / (self.b - self.a)

    def mgf(self, lam):
        if lam == 0:
            return 1.0
        return (math.exp(lam * self.b) - math.exp(lam * self.a)) / (lam * (self.b - self.a))

    def sample(self, gen, size):
        return gen.uniform(self.a, self.b, size=size)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b}


def _check_p(p: float, name: str) -> None:
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"{name} needs 0 <= p <= 1, got p={p}")


@dataclass(frozen=True)
class Bernoulli(Distribution):
    p: float = 0.5
    kind: ClassVar[str] = "bernoulli"
    finite_support: ClassVar[bool] = True

    def __post_init__(self):
        _check_p(self.p, self.kind)

    @property
    def mean(self):
        return self.p

    @property
    def second_abs_moment(self):
        return self.p

    def abs_exp_moment(self, delta):
        return 1.0 - self.p + self.p * math.exp(delta)

    def mgf(self, lam):
        return 1.0 - self.p + self.p * math.exp(lam)

    def sample(self, gen, size):
        return (gen.random(size) < self.p).astype(float)

    def support(self):
        return np.array([0.0, 1.0]), np.array([1.0 - self.p, self.p])

    def to_dict(self):
        return {"kind": self.kind, "p": self.p}


@dataclass(frozen=True)
class CenteredBernoulli(Distribution):
    """``B - p`` for ``B ~ Bernoulli(p)``."""

    p: float = 0.5
    kind: ClassVar[str] = "centered_bernoulli"
    finite_support: ClassVar[bool] = True

    def __post_init__(self):
        _check_p(self.p, self.kind)

    mean = 0.0

    @property
    def second_abs_moment(self):
        return self.p * (1.0 - self.p)

    def abs_exp_moment(self, delta):
        p = self.p
        return (1.0 - p) * math.exp(delta * p) + p * math.exp(delta * (1.0 - p))

    def mgf(self, lam):
        p = self.p
        return (1.0 - p) * math.exp(-lam * p) + p * math.exp(lam * (1.0 - p))

    def sample(self, gen, size):
        return (gen.random(size) < self.p).astype(float) - self.p

    def support(self):
        return np.array([-self.p, 1.0 - self.p]), np.array([1.0 - self.p, self.p])

    def to_dict(self):
        return {"kind": self.kind, "p": self.p}


@dataclass(frozen=True)
class Laplace(Distribution):
    """Centred Laplace law with density ``exp(-|x|/scale) / (2 scale)``."""

    scale: float = 1.0
    kind: ClassVar[str] = "laplace"

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"laplace needs scale > 0, got {self.scale}")

    mean = 0.0

    @property
    def second_abs_moment(self):
        return 2.0 * self.scale ** 2

    def max_delta(self):
        return 1.0 / self.scale

    def abs_exp_moment(self, delta):
        self.check_delta(delta)
        return 1.0 / (1.0 - delta * self.scale)

    def mgf(self, lam):
        if abs(lam) >= self.max_delta():
            raise DomainError(f"laplace MGF diverges at |lam| >= 1/scale, got lam={lam}")
        return 1.0 / (1.0 - (lam * self.scale) ** 2)

    def sample(self, gen, size):
        return gen.laplace(0.0, self.scale, size=size)

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale}


@dataclass(frozen=True)
class Gaussian(Distribution):
    sigma: float = 1.0
    mu: float = 0.0
    kind: ClassVar[str] = "gaussian"

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"gaussian needs sigma > 0, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise DomainError(f"gaussian needs a finite mean, got {self.mu}")

    @property
    def mean(self):
        return self.mu

    @property
    def second_abs_moment(self):
        return self.sigma ** 2 + self.mu ** 2

    def abs_exp_moment(self, delta):
        s, m = self.sigma, self.mu
        if m == 0.0:
            return math.exp(0.5 * (delta * s) ** 2) * 2.0 * float(ndtr(delta * s))
        # E exp(delta|X|) = sum over the two half-lines, each a shifted normal CDF
        base = 0.5 * (delta * s) ** 2
        hi = base + delta * m + float(log_ndtr(m / s + delta * s))
        lo = base - delta * m + float(log_ndtr(-m / s + delta * s))
        return math.exp(np.logaddexp(hi, lo))

    def mgf(self, lam):
        return math.exp(self.mu * lam + 0.5 * (self.sigma * lam) ** 2)

    def sample(self, gen, size):
        return gen.normal(self.mu, self.sigma, size=size)

    def to_dict(self):
        d: dict[str, Any] = {"kind": self.kind, "sigma": self.sigma}
        if self.mu != 0.0:
            d["mu"] = self.mu
        return d


@dataclass(frozen=True)
class DiscreteTable(Distribution):
    """Finite law given by atoms and their probabilities.

    Repeated atoms are merged and the atoms sorted on construction.
    """

    values: tuple[float, ...] = field(default=(0.0,))
    probs: tuple[float, ...] = field(default=(1.0,))
    kind: ClassVar[str] = "discrete_table"
    finite_support: ClassVar[bool] = True

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        prs = tuple(float(p) for p in self.probs)
        if not vals or len(vals) != len(prs):
            raise DomainError("discrete_table needs equally many values and probs (at least one)")
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("discrete_table values must be finite")
        if any(p < 0 or not math.isfinite(p) for p in prs):
            raise DomainError("discrete_table probs must be non-negative")
        total = math.fsum(prs)
        if abs(total - 1.0) > PROB_TOL:
            raise DomainError(f"discrete_table probs must sum to 1, got {total!r}")
        merged: dict[float, list[float]] = {}
        for v, p in zip(vals, prs):
            merged.setdefault(v, []).append(p)
        keys = sorted(merged)
        object.__setattr__(self, "values", tuple(keys))
        object.__setattr__(self, "probs", tuple(math.fsum(merged[k]) for k in keys))

    def _expect(self, f) -> float:
        return math.fsum(p * f(v) for v, p in zip(self.values, self.probs))

    @property
    def mean(self):
        return self._expect(lambda v: v)

    @property
    def second_abs_moment(self):
        return self._expect(lambda v: v * v)

    def abs_exp_moment(self, delta):
        return self._expect(lambda v: math.exp(delta * abs(v)))

    def mgf(self, lam):
        return self._expect(lambda v: math.exp(lam * v))

    def sample(self, gen, size):
        return gen.choice(np.array(self.values), size=size, p=np.array(self.probs))

    def support(self):
        return np.array(self.values), np.array(self.probs)

    def to_dict(self):
        return {"kind": self.kind, "values": list(self.values), "probs": list(self.probs)}

    def label(self):
        pairs = " ".join(f"{v}:{p}" for v, p in zip(self.values, self.probs))
        return f"{self.kind}({pairs})"


CATALOG: dict[str, type[Distribution]] = {
    cls.kind: cls
    for cls in (Rademacher, Uniform, Bernoulli, CenteredBernoulli, Laplace, Gaussian, DiscreteTable)
}


def from_dict(d: dict[str, Any]) -> Distribution:
    """Build a catalog member from its config form, e.g. ``{"kind": "laplace", "scale": 1.0}``."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in CATALOG:
        raise DomainError(f"unknown distribution kind {kind!r}; expected one of {sorted(CATALOG)}")
    cls = CATALOG[kind]
    allowed = {f for f in cls.__dataclass_fields__}
    unknown = set(d) - allowed
    if unknown:
        raise DomainError(f"unknown key(s) for {kind}: {sorted(unknown)}")
    if cls is DiscreteTable:
        d = {k: tuple(v) for k, v in d.items()}
    return cls(**d)


def moment_profile(dist: Distribution, delta: float) -> MomentProfile:
    dist.check_delta(delta)
    return MomentProfile.from_moments(
        delta, dist.mean, dist.second_abs_moment, dist.abs_exp_moment(delta)
    )


def sample_iid(dist: Distribution, n: int, seed: int) -> np.ndarray:
    """``n`` independent draws; identical output for identical arguments."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    return dist.sample(rng.stream(seed, rng.IID), n)


def empirical_profile(samples, delta: float) -> MomentProfile:
    """Plug-in estimate of every :class:`MomentProfile` field."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DomainError("empirical_profile needs at least one sample")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    return MomentProfile.from_moments(
        delta,
        float(np.mean(x)),
        float(np.mean(x * x)),
        float(np.mean(np.exp(delta * np.abs(x)))),
    )
