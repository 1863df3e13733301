"""Experiment configuration: schema, parsing with located diagnostics, serialization.

Configs are YAML (JSON is accepted too).  Unknown keys are rejected, and
every distribution and family is built and checked at parse time, so a
config that parses can be run.
"""

from __future__ import annotations

import hashlib
import json
from typing import Annotated, Any, Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from maccept import distributions as dists
from maccept import families as fams
from maccept.errors import DomainError


class ConfigError(ValueError):
    """A config document violates the schema; the message names the key."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _check_dist(d: dict[str, Any]) -> dict[str, Any]:
    dists.from_dict(d)
    return d


def _check_family(d: dict[str, Any]) -> dict[str, Any]:
    fams.from_dict(d)
    return d


class ScalarSuite(_Strict):
    suite: Literal["scalar"]
    lo: float = -30.0
    hi: float = 30.0
    step: float = 1e-3
    random_points: int = Field(100_000, ge=0)
    random_lo: float = -700.0
    random_hi: float = 700.0
    variants: list[Literal["abs", "sq"]] = ["abs", "sq"]
    record_stride: int = Field(1000, ge=1)

    @model_validator(mode="after")
    def _range(self):
        if self.hi < self.lo:
            raise ValueError(f"hi ({self.hi}) must be >= lo ({self.lo})")
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        return self


class KTableSuite(_Strict):
    suite: Literal["k-table"]
    dists: list[dict[str, Any]]
    deltas: list[float]

    @field_validator("dists")
    @classmethod
    def _dists(cls, v):
        return [_check_dist(d) for d in v]

    @model_validator(mode="after")
    def _admissible(self):
        for d in self.dists:
            dist = dists.from_dict(d)
            for delta in self.deltas:
                dists.moment_profile(dist, delta)
        return self


class LemmaSuite(_Strict):
    suite: Literal["lemma"]
    dists: list[dict[str, Any]]
    deltas: list[float]
    lambda_fractions: list[float] = [0.125, 0.25, 0.5]
    reps: int = Field(1_000_000, ge=2)
    proof_tight: bool = False

    @field_validator("dists")
    @classmethod
    def _dists(cls, v):
        return [_check_dist(d) for d in v]

    @field_validator("lambda_fractions")
    @classmethod
    def _fractions(cls, v):
        if any(not 0 < f <= 0.5 for f in v):
            raise ValueError("lambda_fractions must lie in (0, 0.5] (lambda = fraction * delta)")
        return v

    def cases(self) -> list[tuple[dists.Distribution, float]]:
        """(dist, delta) pairs with delta admissible; inadmissible pairs are skipped."""
        out = []
        for d in self.dists:
            dist = dists.from_dict(d)
            out.extend((dist, delta) for delta in self.deltas if delta < dist.max_delta())
        return out

    @model_validator(mode="after")
    def _nonempty(self):
        if self.dists and not self.cases():
            raise ValueError("no admissible (dist, delta) pair in lemma suite")
        return self


class AcceptabilitySuite(_Strict):
    suite: Literal["acceptability"]
    families: list[dict[str, Any]]
    lambda_fractions: list[float] = [-1.0, -0.5, 0.0, 0.5, 1.0]
    reps: int = Field(100_000, ge=1000)

    @field_validator("families")
    @classmethod
    def _fams(cls, v):
        return [_check_family(d) for d in v]

    @field_validator("lambda_fractions")
    @classmethod
    def _fractions(cls, v):
        if any(abs(f) > 1 for f in v):
            raise ValueError("lambda_fractions must lie in [-1, 1] (lambda = fraction * declared_delta)")
        return v


class Theorem1Suite(_Strict):
    suite: Literal["theorem1"]
    families: list[dict[str, Any]]
    delta: float
    epsilon_offsets: list[float] = [0.0, 0.25, 0.5, 1.0, 2.0]
    reps: int = Field(100_000, ge=1000)
    use_oracle: bool = True

    @field_validator("families")
    @classmethod
    def _fams(cls, v):
        return [_check_family(d) for d in v]

    @model_validator(mode="after")
    def _check(self):
        if any(o < 0 for o in self.epsilon_offsets):
            raise ValueError("epsilon_offsets must be >= 0 (epsilon = K + offset)")
        for d in self.families:
            fam = fams.from_dict(d)
            if not fam.identically_distributed():
                raise ValueError(f"{fam.label()}: coordinates are not identically distributed")
            if self.delta / 2 > fam.declared_delta:
                raise ValueError(f"{fam.label()}: delta/2 exceeds declared_delta")
            fams.marginal_profile(fam, 0, self.delta)
        return self


class CompareSuite(_Strict):
    suite: Literal["compare"]
    dist: dict[str, Any]
    delta: float
    n_grid: list[int]
    alpha: float = 1.0
    M: float = Field(1.0, ge=1.0)

    @field_validator("dist")
    @classmethod
    def _dist(cls, v):
        return _check_dist(v)

    @model_validator(mode="after")
    def _admissible(self):
        dists.moment_profile(dists.from_dict(self.dist), self.delta)
        if not self.n_grid or min(self.n_grid) < 1:
            raise ValueError("n_grid must be a non-empty list of positive counts")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        return self


class TableSpec(_Strict):
    name: str
    support_x: list[float]
    support_y: list[float]
    joint_probs: list[list[float]]

    @model_validator(mode="after")
    def _valid(self):
        self.build()
        return self

    def build(self) -> fams.BivariateTable:
        return fams.BivariateTable(
            tuple(self.support_x), tuple(self.support_y),
            tuple(tuple(r) for r in self.joint_probs),
        )


class EndCheckSuite(_Strict):
    suite: Literal["end-check"]
    tables: list[TableSpec]


Suite = Annotated[
    Union[ScalarSuite, KTableSuite, LemmaSuite, AcceptabilitySuite, Theorem1Suite,
          CompareSuite, EndCheckSuite],
    Field(discriminator="suite"),
]


class ExperimentConfig(_Strict):
    seed: int = Field(ge=0)
    suites: list[Suite]
    output: str = "out"
    format: Literal["csv", "json", "both"] = "csv"
    workers: int = Field(1, ge=1)

    def to_data(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    def config_hash(self) -> str:
        """Hash of everything that affects results; ``output`` and ``workers`` excluded."""
        data = self.to_data()
        data.pop("output")
        data.pop("workers")
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _locate(node: yaml.Node | None, loc: tuple) -> int | None:
    """1-based line of the YAML node at ``loc`` (deepest resolvable prefix)."""
    line = None
    for key in loc:
        if node is None:
            break
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            match = [(k, v) for k, v in node.value if k.value == key]
            if not match:
                break
            k, node = match[0]
            line = k.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
    else:
        if node is not None:
            line = node.start_mark.line + 1
    return line


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a config document.

    Raises :class:`ConfigError` whose message names the offending key path
    and, when it can be located, its line.
    """
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            # drop the discriminator tag pydantic inserts after a list index
            loc = tuple(p for i, p in enumerate(err["loc"])
                        if not (i > 0 and isinstance(err["loc"][i - 1], int) and isinstance(p, str)
                                and p in _SUITE_TAGS))
            path = ".".join(str(p) for p in loc) or "<root>"
            line = _locate(root, loc)
            where = f"line {line}, " if line else ""
            msg = err["msg"]
            if err["type"] == "extra_forbidden":
                msg = f"unknown key {loc[-1]!r}"
            msgs.append(f"{where}key {path}: {msg}")
        raise ConfigError("; ".join(msgs)) from None
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


_SUITE_TAGS = {"scalar", "k-table", "lemma", "acceptability", "theorem1", "compare", "end-check"}


def serialize(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_data(), sort_keys=False)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
