"""Run the suites of an :class:`ExperimentConfig` and write CSV/JSON artifacts.

Output is byte-stable: rows are sorted by their parameter tuple, floats
are written with ``repr`` (shortest round-trip form, at most 17 significant
digits) and nothing time- or worker-dependent reaches the files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from scipy import stats

from maccept import bounds, rng, scalar
from maccept import distributions as dists
from maccept import families as fams
from maccept import montecarlo as mc
from maccept.config import (
    AcceptabilitySuite,
    CompareSuite,
    EndCheckSuite,
    ExperimentConfig,
    KTableSuite,
    LemmaSuite,
    ScalarSuite,
    Theorem1Suite,
)

HEADERS = {
    "scalar": ["x", "variant", "exp_value", "bound_value", "slack", "domain"],
    "k-table": ["dist", "delta", "mean", "second_abs_moment", "abs_exp_moment", "k", "k_sung"],
    "lemma": ["dist", "delta", "lambda", "k", "lhs", "lhs_ci_high", "log_bound", "exact", "verdict"],
    "acceptability": ["family", "lambda", "ratio", "se", "ci_low", "ci_high", "m", "verdict"],
    "theorem1": ["family", "n", "delta", "epsilon", "k", "m", "lhs", "lhs_ci_high", "log_bound",
                 "verdict"],
    "compare": ["dist", "delta", "n", "alpha", "eps_new", "log_bound_new", "eps_sung",
                "log_bound_sung", "k_ratio"],
    "end-check": ["table", "min_m"],
}


@dataclass
class SuiteResult:
    suite: str
    rows: list[dict[str, Any]]
    verdict: str = "PASS"
    summary: dict[str, Any] = field(default_factory=dict)


@dataclass
class Manifest:
    config_hash: str
    seed: int
    verdict: str
    files: list[dict[str, Any]]
    summaries: list[dict[str, Any]]

    def to_json(self) -> dict[str, Any]:
        return {"config_hash": self.config_hash, "seed": self.seed, "verdict": self.verdict,
                "files": self.files, "summaries": self.summaries}


def fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else repr(v))
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else fmt(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


def _worst(verdicts) -> str:
    return "FAIL" if "FAIL" in set(verdicts) else "PASS"


def run_scalar(s: ScalarSuite, seed: int, workers: int) -> SuiteResult:
    pts = scalar.scan_points(s.lo, s.hi, s.step, s.random_points, seed, s.random_lo, s.random_hi)
    rows, summary, verdicts = [], {}, []
    for name in s.variants:
        variant = scalar.BoundVariant(name)
        rep = scalar.scan_inequality(s.lo, s.hi, s.step, s.random_points, seed, variant,
                                     s.random_lo, s.random_hi)
        keep = set(range(0, pts.size, s.record_stride))
        keep.add(int(next(i for i, x in enumerate(pts) if x == rep.argmin)))
        recorded = sorted(keep)
        for r in scalar.slack_table(pts[recorded], variant):
            rows.append({"x": r.x, "variant": name, "exp_value": r.exp_value,
                         "bound_value": r.bound_value, "slack": r.slack,
                         "domain": r.domain_tag.value})
        summary[name] = {"points": rep.points, "violations": rep.violations,
                         "min_slack": rep.min_slack, "argmin": rep.argmin}
        verdicts.append("FAIL" if rep.violations else "PASS")
    rows.sort(key=lambda r: (r["variant"], r["x"]))
    return SuiteResult("scalar", rows, _worst(verdicts), summary)


def run_k_table(s: KTableSuite, seed: int, workers: int) -> SuiteResult:
    rows = []
    for d in s.dists:
        dist = dists.from_dict(d)
        for delta in s.deltas:
            p = dists.moment_profile(dist, delta)
            rows.append({"dist": dist.label(), "delta": delta, "mean": p.mean,
                         "second_abs_moment": p.second_abs_moment,
                         "abs_exp_moment": p.abs_exp_moment, "k": p.k_constant, "k_sung": p.k_sung})
    rows.sort(key=lambda r: (r["dist"], r["delta"]))
    return SuiteResult("k-table", rows)


def run_lemma(s: LemmaSuite, seed: int, workers: int) -> SuiteResult:
    rows = []
    for i, (dist, delta) in enumerate(s.cases()):
        grid = [f * delta for f in s.lambda_fractions]
        for r in mc.verify_lemma(dist, delta, grid, s.reps, rng.derive_seed(seed, i),
                                 workers=workers, proof_tight=s.proof_tight):
            rows.append({"dist": r.params["dist"], "delta": delta, "lambda": r.params["lambda"],
                         "k": r.params["k"], "lhs": r.lhs, "lhs_ci_high": r.lhs_high,
                         "log_bound": r.log_rhs, "exact": r.exact, "verdict": r.verdict.value})
    rows.sort(key=lambda r: (r["dist"], r["delta"], r["lambda"]))
    return SuiteResult("lemma", rows, _worst(r["verdict"] for r in rows))


def run_acceptability(s: AcceptabilitySuite, seed: int, workers: int) -> SuiteResult:
    """Ratio rows with Bonferroni-adjusted intervals.

    IID families sit exactly on ``ratio == M``, so a per-row 99% test would
    flag about 1% of them by chance; splitting the 1% over the suite keeps
    the chance of any false FAIL at 1%.
    """
    est = []
    for i, d in enumerate(s.families):
        fam = fams.from_dict(d)
        for j, f in enumerate(s.lambda_fractions):
            lam = f * fam.declared_delta
            ratio, se = fams.acceptability_ratio(fam, lam, s.reps, rng.derive_seed(seed, i, j),
                                                 workers)
            est.append((fam, lam, ratio, se))
    z = float(stats.norm.ppf(1 - (1 - mc.CI_LEVEL) / max(1, len(est))))
    rows = []
    for fam, lam, ratio, se in est:
        lo, hi = ratio - z * se, ratio + z * se
        rows.append({"family": fam.label(), "lambda": lam, "ratio": ratio, "se": se,
                     "ci_low": lo, "ci_high": hi, "m": fam.declared_M,
                     "verdict": "FAIL" if lo > fam.declared_M else "PASS"})
    rows.sort(key=lambda r: (r["family"], r["lambda"]))
    return SuiteResult("acceptability", rows, _worst(r["verdict"] for r in rows))


def run_theorem1(s: Theorem1Suite, seed: int, workers: int) -> SuiteResult:
    rows = []
    for i, d in enumerate(s.families):
        fam = fams.from_dict(d)
        k = fams.marginal_profile(fam, 0, s.delta).k_constant
        grid = [k + o for o in s.epsilon_offsets]
        for r in mc.verify_theorem1(fam, s.delta, grid, s.reps, rng.derive_seed(seed, i),
                                    workers=workers, use_oracle=s.use_oracle):
            p = r.params
            rows.append({"family": p["family"], "n": p["n"], "delta": p["delta"],
                         "epsilon": p["epsilon"], "k": p["k"], "m": p["m"], "lhs": r.lhs,
                         "lhs_ci_high": r.lhs_high, "log_bound": r.log_rhs,
                         "verdict": r.verdict.value})
    rows.sort(key=lambda r: (r["family"], r["epsilon"]))
    return SuiteResult("theorem1", rows, _worst(r["verdict"] for r in rows))


def run_compare(s: CompareSuite, seed: int, workers: int) -> SuiteResult:
    dist = dists.from_dict(s.dist)
    rows = []
    dominated = True
    for c in bounds.compare_bounds(dist, s.delta, sorted(set(s.n_grid)), s.alpha, s.M):
        rows.append({"dist": dist.label(), "delta": s.delta, "n": c.n, "alpha": c.alpha,
                     "eps_new": c.eps_new, "log_bound_new": c.log_bound_new,
                     "eps_sung": c.eps_sung, "log_bound_sung": c.log_bound_sung,
                     "k_ratio": c.k_ratio})
        dominated &= c.log_bound_new_shared <= c.log_bound_ksung_shared
    return SuiteResult("compare", rows, "PASS" if dominated else "FAIL",
                       {"shared_epsilon_dominance": dominated})


def run_end_check(s: EndCheckSuite, seed: int, workers: int) -> SuiteResult:
    rows = [{"table": t.name, "min_m": fams.end_min_M(t.build())} for t in s.tables]
    rows.sort(key=lambda r: r["table"])
    return SuiteResult("end-check", rows)


RUNNERS: dict[type, Callable[..., SuiteResult]] = {
    ScalarSuite: run_scalar,
    KTableSuite: run_k_table,
    LemmaSuite: run_lemma,
    AcceptabilitySuite: run_acceptability,
    Theorem1Suite: run_theorem1,
    CompareSuite: run_compare,
    EndCheckSuite: run_end_check,
}


def to_csv(suite: str, rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = HEADERS[suite]
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(r[h]) for h in header])
    return buf.getvalue()


def to_json(suite: str, rows: list[dict[str, Any]]) -> str:
    header = HEADERS[suite]
    body = {"suite": suite, "rows": [_jsonable({h: r[h] for h in header}) for r in rows]}
    return json.dumps(body, indent=1) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def run_experiment(cfg: ExperimentConfig, out: str | os.PathLike | None = None,
                   workers: int | None = None) -> Manifest:
    """Run every suite in order and write one file per suite and format.

    ``out`` and ``workers`` override the config; neither changes file
    contents.
    """
    outdir = Path(out if out is not None else cfg.output)
    workers = cfg.workers if workers is None else workers
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {outdir}: {exc.strerror}") from exc
    files, summaries, verdicts = [], [], []
    for idx, suite in enumerate(cfg.suites):
        result = RUNNERS[type(suite)](suite, rng.derive_seed(cfg.seed, idx), workers)
        stem = f"{idx:02d}_{result.suite}"
        exts = ["csv", "json"] if cfg.format == "both" else [cfg.format]
        for ext in exts:
            text = to_csv(result.suite, result.rows) if ext == "csv" else to_json(result.suite, result.rows)
            _write(outdir / f"{stem}.{ext}", text)
            files.append({"path": f"{stem}.{ext}", "rows": len(result.rows)})
        summaries.append(_jsonable({"suite": result.suite, "index": idx, "verdict": result.verdict,
                                    **({"summary": result.summary} if result.summary else {})}))
        verdicts.append(result.verdict)
    manifest = Manifest(cfg.config_hash(), cfg.seed, _worst(verdicts), files, summaries)
    _write(outdir / "manifest.json", json.dumps(manifest.to_json(), indent=1) + "\n")
    return manifest
