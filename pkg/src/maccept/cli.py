"""Command-line entry point.

    maccept run CONFIG
    maccept verify {scalar,lemma,theorem1,acceptability,end}
    maccept table {k,compare}

``verify`` and ``table`` run the matching suite of the shipped reference
config, with ``--seed``/``--reps``/``--proof-tight-lemma`` applied on top.
Exit status is 0 when every suite passes, 1 on a FAIL verdict and 2 on
errors.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources

from maccept.config import ConfigError, ExperimentConfig, load_config, parse_config
from maccept.errors import DomainError
from maccept.runner import run_experiment

SUBSUITES = {
    ("verify", "scalar"): "scalar",
    ("verify", "lemma"): "lemma",
    ("verify", "theorem1"): "theorem1",
    ("verify", "acceptability"): "acceptability",
    ("verify", "end"): "end-check",
    ("table", "k"): "k-table",
    ("table", "compare"): "compare",
}


def reference_text() -> str:
    return resources.files("maccept").joinpath("data/reference.yaml").read_text(encoding="utf-8")


def reference_config() -> ExperimentConfig:
    return parse_config(reference_text())


def _single_suite(suite: str, args) -> ExperimentConfig:
    data = reference_config().to_data()
    block = next(s for s in data["suites"] if s["suite"] == suite)
    if args.reps is not None and "reps" in block:
        block["reps"] = args.reps
    if args.proof_tight_lemma and suite == "lemma":
        block["proof_tight"] = True
    data["suites"] = [block]
    return ExperimentConfig.model_validate(data)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--reps", type=int, help="Monte Carlo replications per case")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=["csv", "json", "both"])
    p.add_argument("--workers", type=int, help="replication-parallel workers (output unchanged)")
    p.add_argument("--proof-tight-lemma", action="store_true",
                   help="use exp(K*lambda/2) in the MGF bound (off by default)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maccept", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run every suite in a config file")
    run.add_argument("config")
    _common(run)
    ver = sub.add_parser("verify", help="run one verification suite")
    ver.add_argument("which", choices=["scalar", "lemma", "theorem1", "acceptability", "end"])
    _common(ver)
    tab = sub.add_parser("table", help="write a constants or comparison table")
    tab.add_argument("which", choices=["k", "compare"])
    _common(tab)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.reps is not None or args.proof_tight_lemma:
                data = cfg.to_data()
                for block in data["suites"]:
                    if args.reps is not None and "reps" in block:
                        block["reps"] = args.reps
                    if args.proof_tight_lemma and block["suite"] == "lemma":
                        block["proof_tight"] = True
                cfg = ExperimentConfig.model_validate(data)
        else:
            cfg = _single_suite(SUBSUITES[(args.command, args.which)], args)
        updates = {k: v for k, v in (("seed", args.seed), ("format", args.format)) if v is not None}
        if updates:
            cfg = ExperimentConfig.model_validate({**cfg.to_data(), **updates})
        manifest = run_experiment(cfg, out=args.out, workers=args.workers)
    except (ConfigError, DomainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for s in manifest.summaries:
        print(f"{s['index']:02d} {s['suite']:<14} {s['verdict']}")
    for f in manifest.files:
        print(f"wrote {f['path']} ({f['rows']} rows)")
    print(f"verdict: {manifest.verdict}")
    return 1 if manifest.verdict == "FAIL" else 0


if __name__ == "__main__":
    sys.exit(main())
