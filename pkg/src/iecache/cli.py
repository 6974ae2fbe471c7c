"""Command line: ``iecache run|eval|replay|adapt``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .datasets import adapt
from .errors import IECacheError, ValidationError
from .evaluation import pct
from .runner import RunConfig, evaluate_dir, load_config_file, report_table, run_experiment
from .trace import RunTrace, replay, summarize

_RUN_FLAGS = {
    "method": "method", "dataset": "dataset", "max_steps": "max_steps", "gold_schema": "gold_schema",
    "repeats": "repeats", "fixture": "fixture", "record_fixture": "record_fixture", "out": "out",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iecache", description="Extraction-as-cache agent experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a method over a dataset")
    r.add_argument("--config", required=True, help="flat YAML/JSON key-value file mirroring RunConfig")
    r.add_argument("--method", choices=["iecache", "generic", "cot", "react"])
    r.add_argument("--dataset")
    r.add_argument("--max-steps", type=int)
    r.add_argument("--no-update", action="store_true", help="disable cache updates (ablation)")
    r.add_argument("--gold-schema", help="gold schema file, or @task to use each task's own")
    r.add_argument("--monolithic", action="store_true", help="single-call extraction ablation")
    r.add_argument("--repeats", type=int)
    r.add_argument("--fixture", help="replay responses from a JSONL fixture")
    r.add_argument("--record-fixture", help="write the run's model responses as a fixture")
    r.add_argument("--out")

    e = sub.add_parser("eval", help="recompute metrics from a finished run directory")
    e.add_argument("--pred", required=True)
    e.add_argument("--metric", choices=["em", "rouge1", "rougeL"])

    v = sub.add_parser("replay", help="validate a trace file and print its steps")
    v.add_argument("--trace", required=True)

    a = sub.add_parser("adapt", help="convert a benchmark release to canonical JSONL")
    a.add_argument("--from", dest="source", required=True, choices=["tact", "calendar", "qmsum"])
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--out", dest="output", required=True)
    return p


def config_from_args(args) -> RunConfig:
    data = load_config_file(args.config)
    for flag, key in _RUN_FLAGS.items():
        val = getattr(args, flag)
        if val is not None:
            data[key] = val
    if args.no_update:
        data["update_enabled"] = False
    if args.monolithic:
        data["monolithic"] = True
    if data.get("fixture"):
        data.pop("api_base", None)
    return RunConfig.from_mapping(data)


def _cmd_run(args) -> int:
    report = run_experiment(config_from_args(args))
    print(report_table(report), end="")
    return 0


def _cmd_eval(args) -> int:
    report = evaluate_dir(args.pred)
    if args.metric:
        key = {"em": "em", "rouge1": "rouge1_f", "rougeL": "rougeL_f"}[args.metric]
        for it in report["per_item"]:
            print(f"{it['task_id']}\t{pct(it[key])}")
        print(f"MEAN\t{report['aggregates_x100'][key]}")
    else:
        print(report_table(report), end="")
    return 0


def _cmd_replay(args) -> int:
    try:
        trace = replay(args.trace)
    except ValidationError as exc:
        print(summarize(RunTrace.read(args.trace)))
        print("INVALID")
        for v in exc.violations:
            print(f"  - {v}")
        return 1
    print(summarize(trace))
    print("OK")
    return 0


def _cmd_adapt(args) -> int:
    n = adapt(args.source, args.input, args.output)
    print(json.dumps({"written": n, "out": args.output}))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "eval": _cmd_eval, "replay": _cmd_replay, "adapt": _cmd_adapt}[args.command]
    try:
        return handler(args)
    except (IECacheError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
