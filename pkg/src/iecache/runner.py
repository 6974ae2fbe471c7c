"""Experiment orchestration: method dispatch, repeats, trace files, reports.

Output directory layout::

    traces/<task id>.<repeat>.jsonl
    report.json
    report.txt
    config.snapshot
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from statistics import fmean

import yaml

from .agent import AgentConfig, run as run_iecache
from .baselines import BaselineConfig, run_baseline
from .cache import parse_rendering
from .datasets import TaskInstance, load_dataset
from .errors import AuthMissing, RunAborted
from .evaluation import (EXTRACTION_METRICS, METRICS, ItemScore, MetricReport, dumps_report, extraction_quality_table,
                         format_table, pct, score_item)
from .gateway import Gateway, HttpBackend, ModelProfile, load_fixture
from .prompts import DEFAULT_PROMPTS, PromptSet
from .trace import RunTrace

log = logging.getLogger(__name__)

METHODS = ("iecache", "generic", "cot", "react")
PRIMARY_METRIC = {"qa": "em", "planning": "em", "summarization": "rouge1_f"}


@dataclass
class RunConfig:
    dataset: str = ""
    method: str = "iecache"
    out: str = "runs/latest"
    repeats: int = 1
    parallel_workers: int = 4
    fixture: str | None = None
    record_fixture: str | None = None
    # model profile
    model: str = "gpt-4o"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    api_base: str | None = None
    auth_source: str = "IECACHE_API_KEY"
    retry_limit: int = 2
    # agent
    max_steps: int = 8
    update_enabled: bool = True
    check_interval: int = 0
    repair_retries: int = 2
    monolithic: bool = False
    gold_schema: str | None = None
    allow_focus_slots: bool = False
    capacity: int = 50
    max_slots: int = 12
    chunk_token_budget: int = 3000
    chunk_overlap: int = 200
    max_rows: int = 50
    # baselines
    react_max_steps: int = 8
    react_window_tokens: int = 3000
    # optional prompt overrides: a YAML/JSON mapping of template name to text
    prompts: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.repeats < 1 or self.parallel_workers < 1:
            raise ValueError("repeats and parallel_workers must be positive")
        if self.fixture and self.api_base:
            raise ValueError("fixture and live endpoint are mutually exclusive")

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            max_steps=self.max_steps, update_enabled=self.update_enabled, check_interval=self.check_interval,
            repair_retries=self.repair_retries, monolithic=self.monolithic, gold_schema_path=self.gold_schema,
            allow_focus_slots=self.allow_focus_slots, capacity=self.capacity, max_slots=self.max_slots,
            chunk_token_budget=self.chunk_token_budget, chunk_overlap=self.chunk_overlap, max_rows=self.max_rows,
        )

    def baseline_config(self) -> BaselineConfig:
        return BaselineConfig(self.method, self.react_max_steps, self.react_window_tokens, self.repair_retries)

    def profile(self) -> ModelProfile:
        return ModelProfile(self.model, self.temperature, self.max_output_tokens, self.api_base, self.auth_source)


def load_config_file(path) -> dict:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ValueError("config file must be a flat key-value mapping")
    return data


def build_gateway(config: RunConfig) -> Gateway:
    if config.fixture:
        backend = load_fixture(config.fixture)
    else:
        backend = HttpBackend(config.api_base, retry_limit=config.retry_limit)
    return Gateway(backend, config.profile(), record=bool(config.record_fixture))


def load_prompts(config: RunConfig) -> PromptSet:
    if not config.prompts:
        return DEFAULT_PROMPTS
    return DEFAULT_PROMPTS.with_overrides(load_config_file(config.prompts))


def trace_name(task_id: str, repeat: int) -> str:
    safe = re.sub(r"[^A-Za-z0-9_.-]", "_", task_id)
    return f"{safe}.{repeat}.jsonl"


def run_task(task: TaskInstance, config: RunConfig, model, prompts: PromptSet = DEFAULT_PROMPTS) -> RunTrace:
    """Run one method on one task; gateway failures come back as an aborted trace."""
    try:
        if config.method == "iecache":
            _, trace = run_iecache(task, config.agent_config(), model, prompts=prompts)
        else:
            _, trace = run_baseline(task, config.baseline_config(), model, prompts=prompts)
    except RunAborted as exc:
        if isinstance(exc.cause, AuthMissing):
            raise exc.cause
        log.error("task %s aborted: %s", task.id, exc.cause)
        return exc.trace
    return trace


def _extraction_scores(task: TaskInstance, trace: RunTrace) -> tuple[float | None, float | None]:
    if trace.method != "iecache" or task.gold_table is None or trace.terminated_by == "aborted":
        return None, None
    renderings = [s.cache_rendering for s in trace.steps if s.cache_rendering is not None]
    if not renderings:
        return None, None
    slots, rows = parse_rendering(renderings[-1])
    return extraction_quality_table(slots, rows, task.gold_table)


def score_trace(task: TaskInstance, trace: RunTrace) -> ItemScore:
    if trace.terminated_by == "aborted":
        item = score_item(task.id, None, task.golds, trace.error)
    else:
        item = score_item(task.id, trace.answer, task.golds)
    item.x_rouge1_f, item.x_rougeL_f = _extraction_scores(task, trace)
    return item


def _mean_or_none(values):
    vals = [v for v in values if v is not None]
    return fmean(vals) if vals else None


def assemble_report(tasks: list[TaskInstance], per_repeat: list[MetricReport], method: str) -> dict:
    all_metrics = METRICS + EXTRACTION_METRICS
    per_item = []
    for i, task in enumerate(tasks):
        row = {"task_id": task.id, "family": task.family}
        for m in all_metrics:
            row[m] = _mean_or_none(getattr(rep.per_item[i], m) for rep in per_repeat)
        per_item.append(row)
    repeat_aggs = [rep.aggregates for rep in per_repeat]
    aggregates = {m: _mean_or_none(a[m] for a in repeat_aggs) for m in all_metrics}
    families = sorted({t.family for t in tasks})
    return {
        "method": method,
        "n": len(tasks),
        "repeats": len(per_repeat),
        "primary_metric": {f: PRIMARY_METRIC[f] for f in families},
        "aggregates": aggregates,
        "aggregates_x100": {m: pct(v) for m, v in aggregates.items()},
        "per_item": per_item,
        "per_repeat": [rep.to_json() for rep in per_repeat],
    }


def report_table(report: dict) -> str:
    metrics = list(METRICS + EXTRACTION_METRICS)
    rows = [[it["task_id"]] + [pct(it[m]) for m in metrics] for it in report["per_item"]]
    rows.append([f"MEAN ({report['repeats']} run(s))"] + [report["aggregates_x100"][m] for m in metrics])
    head = f"method={report['method']} n={report['n']} primary={report['primary_metric']}"
    return head + "\n" + format_table(["task"] + metrics, rows) + "\n"


def run_experiment(config: RunConfig) -> dict:
    tasks = load_dataset(config.dataset)
    gateway = build_gateway(config)
    prompts = load_prompts(config)
    out = Path(config.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    (out / "config.snapshot").write_text(
        json.dumps(asdict(config), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    workers = config.parallel_workers
    if config.fixture and getattr(gateway.backend, "mode", None) == "queue" and workers > 1:
        log.info("queue-mode fixture: running serially so responses are consumed in order")
        workers = 1
    jobs = [(i, r) for i in range(len(tasks)) for r in range(config.repeats)]

    def work(job):
        i, r = job
        trace = run_task(tasks[i], config, gateway, prompts)
        trace.write(out / "traces" / trace_name(tasks[i].id, r))
        return trace

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            traces = list(pool.map(work, jobs))
    else:
        traces = [work(j) for j in jobs]

    per_repeat = [MetricReport([None] * len(tasks)) for _ in range(config.repeats)]
    for (i, r), trace in zip(jobs, traces):
        per_repeat[r].per_item[i] = score_trace(tasks[i], trace)
    report = assemble_report(tasks, per_repeat, config.method)
    (out / "report.json").write_text(dumps_report(report), encoding="utf-8")
    (out / "report.txt").write_text(report_table(report), encoding="utf-8")
    if config.record_fixture:
        gateway.save_fixture(config.record_fixture)
    return report


def evaluate_dir(pred_dir) -> dict:
    """Recompute the report of a finished experiment from its traces."""
    pred_dir = Path(pred_dir)
    snap = json.loads((pred_dir / "config.snapshot").read_text(encoding="utf-8"))
    config = RunConfig.from_mapping(snap)
    tasks = load_dataset(config.dataset)
    per_repeat = []
    for r in range(config.repeats):
        items = []
        for task in tasks:
            path = pred_dir / "traces" / trace_name(task.id, r)
            if path.exists():
                items.append(score_trace(task, RunTrace.read(path)))
            else:
                items.append(score_item(task.id, None, task.golds, "missing trace"))
        per_repeat.append(MetricReport(items))
    return assemble_report(tasks, per_repeat, config.method)


def replace_config(config: RunConfig, **overrides) -> RunConfig:
    return dataclasses.replace(config, **{k: v for k, v in overrides.items() if v is not None})

