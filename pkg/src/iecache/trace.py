"""Run traces, their JSONL form, and the replay validator that checks them."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .cache import digest_of, render_cache
from .errors import ValidationError

PHASES = ("schema", "extract", "reason", "update", "check", "final", "fallback")
METHODS = ("iecache", "generic", "cot", "react")
TERMINATIONS = ("final", "step_limit", "aborted")

_PHASE_CODE = {"schema": "S", "extract": "E", "reason": "R", "update": "U",
               "check": "C", "final": "F", "fallback": "B"}
_GRAMMAR = {
    "iecache": re.compile(r"SE(RE(UC?)?)*(RF|B)"),
    "react": re.compile(r"R*(RF|B)"),
    "generic": re.compile(r"F"),
    "cot": re.compile(r"F"),
}
# enough to complete any proper prefix of the grammars above
_COMPLETIONS = ("", "B", "F", "EB", "SEB")


# actions ------------------------------------------------------------------

@dataclass(frozen=True)
class Final:
    answer: str


@dataclass(frozen=True)
class Seek:
    focus: str


@dataclass(frozen=True)
class Read:
    index: int


Action = Final | Seek | Read


def action_to_json(action: Action | None) -> dict | None:
    if action is None:
        return None
    if isinstance(action, Final):
        return {"variant": "final", "answer": action.answer}
    if isinstance(action, Seek):
        return {"variant": "seek", "focus": action.focus}
    return {"variant": "read", "index": action.index}


def action_from_json(obj: dict | None) -> Action | None:
    if obj is None:
        return None
    kind = obj["variant"]
    if kind == "final":
        return Final(obj["answer"])
    if kind == "seek":
        return Seek(obj["focus"])
    if kind == "read":
        return Read(int(obj["index"]))
    raise ValueError(f"unknown action variant {kind!r}")


# records ------------------------------------------------------------------

@dataclass
class StepRecord:
    step: int
    phase: str
    model_output: str = ""
    action: Action | None = None
    cache_digest: str | None = None
    cache_size: int = 0
    warnings: list[str] = field(default_factory=list)
    cache_rendering: str | None = None
    observation: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "step": self.step,
            "phase": self.phase,
            "model_output": self.model_output,
            "action": action_to_json(self.action),
            "cache_digest": self.cache_digest,
            "cache_size": self.cache_size,
            "warnings": list(self.warnings),
            "cache_rendering": self.cache_rendering,
            "observation": self.observation,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "StepRecord":
        return cls(
            step=obj["step"], phase=obj["phase"], model_output=obj.get("model_output", ""),
            action=action_from_json(obj.get("action")), cache_digest=obj.get("cache_digest"),
            cache_size=obj.get("cache_size", 0), warnings=list(obj.get("warnings", [])),
            cache_rendering=obj.get("cache_rendering"), observation=obj.get("observation"),
        )


@dataclass
class RunTrace:
    task_id: str
    method: str
    steps: list[StepRecord] = field(default_factory=list)
    answer: str = ""
    terminated_by: str | None = None
    config: dict[str, Any] = field(default_factory=dict)
    model_calls: int = 0
    error: str | None = None

    def add(self, step: int, phase: str, model_output: str = "", action=None, cache=None,
            warnings=(), observation: str | None = None) -> StepRecord:
        rendering = render_cache(cache) if cache is not None else None
        rec = StepRecord(step, phase, model_output, action,
                         cache.digest if cache is not None else None,
                         len(cache) if cache is not None else 0,
                         list(warnings), rendering, observation)
        self.steps.append(rec)
        return rec

    def phases(self) -> list[str]:
        return [s.phase for s in self.steps]

    def header(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "method": self.method,
            "answer": self.answer,
            "terminated_by": self.terminated_by,
            "model_calls": self.model_calls,
            "error": self.error,
            "config": self.config,
        }

    def dumps(self) -> str:
        lines = [json.dumps(self.header(), ensure_ascii=False)]
        lines += [json.dumps(s.to_json(), ensure_ascii=False) for s in self.steps]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "RunTrace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty trace")
        head = json.loads(lines[0])
        return cls(
            task_id=head["task_id"], method=head["method"],
            steps=[StepRecord.from_json(json.loads(ln)) for ln in lines[1:]],
            answer=head.get("answer", ""), terminated_by=head.get("terminated_by"),
            config=head.get("config", {}), model_calls=head.get("model_calls", 0),
            error=head.get("error"),
        )

    @classmethod
    def read(cls, path) -> "RunTrace":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


# validation ---------------------------------------------------------------

def validate_trace(trace: RunTrace) -> list[str]:
    """Return every violated invariant (empty list when the trace is sound)."""
    problems: list[str] = []
    if trace.method not in METHODS:
        return [f"unknown method {trace.method!r}"]
    if trace.terminated_by not in TERMINATIONS:
        problems.append(f"terminated_by is {trace.terminated_by!r}")
    for i, s in enumerate(trace.steps):
        if s.phase not in PHASES:
            problems.append(f"step record {i}: unknown phase {s.phase!r}")
    if problems and any("unknown phase" in p for p in problems):
        return problems

    codes = "".join(_PHASE_CODE[p] for p in trace.phases())
    grammar = _GRAMMAR[trace.method]
    if trace.terminated_by == "aborted":
        # a partial trace only has to be completable to a sound one
        if not any(grammar.fullmatch(codes + tail) for tail in _COMPLETIONS) or codes[-1:] in ("F", "B"):
            problems.append(f"aborted trace is not a grammar prefix: {' '.join(trace.phases())}")
    elif not grammar.fullmatch(codes):
        problems.append(f"phase grammar violated: {' '.join(trace.phases())}")
    last = trace.phases()[-1] if trace.steps else None
    if (trace.terminated_by == "step_limit") != (last == "fallback"):
        problems.append(f"terminated_by={trace.terminated_by} but last phase is {last}")

    reasons = [s for s in trace.steps if s.phase == "reason"]
    limit_key = "react_max_steps" if trace.method == "react" else "max_steps"
    limit = trace.config.get(limit_key)
    if limit is not None:
        if len(reasons) > limit:
            problems.append(f"{len(reasons)} reason phases exceed the step limit {limit}")
        if last == "fallback" and len(reasons) != limit:
            problems.append(f"fallback after {len(reasons)} reason phases, limit is {limit}")
    if [s.step for s in reasons] != list(range(len(reasons))):
        problems.append("reason steps are not numbered 0, 1, 2, ...")

    for i, s in enumerate(trace.steps):
        nxt = trace.steps[i + 1] if i + 1 < len(trace.steps) else None
        if s.phase == "reason" and trace.method == "iecache" and nxt is not None:
            if nxt.phase == "extract" and not isinstance(s.action, Seek):
                problems.append(f"step record {i}: extract follows a non-seek action")
            if nxt.phase == "final" and not isinstance(s.action, Final):
                problems.append(f"step record {i}: final follows a non-final action")
        if s.cache_rendering is not None:
            if s.cache_digest != digest_of(s.cache_rendering):
                problems.append(f"step record {i} (step {s.step}, {s.phase}): cache digest mismatch")
            if s.cache_size != s.cache_rendering.count("\n"):
                problems.append(f"step record {i} (step {s.step}, {s.phase}): cache_size mismatch")
        elif s.cache_digest is not None:
            problems.append(f"step record {i}: digest without a rendering")

    if trace.terminated_by == "final" and trace.steps and isinstance(trace.steps[-1].action, Final):
        if trace.steps[-1].action.answer != trace.answer:
            problems.append("header answer differs from the final action")

    if trace.method == "iecache" and trace.config.get("update_enabled") is False:
        digests = [s.cache_digest for s in trace.steps if s.cache_digest is not None]
        if digests:
            base = digests[0]
            for i, s in enumerate(trace.steps):
                if s.cache_digest is not None and s.cache_digest != base:
                    problems.append(f"ablation: step record {i} (step {s.step}, {s.phase}) "
                                    "changed the cache with updates disabled")
    return problems


def replay(path) -> RunTrace:
    """Validate a persisted trace; raise ValidationError listing every violation."""
    trace = RunTrace.read(path)
    problems = validate_trace(trace)
    if problems:
        raise ValidationError(problems)
    return trace


def summarize(trace: RunTrace) -> str:
    out = [f"task {trace.task_id} method={trace.method} terminated_by={trace.terminated_by} "
           f"model_calls={trace.model_calls}"]
    for s in trace.steps:
        act = action_to_json(s.action)
        act_s = f" {act['variant']}" if act else ""
        dig = f" cache={s.cache_size}@{s.cache_digest[:10]}" if s.cache_digest else ""
        warn = f" warnings={len(s.warnings)}" if s.warnings else ""
        out.append(f"  [{s.step:>2}] {s.phase:<8}{act_s}{dig}{warn}")
    out.append(f"answer: {trace.answer}")
    return "\n".join(out)
