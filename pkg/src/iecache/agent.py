"""The cache-aware reason/seek/update loop."""

from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass

from .cache import CAPACITY, Cache, init_cache, render_cache, self_check, update_cache
from .errors import AuthMissing, FixtureExhausted, MalformedAction, RunAborted, SchemaParseError, TransportError
from .extraction import CHUNK_OVERLAP, CHUNK_TOKEN_BUDGET, MAX_ROWS, ExtractSettings, RecordSet, extract, extract_monolithic
from .gateway import CallCounter
from .prompts import ACTION_GRAMMAR, DEFAULT_PROMPTS, PromptSet
from .repair import chat_with_repair
from .schema import MAX_SLOTS, ExtractionSchema, SchemaSlot, induce_schema, load_gold_schema
from .trace import Action, Final, Read, RunTrace, Seek

log = logging.getLogger(__name__)

GATEWAY_ERRORS = (TransportError, AuthMissing, FixtureExhausted)
TASK_GOLD_SCHEMA = "@task"
FALLBACK_SCHEMA = ExtractionSchema((SchemaSlot("fact", "a fact from the text relevant to the question"),))

_DIRECTIVE = re.compile(r"<(seek|final|read)>(.*?)</\1\s*>", re.IGNORECASE | re.DOTALL)


@dataclass(frozen=True)
class AgentConfig:
    max_steps: int = 8
    update_enabled: bool = True
    check_interval: int = 0
    repair_retries: int = 2
    monolithic: bool = False
    gold_schema_path: str | None = None
    allow_focus_slots: bool = False
    capacity: int = CAPACITY
    max_slots: int = MAX_SLOTS
    chunk_token_budget: int = CHUNK_TOKEN_BUDGET
    chunk_overlap: int = CHUNK_OVERLAP
    max_rows: int = MAX_ROWS
    extract_workers: int = 1

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.check_interval < 0 or self.repair_retries < 0:
            raise ValueError("check_interval and repair_retries must be nonnegative")

    def extract_settings(self) -> ExtractSettings:
        return ExtractSettings(self.chunk_token_budget, self.chunk_overlap, self.max_rows,
                               self.repair_retries, self.allow_focus_slots, self.extract_workers)


def parse_action(text: str, verbs: tuple[str, ...] = ("seek", "final")) -> Action:
    """Exactly one ``<verb>...</verb>`` directive; tags are case-insensitive."""
    found = _DIRECTIVE.findall(text)
    if len(found) != 1:
        raise MalformedAction(f"expected exactly one directive, found {len(found)}")
    verb, inner = found[0][0].lower(), found[0][1].strip()
    if verb not in verbs:
        raise MalformedAction(f"<{verb}> is not an allowed action here")
    if not inner:
        raise MalformedAction(f"empty <{verb}> directive")
    if verb == "final":
        return Final(inner)
    if verb == "seek":
        return Seek(inner)
    try:
        return Read(int(inner))
    except ValueError:
        raise MalformedAction(f"<read> needs an integer, got {inner!r}") from None


def render_action(action: Action) -> str:
    if isinstance(action, Final):
        return f"<final>{action.answer}</final>"
    if isinstance(action, Seek):
        return f"<seek>{action.focus}</seek>"
    return f"<read>{action.index}</read>"


def strip_directives(text: str) -> str:
    return _DIRECTIVE.sub("", text).strip()


def reason(query: str, cache_rendering: str, model, *, repair_retries: int = 2,
           prompts: PromptSet = DEFAULT_PROMPTS, outputs: list[str] | None = None,
           notes: list[str] | None = None) -> tuple[str, Action]:
    outputs = outputs if outputs is not None else []
    notes = notes if notes is not None else []
    messages = [
        ("system", prompts.system),
        ("user", prompts.render("reason", query=query, cache=cache_rendering, grammar=ACTION_GRAMMAR)),
    ]
    try:
        action = chat_with_repair(model, messages, parse_action, grammar=ACTION_GRAMMAR,
                                  retries=repair_retries, prompts=prompts, outputs=outputs, notes=notes)
    except MalformedAction:
        reasoning = strip_directives(outputs[-1])
        focus = reasoning[:200].strip() or query[:200].strip()
        notes.append("irreparable action; degraded to seek")
        log.warning("reason output unusable after %d repairs; seeking %r", repair_retries, focus[:40])
        return reasoning, Seek(focus)
    return strip_directives(outputs[-1]), action


def _final_inner(text: str) -> str:
    m = re.search(r"<final>(.*?)</final\s*>", text, re.IGNORECASE | re.DOTALL)
    return m.group(1).strip() if m else text


def fallback_answer(query: str, cache: Cache, model, *, prompts: PromptSet = DEFAULT_PROMPTS,
                    outputs: list[str] | None = None) -> str:
    text = model.chat([
        ("system", prompts.system),
        ("user", prompts.render("fallback", query=query, cache=render_cache(cache))),
    ])
    if outputs is not None:
        outputs.append(text)
    return _final_inner(text)


def _initial_records(task, config: AgentConfig, model, prompts, trace: RunTrace) -> RecordSet:
    settings = config.extract_settings()
    if config.monolithic:
        notes: list[str] = []
        try:
            rs = extract_monolithic(task.query, task.text, model, settings=settings, prompts=prompts,
                                    max_slots=config.max_slots)
        except Exception as exc:  # noqa: BLE001 - parse failures degrade, gateway errors re-raise
            if isinstance(exc, GATEWAY_ERRORS):
                raise
            notes.append(f"monolithic extraction unusable ({exc}); using fallback schema")
            rs = RecordSet(FALLBACK_SCHEMA, [], None, [], [])
        trace.add(0, "schema", "", warnings=["schema and rows come from one monolithic call"] + notes)
        return rs

    outputs: list[str] = []
    notes = []
    if config.gold_schema_path == TASK_GOLD_SCHEMA:
        if task.gold_schema is None:
            raise ValueError(f"task {task.id} has no gold schema")
        schema = task.gold_schema
        notes.append("gold schema from the task record")
    elif config.gold_schema_path:
        schema = load_gold_schema(config.gold_schema_path, config.max_slots)
        notes.append(f"gold schema from {config.gold_schema_path}")
    else:
        try:
            schema = induce_schema(task.query, model, max_slots=config.max_slots,
                                   repair_retries=config.repair_retries, prompts=prompts,
                                   outputs=outputs, notes=notes)
        except SchemaParseError:
            notes.append("schema induction failed; using fallback schema")
            schema = FALLBACK_SCHEMA
    trace.add(0, "schema", outputs[-1] if outputs else "", warnings=notes)
    return extract(task.query, schema, task.text, None, model, settings=settings, prompts=prompts)


def run(task, config: AgentConfig, model, *, prompts: PromptSet = DEFAULT_PROMPTS) -> tuple[str, RunTrace]:
    if not task.query.strip() or not task.text:
        raise ValueError("task needs a nonempty query and text")
    counter = CallCounter(model)
    trace = RunTrace(task.id, "iecache", config=asdict(config))
    try:
        _run(task, config, counter, prompts, trace)
    except GATEWAY_ERRORS as exc:
        trace.terminated_by = "aborted"
        trace.error = f"{type(exc).__name__}: {exc}"
        trace.model_calls = counter.calls
        raise RunAborted(exc, trace) from exc
    trace.model_calls = counter.calls
    return trace.answer, trace


def _run(task, config: AgentConfig, model, prompts: PromptSet, trace: RunTrace) -> None:
    q = task.query
    records = _initial_records(task, config, model, prompts, trace)
    cache = init_cache(q, records, config.capacity)
    trace.add(0, "extract", "\n".join(records.outputs), cache=cache, warnings=records.warnings)

    settings = config.extract_settings()
    for t in range(config.max_steps):
        outputs: list[str] = []
        notes: list[str] = []
        reasoning, action = reason(q, render_cache(cache), model, repair_retries=config.repair_retries,
                                   prompts=prompts, outputs=outputs, notes=notes)
        trace.add(t, "reason", outputs[-1], action, cache, notes)
        if isinstance(action, Final):
            trace.add(t, "final", "", action, cache)
            trace.answer = action.answer
            trace.terminated_by = "final"
            return

        found = extract(q, cache.schema, task.text, action.focus, model, settings=settings, prompts=prompts)
        trace.add(t, "extract", "\n".join(found.outputs), cache=cache, warnings=found.warnings)
        if not config.update_enabled:
            continue
        outputs, notes = [], []
        cache = update_cache(q, cache.schema, cache, found, t, model, repair_retries=config.repair_retries,
                             prompts=prompts, outputs=outputs, notes=notes)
        trace.add(t, "update", "\n".join(outputs), cache=cache, warnings=notes)
        if config.check_interval > 0 and (t + 1) % config.check_interval == 0:
            outputs, notes = [], []
            cache = self_check(q, cache.schema, cache, reasoning, t, model,
                               repair_retries=config.repair_retries, prompts=prompts,
                               outputs=outputs, notes=notes)
            trace.add(t, "check", "\n".join(outputs), cache=cache, warnings=notes)

    outputs = []
    trace.answer = fallback_answer(q, cache, model, prompts=prompts, outputs=outputs)
    trace.add(config.max_steps, "fallback", outputs[-1], cache=cache)
    trace.terminated_by = "step_limit"
