"""Canonical task records and adapters for the public benchmark releases.

Canonical JSONL, one task per line::

    {"id", "family", "query", "text", "golds": [...],
     "gold_schema"?: [slot objects], "gold_table"?: {"slots": [...], "rows": [...]}}

The datasets themselves are not shipped. Each adapter pins the release
layout it reads; see the individual ``adapt_*`` docstrings.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import AdapterError, DatasetFormatError, DuplicateId, SchemaParseError
from .schema import ExtractionSchema, render_schema, schema_from_json

FAMILIES = ("qa", "planning", "summarization")


@dataclass(frozen=True)
class GoldTable:
    slots: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.slots):
                raise ValueError("gold table rows must match the slot list")

    @classmethod
    def from_json(cls, obj) -> "GoldTable":
        if not isinstance(obj, dict) or not isinstance(obj.get("slots"), list):
            raise ValueError("gold_table needs a 'slots' list")
        slots = tuple(str(s) for s in obj["slots"])
        rows = []
        for r in obj.get("rows", []):
            if isinstance(r, dict):
                if set(r) != set(slots):
                    raise ValueError("gold table row keys differ from slots")
                rows.append(tuple(r[s] for s in slots))
            elif isinstance(r, list):
                if len(r) != len(slots):
                    raise ValueError("gold table row length differs from slots")
                rows.append(tuple(r))
            else:
                raise ValueError("gold table rows must be objects or arrays")
        return cls(slots, tuple(rows))

    def to_json(self) -> dict:
        return {"slots": list(self.slots), "rows": [list(r) for r in self.rows]}

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.slots, r)) for r in self.rows]


@dataclass(frozen=True)
class TaskInstance:
    id: str
    query: str
    text: str
    golds: tuple[str, ...]
    family: str = "qa"
    gold_schema: ExtractionSchema | None = None
    gold_table: GoldTable | None = None

    def __post_init__(self):
        if not self.query.strip() or not self.text.strip():
            raise ValueError("query and text must be nonempty")
        if not self.golds:
            raise ValueError("at least one gold answer is required")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def to_json(self) -> dict:
        obj = {"id": self.id, "family": self.family, "query": self.query, "text": self.text,
               "golds": list(self.golds)}
        if self.gold_schema is not None:
            obj["gold_schema"] = json.loads(render_schema(self.gold_schema))
        if self.gold_table is not None:
            obj["gold_table"] = self.gold_table.to_json()
        return obj


def task_from_json(obj) -> TaskInstance:
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    for key in ("id", "query", "text", "golds"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
    golds = obj["golds"]
    if not isinstance(golds, list) or not golds or not all(isinstance(g, str) for g in golds):
        raise ValueError("'golds' must be a nonempty list of strings")
    if not isinstance(obj["query"], str) or not isinstance(obj["text"], str):
        raise ValueError("'query' and 'text' must be strings")
    gold_schema = None
    if obj.get("gold_schema") is not None:
        try:
            gold_schema = schema_from_json(obj["gold_schema"])
        except SchemaParseError as exc:
            raise ValueError(f"gold_schema: {exc}") from exc
    gold_table = GoldTable.from_json(obj["gold_table"]) if obj.get("gold_table") is not None else None
    return TaskInstance(str(obj["id"]), obj["query"], obj["text"], tuple(golds),
                        obj.get("family", "qa"), gold_schema, gold_table)


def load_dataset(path: str | os.PathLike) -> list[TaskInstance]:
    tasks: list[TaskInstance] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                task = task_from_json(json.loads(line))
            except (json.JSONDecodeError, ValueError) as exc:
                raise DatasetFormatError(str(exc), lineno) from exc
            if task.id in seen:
                raise DuplicateId(f"duplicate id {task.id!r}", lineno)
            seen.add(task.id)
            tasks.append(task)
    return tasks


def write_dataset(tasks: Iterable[TaskInstance], path: str | os.PathLike) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for t in tasks:
            f.write(json.dumps(t.to_json(), ensure_ascii=False) + "\n")
            n += 1
    return n


# --------------------------------------------------------------------------
# adapters


def _read_records(path) -> list:
    """JSON array, JSON object keyed by id, or JSONL; empty file gives []."""
    raw = Path(path).read_text(encoding="utf-8")
    if not raw.strip():
        return []
    try:
        data = json.loads(raw)
    except json.JSONDecodeError:
        data = [json.loads(ln) for ln in raw.splitlines() if ln.strip()]
    if isinstance(data, dict):
        # an object of objects is keyed by id; any other object is one record
        if data and all(isinstance(v, dict) for v in data.values()):
            return [dict(v, _key=k) for k, v in data.items()]
        return [data]
    if not isinstance(data, list):
        raise AdapterError("source must hold JSON objects")
    for i, rec in enumerate(data):
        if not isinstance(rec, dict):
            raise AdapterError(f"record {i} is not a JSON object", str(i))
    return data


def _first(obj: dict, *keys):
    for k in keys:
        if obj.get(k) not in (None, ""):
            return obj[k]
    return None


def _task(rid: str, *args) -> TaskInstance:
    try:
        return TaskInstance(rid, *args)
    except ValueError as exc:
        raise AdapterError(str(exc), rid) from exc


def adapt_qmsum(records: list, source: str = "qmsum") -> Iterator[TaskInstance]:
    """QMSum release (github.com/Yale-LILY/QMSum, data/ALL/jsonl/*.jsonl).

    One meeting per line with ``meeting_transcripts`` ([{speaker, content}]),
    ``general_query_list`` and ``specific_query_list`` ([{query, answer}]).
    Every query becomes one summarization task over the flattened transcript.
    """
    for i, meeting in enumerate(records):
        mid = str(meeting.get("meeting_id", meeting.get("_key", f"{source}-{i}")))
        turns = meeting.get("meeting_transcripts")
        if not isinstance(turns, list):
            raise AdapterError("missing meeting_transcripts", mid)
        lines = []
        for turn in turns:
            if not isinstance(turn, dict) or "speaker" not in turn or "content" not in turn:
                raise AdapterError("transcript turn without speaker/content", mid)
            lines.append(f"{turn['speaker']}: {' '.join(str(turn['content']).split())}")
        text = "\n".join(lines)
        for kind, key in (("g", "general_query_list"), ("s", "specific_query_list")):
            for j, q in enumerate(meeting.get(key) or []):
                qid = f"{mid}-{kind}{j}"
                if not q.get("query") or not q.get("answer"):
                    raise AdapterError("query item without query/answer", qid)
                yield _task(qid, q["query"], text, (q["answer"],), "summarization")


_CAL_TIME = re.compile(r"([A-Z][a-z]+day)\s*,\s*(\d{1,2}:\d{2})\s*-\s*(\d{1,2}:\d{2})")
CALENDAR_QUERY = ("Find a meeting time that works for every participant's schedule and constraints. "
                  "Answer as '<Day>, <HH:MM> - <HH:MM>'.")


def adapt_calendar(records: list) -> Iterator[TaskInstance]:
    """Natural Plan calendar scheduling (calendar_scheduling.json).

    A JSON object keyed by example id; each value carries ``prompt_0shot`` and
    ``golden_plan`` ("Here is the proposed time: Monday, 14:30 - 15:30").
    The gold becomes the "<Day>, <HH:MM> - <HH:MM>" part of golden_plan.
    """
    for i, rec in enumerate(records):
        rid = str(rec.get("id", rec.get("_key", f"calendar-{i}")))
        prompt = _first(rec, "prompt_0shot", "prompt")
        plan = _first(rec, "golden_plan", "answer")
        if not isinstance(prompt, str) or not isinstance(plan, str):
            raise AdapterError("needs prompt_0shot and golden_plan", rid)
        text = re.sub(r"\s*SOLUTION:\s*$", "", prompt.strip())
        m = _CAL_TIME.search(plan)
        gold = f"{m.group(1)}, {m.group(2)} - {m.group(3)}" if m else plan.strip()
        yield _task(rid, CALENDAR_QUERY, text, (gold,), "planning")


def adapt_tact(records: list) -> Iterator[TaskInstance]:
    """TACT release as JSON/JSONL records.

    Pinned layout: ``id``, ``instruction`` (or ``question``), ``text`` (or
    ``context``), ``answer`` (string or list), optional ``table`` given as
    {"columns"|"slots": [...], "rows": [...]} and optional ``schema`` (slot
    objects). The table is carried into gold_table, the schema into gold_schema.
    """
    for i, rec in enumerate(records):
        rid = str(rec.get("id", rec.get("_key", f"tact-{i}")))
        query = _first(rec, "instruction", "question", "query")
        text = _first(rec, "text", "context", "document")
        answer = _first(rec, "answer", "answers", "label")
        if not isinstance(query, str) or not isinstance(text, str) or answer is None:
            raise AdapterError("needs instruction, text and answer", rid)
        golds = tuple(str(a) for a in answer) if isinstance(answer, list) else (str(answer),)
        table = None
        raw_table = rec.get("table")
        if raw_table is not None:
            try:
                if isinstance(raw_table, dict) and "columns" in raw_table:
                    raw_table = {"slots": raw_table["columns"], "rows": raw_table.get("rows", [])}
                table = GoldTable.from_json(raw_table)
            except (ValueError, KeyError) as exc:
                raise AdapterError(f"bad table: {exc}", rid) from exc
        schema = None
        if rec.get("schema") is not None:
            try:
                schema = schema_from_json(rec["schema"])
            except SchemaParseError as exc:
                raise AdapterError(f"bad schema: {exc}", rid) from exc
        yield _task(rid, query, text, golds, "qa", schema, table)


ADAPTERS = {"tact": adapt_tact, "calendar": adapt_calendar, "qmsum": adapt_qmsum}


def adapt(source_format: str, input_path, output_path) -> int:
    if source_format not in ADAPTERS:
        raise ValueError(f"unknown source format {source_format!r}")
    records = _read_records(input_path)
    try:
        tasks = list(ADAPTERS[source_format](records))
    except ValueError as exc:
        raise AdapterError(str(exc)) from exc
    return write_dataset(tasks, output_path)
