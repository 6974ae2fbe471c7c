"""Query-conditioned extraction schemas: induction, parsing, gold loading."""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass

from .errors import SchemaNotFound, SchemaParseError
from .jsonscan import find_object_arrays
from .prompts import DEFAULT_PROMPTS, SCHEMA_GRAMMAR, PromptSet
from .repair import chat_with_repair

log = logging.getLogger(__name__)

MAX_SLOTS = 12
VALUE_KINDS = ("text", "number", "datetime", "boolean")
ORIGINS = ("induced", "gold", "focus_extended")
NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")

_KIND_ALIASES = {
    "text": "text", "string": "text", "str": "text",
    "number": "number", "integer": "number", "int": "number", "float": "number",
    "real": "number", "numeric": "number", "decimal": "number",
    "datetime": "datetime", "date": "datetime", "time": "datetime", "timestamp": "datetime",
    "boolean": "boolean", "bool": "boolean", "yes/no": "boolean", "yes_no": "boolean",
}


@dataclass(frozen=True)
class SchemaSlot:
    name: str
    description: str = ""
    value_kind: str = "text"

    def __post_init__(self):
        if not NAME_RE.match(self.name):
            raise ValueError(f"invalid slot name {self.name!r}")
        if self.value_kind not in VALUE_KINDS:
            raise ValueError(f"invalid value kind {self.value_kind!r}")


@dataclass(frozen=True)
class ExtractionSchema:
    slots: tuple[SchemaSlot, ...]
    origin: str = "induced"

    def __post_init__(self):
        if not self.slots:
            raise ValueError("schema needs at least one slot")
        names = [s.name for s in self.slots]
        if len(set(names)) != len(names):
            raise ValueError("slot names must be distinct")
        if self.origin not in ORIGINS:
            raise ValueError(f"invalid origin {self.origin!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.slots)

    def slot(self, name: str) -> SchemaSlot:
        for s in self.slots:
            if s.name == name:
                return s
        raise KeyError(name)

    def extend(self, extra: list[SchemaSlot]) -> "ExtractionSchema":
        known = set(self.names)
        new = [s for s in extra if s.name not in known]
        if not new:
            return self
        return ExtractionSchema(self.slots + tuple(new), "focus_extended")


def normalize_slot_name(raw: str) -> str:
    """Lowercase snake form; empty string when nothing usable remains."""
    if re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", raw.strip()):
        return raw.strip().lower()
    name = re.sub(r"[^0-9a-zA-Z]+", "_", raw.strip()).strip("_").lower()
    name = re.sub(r"_+", "_", name)
    return name


def map_kind(raw) -> tuple[str, bool]:
    """Return (value_kind, recognized)."""
    if raw is None:
        return "text", True
    key = str(raw).strip().lower()
    if key in _KIND_ALIASES:
        return _KIND_ALIASES[key], True
    if key in ("yes", "no"):
        return "boolean", True
    return "text", False


def _slots_from_objects(items: list[dict], strict: bool, warnings: list[str]) -> list[SchemaSlot]:
    slots: list[SchemaSlot] = []
    seen: set[str] = set()
    for i, obj in enumerate(items):
        raw_name = obj.get("name")
        if not isinstance(raw_name, str):
            if strict:
                raise SchemaParseError(f"slot {i} has no string name")
            warnings.append(f"slot {i} dropped: no name")
            continue
        if strict:
            if not re.match(r"^[A-Za-z][A-Za-z0-9_]*$", raw_name):
                raise SchemaParseError(f"slot name {raw_name!r} is not an identifier")
            name = raw_name.lower()
        else:
            name = normalize_slot_name(raw_name)
            if not NAME_RE.match(name):
                warnings.append(f"slot {raw_name!r} dropped: not a valid identifier")
                continue
        if name in seen:
            if strict:
                raise SchemaParseError(f"duplicate slot name {name!r}")
            warnings.append(f"duplicate slot {raw_name!r} dropped")
            continue
        raw_kind = obj.get("kind", obj.get("value_kind", obj.get("type")))
        kind, known = map_kind(raw_kind)
        if not known:
            if strict:
                raise SchemaParseError(f"unknown kind {raw_kind!r} for slot {name!r}")
            warnings.append(f"slot {name!r}: unknown kind {raw_kind!r} mapped to text")
        desc = obj.get("description", "")
        seen.add(name)
        slots.append(SchemaSlot(name, desc if isinstance(desc, str) else str(desc), kind))
    return slots


def parse_slot_list(text: str, max_slots: int = MAX_SLOTS, warnings: list[str] | None = None,
                    start: int = 0) -> tuple[list[SchemaSlot], int]:
    """Lenient parse of the first non-empty object array into slots."""
    warnings = warnings if warnings is not None else []
    for items, end in find_object_arrays(text, start):
        if not items:
            continue
        slots = _slots_from_objects(items, False, warnings)
        if not slots:
            raise SchemaParseError("no valid slots in the slot array")
        if len(slots) > max_slots:
            msg = f"schema truncated from {len(slots)} to {max_slots} slots"
            log.info(msg)
            warnings.append(msg)
            slots = slots[:max_slots]
        return slots, end
    raise SchemaParseError("no well-formed non-empty slot array found")


def parse_schema(text: str, max_slots: int = MAX_SLOTS, warnings: list[str] | None = None) -> ExtractionSchema:
    if warnings is None:
        warnings = []
    slots, _ = parse_slot_list(text, max_slots, warnings)
    for w in warnings:
        log.warning(w)
    return ExtractionSchema(tuple(slots), "induced")


def render_schema(schema: ExtractionSchema) -> str:
    return json.dumps(
        [{"name": s.name, "description": s.description, "kind": s.value_kind} for s in schema.slots],
        ensure_ascii=False,
    )


def induce_schema(query: str, model, *, max_slots: int = MAX_SLOTS, repair_retries: int = 2,
                  prompts: PromptSet = DEFAULT_PROMPTS, outputs: list[str] | None = None,
                  notes: list[str] | None = None) -> ExtractionSchema:
    if not query.strip():
        raise ValueError("query must be nonempty")
    messages = [
        ("system", prompts.system),
        ("user", prompts.render("schema", query=query, max_slots=max_slots, grammar=SCHEMA_GRAMMAR)),
    ]
    return chat_with_repair(
        model, messages, lambda t: parse_schema(t, max_slots, notes),
        grammar=SCHEMA_GRAMMAR, retries=repair_retries, prompts=prompts, outputs=outputs, notes=notes,
    )


def schema_from_json(data, max_slots: int = MAX_SLOTS) -> ExtractionSchema:
    """Strict conversion used for gold schemas; any defect raises."""
    if not isinstance(data, list) or not all(isinstance(d, dict) for d in data):
        raise SchemaParseError("gold schema must be a JSON array of slot objects")
    if not data:
        raise SchemaParseError("gold schema is empty")
    slots = _slots_from_objects(data, True, [])
    if len(slots) > max_slots:
        raise SchemaParseError(f"gold schema has {len(slots)} slots, limit is {max_slots}")
    return ExtractionSchema(tuple(slots), "gold")


def load_gold_schema(path: str | os.PathLike, max_slots: int = MAX_SLOTS) -> ExtractionSchema:
    try:
        with open(path, encoding="utf-8") as f:
            raw = f.read()
    except FileNotFoundError as exc:
        raise SchemaNotFound(f"gold schema not found: {path}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaParseError(f"{path}: {exc}") from exc
    return schema_from_json(data, max_slots)
