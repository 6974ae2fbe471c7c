"""Schema-guided extraction of record rows from raw text."""

from __future__ import annotations

import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal
from typing import Mapping, Union

from .errors import RecordParseError, SchemaParseError
from .jsonscan import find_object_arrays, first_object_array
from .prompts import DEFAULT_PROMPTS, RECORDS_GRAMMAR, PromptSet
from .repair import chat_with_repair
from .schema import MAX_SLOTS, ExtractionSchema, parse_slot_list, render_schema

log = logging.getLogger(__name__)

Cell = Union[str, int, float, bool, None]

CHUNK_TOKEN_BUDGET = 3000
CHUNK_OVERLAP = 200
TOKEN_FACTOR = 1.3
MAX_ROWS = 50
MAX_FOCUS_SLOTS = 2


@dataclass(frozen=True)
class RecordRow:
    values: tuple[tuple[str, Cell], ...]
    source_chunk: int | None = None

    @classmethod
    def build(cls, schema: ExtractionSchema, values: Mapping[str, Cell], source_chunk: int | None = None) -> "RecordRow":
        unknown = set(values) - set(schema.names)
        if unknown:
            raise ValueError(f"cells for undeclared slots: {sorted(unknown)}")
        return cls(tuple((n, values.get(n)) for n in schema.names), source_chunk)

    def get(self, name: str) -> Cell:
        for n, v in self.values:
            if n == name:
                return v
        return None

    def as_dict(self) -> dict[str, Cell]:
        return dict(self.values)

    def conform(self, schema: ExtractionSchema) -> "RecordRow":
        d = self.as_dict()
        return RecordRow(tuple((n, d.get(n)) for n in schema.names), self.source_chunk)


@dataclass
class RecordSet:
    schema: ExtractionSchema
    rows: list[RecordRow]
    focus: str | None = None
    # bookkeeping for traces; not part of the record set's identity
    outputs: list[str] = field(default_factory=list, compare=False)
    warnings: list[str] = field(default_factory=list, compare=False)


@dataclass(frozen=True)
class Chunk:
    index: int
    text: str
    char_span: tuple[int, int]


# --------------------------------------------------------------------------
# chunking


def estimate_tokens(text: str) -> float:
    return len(text.split()) * TOKEN_FACTOR


def chunk_text(text: str, budget_tokens: int = CHUNK_TOKEN_BUDGET, overlap_tokens: int = CHUNK_OVERLAP) -> list[Chunk]:
    """Split on word boundaries so each chunk fits the token budget.

    Token counts use the whitespace approximation (words x 1.3). Consecutive
    chunks share ``overlap_tokens`` worth of words; chunk 0 starts at offset
    0 and the last chunk ends at ``len(text)``, so the spans cover the text.
    """
    words_per_chunk = max(1, int(budget_tokens / TOKEN_FACTOR))
    overlap_words = int(overlap_tokens / TOKEN_FACTOR)
    if overlap_words >= words_per_chunk:
        raise ValueError("chunk overlap must be smaller than the chunk budget")
    starts = [m.start() for m in re.finditer(r"\S+", text)]
    if len(starts) <= words_per_chunk:
        return [Chunk(0, text, (0, len(text)))]
    chunks = []
    first = 0
    step = words_per_chunk - overlap_words
    while True:
        last = first + words_per_chunk  # exclusive word index
        begin = 0 if first == 0 else starts[first]
        end = len(text) if last >= len(starts) else starts[last]
        chunks.append(Chunk(len(chunks), text[begin:end], (begin, end)))
        if last >= len(starts):
            break
        first += step
    return chunks


# --------------------------------------------------------------------------
# cells and rows

_BOOL_WORDS = {"true": True, "yes": True, "false": False, "no": False}


def canonical_number(x: int | float) -> str:
    """Shortest round-tripping decimal, fixed-point, no trailing zeros."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        return repr(x)
    if x == 0:
        return "0"
    d = Decimal(repr(x))
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


def cell_text(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return canonical_number(value)
    return str(value)


def _parse_number(s: str) -> int | float | None:
    t = s.strip().replace(",", "")
    if not re.fullmatch(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?", t):
        return None
    if re.fullmatch(r"[+-]?\d+", t):
        return int(t)
    v = float(t)
    return v if math.isfinite(v) else None


def coerce_cell(value, kind: str, warnings: list[str], slot: str) -> Cell:
    if value is None:
        return None
    if isinstance(value, (dict, list)):
        value = json.dumps(value, ensure_ascii=False, sort_keys=True)
        warnings.append(f"{slot}: structured value flattened to text")
        if kind == "text":
            return value
    if kind == "text":
        return cell_text(value) if not isinstance(value, str) else value
    if kind == "number":
        if isinstance(value, bool):
            pass
        elif isinstance(value, (int, float)) and math.isfinite(value):
            return value
        elif isinstance(value, str):
            n = _parse_number(value)
            if n is not None:
                return n
    elif kind == "boolean":
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.strip().lower() in _BOOL_WORDS:
            return _BOOL_WORDS[value.strip().lower()]
    elif kind == "datetime":
        text = " ".join(cell_text(value).split())
        try:
            return datetime.fromisoformat(text).isoformat()
        except ValueError:
            return text
    warnings.append(f"{slot}: could not coerce {value!r} to {kind}; kept as text")
    return cell_text(value)


def rows_from_objects(items: list[dict], schema: ExtractionSchema, warnings: list[str],
                      source_chunk: int | None = None) -> list[RecordRow]:
    names = schema.names
    rows = []
    for obj in items:
        extra = [k for k in obj if k not in names]
        if extra:
            warnings.append(f"dropped undeclared keys {extra}")
        vals = {n: coerce_cell(obj.get(n), schema.slot(n).value_kind, warnings, n) for n in names}
        rows.append(RecordRow.build(schema, vals, source_chunk))
    return rows


def parse_records(text: str, schema: ExtractionSchema, warnings: list[str] | None = None,
                  source_chunk: int | None = None, start: int = 0) -> list[RecordRow]:
    warnings = warnings if warnings is not None else []
    items, _ = first_object_array(text, start)
    if items is None:
        raise RecordParseError("no well-formed array of row objects found")
    return rows_from_objects(items, schema, warnings, source_chunk)


def normalize_row(row: RecordRow) -> str:
    """Dedupe key: cells in slot order, lowercased, whitespace collapsed."""
    parts = []
    for name, value in row.values:
        text = " ".join(cell_text(value).lower().split())
        parts.append(f"{name}={text}")
    return "\x1f".join(parts)


def dedupe_rows(rows: list[RecordRow]) -> list[RecordRow]:
    seen = set()
    out = []
    for r in rows:
        k = normalize_row(r)
        if k not in seen:
            seen.add(k)
            out.append(r)
    return out


# --------------------------------------------------------------------------
# extraction calls


@dataclass(frozen=True)
class ExtractSettings:
    chunk_token_budget: int = CHUNK_TOKEN_BUDGET
    chunk_overlap: int = CHUNK_OVERLAP
    max_rows: int = MAX_ROWS
    repair_retries: int = 2
    allow_focus_slots: bool = False
    workers: int = 1


_NEW_SLOTS = re.compile(r"NEW_SLOTS\s*:", re.IGNORECASE)


def _extract_chunk(query, schema, chunk, focus, model, settings, prompts):
    warnings: list[str] = []
    outputs: list[str] = []
    focus_line = f"\nFOCUS: {focus}\n" if focus else ""
    grammar = RECORDS_GRAMMAR
    if focus and settings.allow_focus_slots:
        grammar = prompts.extract_focus_slots + " " + RECORDS_GRAMMAR
    messages = [
        ("system", prompts.system),
        ("user", prompts.render("extract", query=query, schema=render_schema(schema),
                                focus_line=focus_line, chunk=chunk.text, grammar=grammar)),
    ]
    proposed: list = []

    def parse(text):
        start = 0
        proposed.clear()
        local_schema = schema
        m = _NEW_SLOTS.search(text) if focus and settings.allow_focus_slots else None
        if m:
            try:
                slots, start = parse_slot_list(text, MAX_FOCUS_SLOTS, warnings, m.end())
                proposed.extend(slots)
                local_schema = schema.extend(slots)
            except SchemaParseError as exc:
                warnings.append(f"ignored NEW_SLOTS: {exc}")
                start = m.end()
        return parse_records(text, local_schema, warnings, chunk.index, start)

    try:
        rows = chat_with_repair(model, messages, parse, grammar=grammar,
                                retries=settings.repair_retries, prompts=prompts,
                                outputs=outputs, notes=warnings)
    except RecordParseError as exc:
        warnings.append(f"chunk {chunk.index} contributed no rows: {exc}")
        log.warning("chunk %d: %s", chunk.index, exc)
        rows = []
    return rows, list(proposed), outputs, warnings


def extract(query: str, schema: ExtractionSchema, text: str, focus: str | None, model, *,
            settings: ExtractSettings = ExtractSettings(), prompts: PromptSet = DEFAULT_PROMPTS) -> RecordSet:
    if not text:
        raise ValueError("text must be nonempty")
    chunks = chunk_text(text, settings.chunk_token_budget, settings.chunk_overlap)
    args = [(query, schema, c, focus, model, settings, prompts) for c in chunks]
    if settings.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(settings.workers) as pool:
            results = list(pool.map(lambda a: _extract_chunk(*a), args))
    else:
        results = [_extract_chunk(*a) for a in args]

    final_schema = schema
    all_rows: list[RecordRow] = []
    outputs: list[str] = []
    warnings: list[str] = []
    for rows, proposed, outs, warns in results:
        room = MAX_FOCUS_SLOTS - (len(final_schema.slots) - len(schema.slots))
        if proposed and room > 0:
            final_schema = final_schema.extend(proposed[:room])
        all_rows.extend(rows)
        outputs.extend(outs)
        warnings.extend(warns)
    # proposals beyond the cap leave cells for unknown slots; conform drops them
    all_rows = [
        RecordRow(tuple((n, r.as_dict().get(n)) for n in final_schema.names), r.source_chunk)
        for r in all_rows
    ]
    rows = dedupe_rows(all_rows)
    if len(rows) > settings.max_rows:
        warnings.append(f"extraction truncated from {len(rows)} to {settings.max_rows} rows")
        rows = rows[: settings.max_rows]
    return RecordSet(final_schema, rows, focus, outputs, warnings)


def parse_monolithic(text: str, warnings: list[str], max_slots: int = MAX_SLOTS) -> tuple[ExtractionSchema, list[RecordRow]]:
    try:
        slots, end = parse_slot_list(text, max_slots, warnings)
    except SchemaParseError as exc:
        raise RecordParseError(f"no slot array: {exc}") from exc
    schema = ExtractionSchema(tuple(slots), "induced")
    for items, _ in find_object_arrays(text, end):
        return schema, rows_from_objects(items, schema, warnings, 0)
    raise RecordParseError("no row array after the slot array")


def extract_monolithic(query: str, text: str, model, *, settings: ExtractSettings = ExtractSettings(),
                       prompts: PromptSet = DEFAULT_PROMPTS, max_slots: int = MAX_SLOTS) -> RecordSet:
    if not text:
        raise ValueError("text must be nonempty")
    warnings: list[str] = []
    outputs: list[str] = []
    messages = [("system", prompts.system), ("user", prompts.render("monolithic", query=query, text=text))]
    grammar = "Give a JSON array of slot objects, then a JSON array of row objects."
    schema, rows = chat_with_repair(
        model, messages, lambda t: parse_monolithic(t, warnings, max_slots), grammar=grammar,
        retries=settings.repair_retries, prompts=prompts, outputs=outputs, notes=warnings,
    )
    rows = dedupe_rows(rows)[: settings.max_rows]
    return RecordSet(schema, rows, None, outputs, warnings)
