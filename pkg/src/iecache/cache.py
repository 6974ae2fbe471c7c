"""The read-write cache of schema-conformant entries.

Cache instances are immutable; every operation returns a new one, and the
digest is computed at construction so it always matches the rendering.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

from .errors import RecordParseError
from .extraction import RecordRow, RecordSet, cell_text, dedupe_rows, normalize_row, parse_records
from .prompts import DEFAULT_PROMPTS, RECORDS_GRAMMAR, PromptSet
from .repair import chat_with_repair
from .schema import ExtractionSchema, render_schema

log = logging.getLogger(__name__)

CAPACITY = 50
PROVENANCE_KINDS = ("init", "seek", "check")


@dataclass(frozen=True)
class Provenance:
    kind: str
    step: int = 0

    def __post_init__(self):
        if self.kind not in PROVENANCE_KINDS:
            raise ValueError(f"bad provenance {self.kind!r}")
        if self.kind == "init" and self.step != 0:
            raise ValueError("init provenance is always step 0")

    def __str__(self):
        return "init" if self.kind == "init" else f"{self.kind}({self.step})"


@dataclass(frozen=True)
class CacheEntry:
    row: RecordRow
    provenance: Provenance

    @property
    def added_step(self) -> int:
        return self.provenance.step

    @property
    def key(self) -> str:
        return normalize_row(self.row)


def _escape(text: str) -> str:
    return (text.replace("\\", "\\\\").replace("|", "\\|")
            .replace("\r\n", "\\n").replace("\n", "\\n").replace("\r", "\\n"))


def render_table(schema: ExtractionSchema, rows) -> str:
    lines = ["|".join(_escape(n) for n in schema.names)]
    for row in rows:
        lines.append("|".join(_escape(cell_text(row.get(n))) for n in schema.names))
    return "\n".join(lines)


def _split_escaped(line: str) -> list[str]:
    cells, cur, i = [], [], 0
    while i < len(line):
        ch = line[i]
        if ch == "\\" and i + 1 < len(line):
            nxt = line[i + 1]
            cur.append({"n": "\n", "|": "|", "\\": "\\"}.get(nxt, nxt))
            i += 2
            continue
        if ch == "|":
            cells.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    cells.append("".join(cur))
    return cells


def parse_rendering(text: str) -> tuple[list[str], list[dict]]:
    """Inverse of the table rendering; cells come back as text, empty as None."""
    lines = text.split("\n")
    slots = _split_escaped(lines[0])
    rows = []
    for ln in lines[1:]:
        cells = _split_escaped(ln)
        rows.append({s: (c if c != "" else None) for s, c in zip(slots, cells)})
    return slots, rows


def digest_of(rendering: str) -> str:
    return hashlib.sha256(rendering.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Cache:
    schema: ExtractionSchema
    entries: tuple[CacheEntry, ...] = ()
    capacity: int = CAPACITY
    digest: str = field(init=False)

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        object.__setattr__(self, "digest", digest_of(render_cache(self)))

    def __len__(self):
        return len(self.entries)

    @property
    def rows(self) -> list[RecordRow]:
        return [e.row for e in self.entries]

    def keys(self) -> list[str]:
        return [e.key for e in self.entries]

    def check_invariants(self) -> None:
        keys = self.keys()
        assert len(set(keys)) == len(keys), "duplicate cache entries"
        assert len(self.entries) <= self.capacity, "cache over capacity"
        assert self.digest == digest_of(render_cache(self)), "stale digest"
        for e in self.entries:
            assert e.row.values and tuple(n for n, _ in e.row.values) == self.schema.names, "row does not conform"


def render_cache(cache: Cache) -> str:
    """Pipe-delimited table: header of slot names, one line per entry.

    Nulls render empty; backslash, pipe and newline inside cells are escaped
    as ``\\\\``, ``\\|`` and ``\\n``. No trailing newline.
    """
    return render_table(cache.schema, cache.rows)


def _cache_json(schema: ExtractionSchema, rows) -> str:
    return json.dumps([{n: r.get(n) for n in schema.names} for r in rows], ensure_ascii=False)


def _evict(entries: list[CacheEntry], capacity: int) -> list[CacheEntry]:
    """Drop the oldest (lowest added_step, earliest position) entries beyond capacity."""
    if len(entries) <= capacity:
        return entries
    order = sorted(range(len(entries)), key=lambda i: (entries[i].added_step, i))
    drop = set(order[: len(entries) - capacity])
    log.info("cache over capacity: evicting %d entries", len(drop))
    return [e for i, e in enumerate(entries) if i not in drop]


def _conform(cache: Cache, schema: ExtractionSchema) -> Cache:
    if schema == cache.schema:
        return cache
    if not set(cache.schema.names) <= set(schema.names):
        raise ValueError("new records do not extend the cache schema")
    entries = tuple(CacheEntry(e.row.conform(schema), e.provenance) for e in cache.entries)
    return Cache(schema, entries, cache.capacity)


def init_cache(query: str, extraction: RecordSet, capacity: int = CAPACITY) -> Cache:
    rows = dedupe_rows([r.conform(extraction.schema) for r in extraction.rows])
    if len(rows) > capacity:
        log.info("initial extraction truncated from %d to %d entries", len(rows), capacity)
        rows = rows[:capacity]
    return Cache(extraction.schema, tuple(CacheEntry(r, Provenance("init")) for r in rows), capacity)


def enforce(cache: Cache, rows: list[RecordRow], new_tag: Provenance) -> Cache:
    """Turn a model-returned entry list into a valid cache.

    Rows whose key matches an existing entry keep that entry (and so its
    provenance); others get ``new_tag``. Then dedupe and evict down to capacity.
    """
    old = {e.key: e for e in cache.entries}
    entries = []
    for row in dedupe_rows([r.conform(cache.schema) for r in rows]):
        entries.append(old.get(normalize_row(row)) or CacheEntry(row, new_tag))
    return Cache(cache.schema, tuple(_evict(entries, cache.capacity)), cache.capacity)


def mechanical_merge(cache: Cache, new_rows: list[RecordRow], step: int) -> Cache:
    return enforce(cache, cache.rows + list(new_rows), Provenance("seek", step))


def update_cache(query: str, schema: ExtractionSchema, cache: Cache, new_records: RecordSet, step: int, model, *,
                 repair_retries: int = 2, prompts: PromptSet = DEFAULT_PROMPTS,
                 outputs: list[str] | None = None, notes: list[str] | None = None) -> Cache:
    notes = notes if notes is not None else []
    target = new_records.schema if len(new_records.schema.slots) > len(cache.schema.slots) else cache.schema
    cache = _conform(cache, target)
    new_rows = [r.conform(target) for r in new_records.rows]
    messages = [
        ("system", prompts.system),
        ("user", prompts.render("update", query=query, schema=render_schema(target), capacity=cache.capacity,
                                cache=_cache_json(target, cache.rows), new=_cache_json(target, new_rows),
                                grammar=RECORDS_GRAMMAR)),
    ]
    try:
        rows = chat_with_repair(model, messages, lambda t: parse_records(t, target, notes),
                                grammar=RECORDS_GRAMMAR, retries=repair_retries, prompts=prompts,
                                outputs=outputs, notes=notes)
    except RecordParseError:
        notes.append("update output unusable; fell back to mechanical merge")
        log.warning("update step %d: mechanical merge fallback", step)
        return mechanical_merge(cache, new_rows, step)
    return enforce(cache, rows, Provenance("seek", step))


def self_check(query: str, schema: ExtractionSchema, cache: Cache, reasoning: str, step: int, model, *,
               repair_retries: int = 2, prompts: PromptSet = DEFAULT_PROMPTS,
               outputs: list[str] | None = None, notes: list[str] | None = None) -> Cache:
    notes = notes if notes is not None else []
    messages = [
        ("system", prompts.system),
        ("user", prompts.render("check", query=query, schema=render_schema(cache.schema),
                                cache=_cache_json(cache.schema, cache.rows), reasoning=reasoning,
                                grammar=RECORDS_GRAMMAR)),
    ]
    try:
        rows = chat_with_repair(model, messages, lambda t: parse_records(t, cache.schema, notes),
                                grammar=RECORDS_GRAMMAR, retries=repair_retries, prompts=prompts,
                                outputs=outputs, notes=notes)
    except RecordParseError:
        notes.append("self-check output unusable; cache left unchanged")
        log.warning("self-check step %d: output unusable", step)
        return cache
    return enforce(cache, rows, Provenance("check", step))
