"""Prompt templates.

Templates use ``string.Template`` placeholders so JSON examples inside them
need no brace escaping. A run config may override any field by name.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from string import Template

SCHEMA_GRAMMAR = (
    'Reply with a JSON array of slot objects, each {"name": <snake_case identifier>, '
    '"description": <what the slot holds>, "kind": "text"|"number"|"datetime"|"boolean"}.'
)
RECORDS_GRAMMAR = (
    "Reply with a JSON array of row objects whose keys are slot names from the schema. "
    "Use null for unknown values. Reply [] if nothing relevant is present."
)
ACTION_GRAMMAR = (
    "End your reply with exactly one directive: <seek>what to look up</seek> to extract more "
    "information from the source text, or <final>answer</final> when you can answer."
)
REACT_GRAMMAR = (
    "End your reply with exactly one directive: <read>N</read> to read window N of the "
    "source text (0-based), or <final>answer</final> when you can answer."
)


@dataclass(frozen=True)
class PromptSet:
    system: str = "You are a careful assistant that reasons over structured information."

    schema: str = (
        "Design an extraction schema for the question below: the slots (table columns) "
        "whose values must be pulled out of a long document to answer it. Use at most "
        "$max_slots slots.\n\nQuestion: $query\n\n$grammar"
    )
    extract: str = (
        "Extract every entry relevant to the question from the text, filling the schema.\n\n"
        "Question: $query\n\nSchema:\n$schema\n$focus_line\nText:\n$chunk\n\n$grammar"
    )
    extract_focus_slots: str = (
        "If the focus needs information the schema cannot hold, first write a line "
        "NEW_SLOTS: followed by a JSON array of at most 2 new slot objects "
        '({"name", "description", "kind"}); otherwise omit that line.'
    )
    monolithic: str = (
        "Read the text and extract the information needed to answer the question as a table. "
        "First give the table columns as a JSON array of slot objects "
        '{"name", "description", "kind"}; then give the rows as a JSON array of objects '
        "keyed by those slot names.\n\nQuestion: $query\n\nText:\n$text"
    )
    update: str = (
        "You maintain a compact cache of structured entries for answering a question.\n"
        "Fold the new entries into the cache. Combine entries that describe the same "
        "thing and drop entries that are duplicates or do not bear on the question. "
        "Trim details that will not help answer it. Keep at most $capacity entries. "
        "Return the complete updated cache.\n\nQuestion: $query\n\nSchema:\n$schema\n\n"
        "Current cache (JSON):\n$cache\n\nNew entries (JSON):\n$new\n\n$grammar"
    )
    check: str = (
        "Check the cache against the reasoning below. Correct wrong entries, drop entries "
        "the reasoning shows to be irrelevant, and keep the rest unchanged. Return the "
        "complete revised cache.\n\nQuestion: $query\n\nSchema:\n$schema\n\n"
        "Current cache (JSON):\n$cache\n\nReasoning:\n$reasoning\n\n$grammar"
    )
    reason: str = (
        "Answer the question using the cache of extracted information. The full source "
        "text is not shown; ask for more information when the cache is insufficient.\n\n"
        "Question: $query\n\nCache:\n$cache\n\n$grammar"
    )
    fallback: str = (
        "Answer the question directly from the cache of extracted information. "
        "Reply with the answer only.\n\nQuestion: $query\n\nCache:\n$cache"
    )
    repair: str = "Your previous reply could not be used ($error).\n$grammar\nReply again."
    generic: str = "Answer the question based on the text. Reply with the answer only.\n\nText:\n$text\n\nQuestion: $query"
    cot: str = (
        "Answer the question based on the text.\n\nText:\n$text\n\nQuestion: $query\n\n"
        "Let's think step by step. Finish with a line of the form 'Answer: <answer>'."
    )
    react: str = (
        "Answer the question by reading the source text window by window. The text has "
        "$n_windows windows, numbered 0 to $max_window.\n\nQuestion: $query\n\n"
        "Scratchpad so far:\n$scratchpad\n\n$grammar"
    )
    react_fallback: str = (
        "Answer the question directly from the notes gathered so far. Reply with the "
        "answer only.\n\nQuestion: $query\n\nNotes:\n$scratchpad"
    )

    def render(self, name: str, **values) -> str:
        return Template(getattr(self, name)).substitute(values)

    def with_overrides(self, overrides: dict[str, str]) -> "PromptSet":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown prompt names: {sorted(unknown)}")
        return replace(self, **overrides)


DEFAULT_PROMPTS = PromptSet()
