from __future__ import annotations

import logging
from typing import Callable, TypeVar

from .errors import MalformedAction, RecordParseError, SchemaParseError
from .prompts import DEFAULT_PROMPTS, PromptSet

log = logging.getLogger(__name__)
T = TypeVar("T")

PARSE_ERRORS = (SchemaParseError, RecordParseError, MalformedAction)


def chat_with_repair(model, messages: list[tuple[str, str]], parse: Callable[[str], T], *,
                     grammar: str, retries: int, prompts: PromptSet = DEFAULT_PROMPTS,
                     outputs: list[str] | None = None, notes: list[str] | None = None) -> T:
    """Call the model and parse; on a parse error re-prompt up to ``retries`` times.

    Each repair call continues the conversation with the malformed reply and
    the output grammar. Raw replies are appended to ``outputs`` and one note
    per failed attempt to ``notes``. The last parse error is re-raised when
    the budget is spent.
    """
    convo = list(messages)
    for attempt in range(retries + 1):
        text = model.chat(convo)
        if outputs is not None:
            outputs.append(text)
        try:
            return parse(text)
        except PARSE_ERRORS as exc:
            msg = f"attempt {attempt + 1}: {type(exc).__name__}: {exc}"
            log.debug(msg)
            if notes is not None:
                notes.append(msg)
            if attempt == retries:
                raise
            convo = convo + [
                ("assistant", text),
                ("user", prompts.render("repair", error=str(exc) or type(exc).__name__, grammar=grammar)),
            ]
    raise AssertionError("unreachable")
