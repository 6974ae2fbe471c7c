"""Regenerate the scripted-model fixtures and the golden trace under tests/fixtures/.

A rule-based responder stands in for the LLM: each task carries a small
script (schema, rows per focus, reasoning rules). Runs are recorded through
the gateway and saved as map-mode fixtures, so the same fixture serves the
normal run and the no-update ablation.

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from iecache.agent import AgentConfig, run
from iecache.datasets import TaskInstance, write_dataset
from iecache.gateway import ChatResponse, Gateway

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

SCHEMA = [
    {"name": "event", "description": "calendar event", "kind": "text"},
    {"name": "person", "description": "who attends", "kind": "text"},
    {"name": "day", "description": "weekday", "kind": "text"},
    {"name": "time", "description": "start time", "kind": "text"},
]

SCRIPTS = {
    "When is Alice's budget review?": {
        "rows": {
            None: [{"event": "team sync", "person": "Alice", "day": "Monday", "time": "10am"}],
            "budget review": [{"event": "budget review", "person": "Alice", "day": "Thursday", "time": None}],
            "budget review time": [{"event": "budget review", "person": "Alice", "day": "Thursday", "time": "3pm"}],
        },
        # first matching (substring of the cache table, reply) wins
        "reason": [
            ("3pm", "The review starts at 3pm on Thursday. <final>Thursday 3pm</final>"),
            ("budget review", "The review is on Thursday but no time is listed. <seek>budget review time</seek>"),
            ("", "Only the team sync is cached. <seek>budget review</seek>"),
        ],
        "fallback": {"3pm": "Thursday 3pm", "budget review": "Thursday", "": "unknown"},
    },
    "Who presents on Tuesday?": {
        "rows": {
            None: [{"event": "team sync", "person": "Alice", "day": "Monday", "time": "10am"}],
            "tuesday presentation": [{"event": "presentation", "person": "Carol", "day": "Tuesday", "time": "2pm"}],
        },
        "reason": [
            ("Carol", "Carol presents on Tuesday. <final>Carol</final>"),
            ("", "No Tuesday entries yet. <seek>tuesday presentation</seek>"),
        ],
        "fallback": {"Carol": "Carol", "": "unknown"},
    },
    "What did the team decide about the launch?": {
        "rows": {
            None: [{"event": "launch meeting", "person": "Dana", "day": "Friday", "time": None}],
            "more": [{"event": "launch decision", "person": "Dana", "day": "Friday", "time": "9am"}],
        },
        "reason": [("", "Still not sure. <seek>more</seek>")],
        "fallback": {"": "The launch moves to Friday"},
    },
}

TEXT = (
    "Team calendar, week 12.\n"
    "Monday: Alice runs the team sync at 10am.\n"
    "Tuesday: Carol presents the quarterly numbers at 2pm.\n"
    "Wednesday: nothing scheduled apart from lunch.\n"
    "Thursday: Alice holds the budget review at 3pm in room 4.\n"
    "Friday: Dana confirms at 9am that the launch moves to Friday."
)


def _section(prompt: str, title: str) -> str:
    m = re.search(re.escape(title) + r"\n(.*?)(\n\n|$)", prompt, re.DOTALL)
    return m.group(1) if m else ""


def _pick(rules, haystack):
    for needle, reply in rules:
        if needle in haystack:
            return reply
    raise KeyError(haystack)


class Responder:
    """Backend answering from SCRIPTS according to the prompt kind."""

    name = "scripted"

    def send(self, request) -> ChatResponse:
        prompt = request.messages[-1].content
        query = re.search(r"Question: (.*)", prompt).group(1).strip()
        script = SCRIPTS[query]
        if prompt.startswith("Design an extraction schema"):
            out = json.dumps(SCHEMA)
        elif prompt.startswith("Extract every entry"):
            m = re.search(r"FOCUS: (.*)", prompt)
            out = json.dumps(script["rows"][m.group(1).strip() if m else None])
        elif prompt.startswith("You maintain a compact cache"):
            cache = json.loads(_section(prompt, "Current cache (JSON):"))
            new = json.loads(_section(prompt, "New entries (JSON):"))
            merged = []
            for row in cache:
                # a timed row supersedes the same event without a time
                if row["time"] is None and any(
                        n["event"] == row["event"] and n["time"] is not None for n in new):
                    continue
                merged.append(row)
            merged += [n for n in new if n not in merged]
            out = json.dumps(merged)
        elif prompt.startswith("Answer the question using the cache"):
            out = _pick(script["reason"], _section(prompt, "Cache:"))
        elif prompt.startswith("Answer the question directly from the cache"):
            out = _pick(list(script["fallback"].items()), _section(prompt, "Cache:"))
        else:
            raise ValueError(prompt[:60])
        return ChatResponse(out, len(prompt.split()), len(out.split()), self.name)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    tasks = [
        TaskInstance("budget-review", "When is Alice's budget review?", TEXT, ("Thursday 3pm", "Thursday, 3pm")),
        TaskInstance("tuesday-presenter", "Who presents on Tuesday?", TEXT, ("Carol",)),
    ]
    seek_task = TaskInstance("launch", "What did the team decide about the launch?", TEXT,
                             ("The launch moves to Friday",), "summarization")
    write_dataset(tasks, OUT / "loop_tasks.jsonl")
    write_dataset([seek_task], OUT / "seek_forever_task.jsonl")

    gw = Gateway(Responder(), record=True)
    for task in tasks:
        for update in (True, False):
            run(task, AgentConfig(max_steps=4, update_enabled=update), gw)
    gw.save_fixture(OUT / "loop.fixture.jsonl")

    _, golden = run(tasks[0], AgentConfig(max_steps=4), Gateway(Responder()))
    golden.write(OUT / "loop.golden.jsonl")

    gw = Gateway(Responder(), record=True)
    for update in (True, False):
        run(seek_task, AgentConfig(max_steps=3, update_enabled=update), gw)
    gw.save_fixture(OUT / "seek_forever.fixture.jsonl")

    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
