"""Comparison methods over raw text: direct prompting, chain of thought, ReAct."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass

from .agent import GATEWAY_ERRORS, _final_inner, parse_action, strip_directives
from .errors import MalformedAction, RunAborted
from .extraction import chunk_text
from .gateway import CallCounter
from .prompts import DEFAULT_PROMPTS, REACT_GRAMMAR, PromptSet
from .repair import chat_with_repair
from .trace import Final, Read, RunTrace

BASELINES = ("generic", "cot", "react")


@dataclass(frozen=True)
class BaselineConfig:
    method: str = "generic"
    react_max_steps: int = 8
    react_window_tokens: int = 3000
    repair_retries: int = 2

    def __post_init__(self):
        if self.method not in BASELINES:
            raise ValueError(f"unknown baseline {self.method!r}")
        if self.react_max_steps < 1 or self.react_window_tokens < 1:
            raise ValueError("react limits must be positive")


def _run_single(task, model, method: str, config: BaselineConfig, prompt: str, extract_answer) -> tuple[str, RunTrace]:
    counter = CallCounter(model)
    trace = RunTrace(task.id, method, config=asdict(config))
    try:
        out = counter.chat([("user", prompt)])
    except GATEWAY_ERRORS as exc:
        trace.terminated_by, trace.error = "aborted", f"{type(exc).__name__}: {exc}"
        raise RunAborted(exc, trace) from exc
    answer = extract_answer(out)
    trace.add(0, "final", out, warnings=[] if answer == out else [f"extracted answer: {answer}"])
    trace.answer, trace.terminated_by, trace.model_calls = answer, "final", counter.calls
    return answer, trace


def run_generic(task, model, config: BaselineConfig | None = None, *,
                prompts: PromptSet = DEFAULT_PROMPTS) -> tuple[str, RunTrace]:
    config = config or BaselineConfig("generic")
    prompt = prompts.render("generic", text=task.text, query=task.query)
    return _run_single(task, model, "generic", config, prompt, lambda out: out)


_ANSWER_LINE = re.compile(r"^\s*Answer:(.*)$", re.MULTILINE)


def cot_answer(output: str) -> str:
    """Text after the last line starting with ``Answer:``, else the whole output."""
    found = _ANSWER_LINE.findall(output)
    return found[-1].strip() if found else output


def run_cot(task, model, config: BaselineConfig | None = None, *,
            prompts: PromptSet = DEFAULT_PROMPTS) -> tuple[str, RunTrace]:
    config = config or BaselineConfig("cot")
    prompt = prompts.render("cot", text=task.text, query=task.query)
    return _run_single(task, model, "cot", config, prompt, cot_answer)


def run_react(task, config: BaselineConfig, model, *, prompts: PromptSet = DEFAULT_PROMPTS) -> tuple[str, RunTrace]:
    """Reason/read loop; the scratchpad only ever grows."""
    counter = CallCounter(model)
    trace = RunTrace(task.id, "react", config=asdict(config))
    windows = chunk_text(task.text, config.react_window_tokens, 0)
    scratchpad: list[str] = []
    verbs = ("read", "final")

    def parse(text):
        return parse_action(text, verbs)

    try:
        for t in range(config.react_max_steps):
            outputs: list[str] = []
            notes: list[str] = []
            msgs = [("user", prompts.render("react", n_windows=len(windows), max_window=len(windows) - 1,
                                            query=task.query, scratchpad="\n".join(scratchpad) or "(empty)",
                                            grammar=REACT_GRAMMAR))]
            try:
                action = chat_with_repair(counter, msgs, parse, grammar=REACT_GRAMMAR,
                                          retries=config.repair_retries, prompts=prompts,
                                          outputs=outputs, notes=notes)
            except MalformedAction:
                action = None
                notes.append("irreparable action; recorded as an invalid step")
            thought = strip_directives(outputs[-1])
            if isinstance(action, Final):
                trace.add(t, "reason", outputs[-1], action, warnings=notes)
                trace.add(t, "final", "", action)
                trace.answer, trace.terminated_by = action.answer, "final"
                break
            if isinstance(action, Read):
                if 0 <= action.index < len(windows):
                    obs = windows[action.index].text
                else:
                    obs = f"OUT OF RANGE (max {len(windows) - 1})"
                step_note = f"Thought: {thought}\nAction: read {action.index}\nObservation: {obs}"
            else:
                obs = "INVALID ACTION"
                step_note = f"Thought: {thought}\nObservation: {obs}"
            scratchpad.append(step_note)
            trace.add(t, "reason", outputs[-1], action, warnings=notes, observation=obs)
        else:
            out = counter.chat([("user", prompts.render("react_fallback", query=task.query,
                                                         scratchpad="\n".join(scratchpad) or "(empty)"))])
            trace.answer = _final_inner(out)
            trace.add(config.react_max_steps, "fallback", out)
            trace.terminated_by = "step_limit"
    except GATEWAY_ERRORS as exc:
        trace.terminated_by, trace.error = "aborted", f"{type(exc).__name__}: {exc}"
        trace.model_calls = counter.calls
        raise RunAborted(exc, trace) from exc
    trace.model_calls = counter.calls
    return trace.answer, trace


def run_baseline(task, config: BaselineConfig, model, *, prompts: PromptSet = DEFAULT_PROMPTS):
    if config.method == "generic":
        return run_generic(task, model, config, prompts=prompts)
    if config.method == "cot":
        return run_cot(task, model, config, prompts=prompts)
    return run_react(task, config, model, prompts=prompts)
