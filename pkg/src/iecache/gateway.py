"""Chat-completion access through a live HTTP backend or a scripted one.

Every model call in the package goes through :class:`Gateway`. The scripted
backend replays a JSONL fixture (ordered queue, or fingerprint map with a
queue fallback) so agent runs are reproducible offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import httpx

from .errors import AuthMissing, FixtureExhausted, FixtureParseError, TransportError

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
DEFAULT_API_BASE_ENV = "IECACHE_API_BASE"
DEFAULT_API_KEY_ENV = "IECACHE_API_KEY"


@dataclass(frozen=True)
class ModelProfile:
    name: str = "scripted"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    endpoint: str | None = None
    auth_source: str = DEFAULT_API_KEY_ENV

    def __post_init__(self):
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[Message, ...]
    profile: ModelProfile = field(default_factory=ModelProfile)

    def __post_init__(self):
        if not self.messages:
            raise ValueError("request needs at least one message")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message must be system or user")

    @classmethod
    def of(cls, pairs: Iterable[tuple[str, str]], profile: ModelProfile | None = None) -> "ChatRequest":
        msgs = tuple(Message(r, c) for r, c in pairs)
        return cls(msgs, profile or ModelProfile())


@dataclass(frozen=True)
class ChatResponse:
    content: str
    prompt_tokens: int = 0
    output_tokens: int = 0
    backend: str = "scripted"


@dataclass(frozen=True)
class TranscriptRecord:
    request_fingerprint: str
    request: ChatRequest
    response: ChatResponse
    sequence_index: int


def fingerprint(messages: Sequence[Message]) -> str:
    """sha256 over ``role\\ncontent\\n`` for each message, concatenated."""
    h = hashlib.sha256()
    for m in messages:
        h.update(f"{m.role}\n{m.content}\n".encode("utf-8"))
    return h.hexdigest()


# --------------------------------------------------------------------------
# scripted backend


@dataclass
class FixtureEntry:
    content: str
    fingerprint: str | None = None
    prompt_tokens: int = 0
    output_tokens: int = 0


class ScriptedBackend:
    name = "scripted"

    def __init__(self, queue: Iterable[str | FixtureEntry] = (), mode: str = "queue",
                 mapping: dict[str, FixtureEntry] | None = None):
        if mode not in ("queue", "map"):
            raise ValueError(f"unknown fixture mode {mode!r}")
        self.mode = mode
        self._queue: deque[FixtureEntry] = deque(
            e if isinstance(e, FixtureEntry) else FixtureEntry(e) for e in queue
        )
        self._map = dict(mapping or {})
        self._lock = threading.Lock()

    @property
    def remaining(self) -> int:
        return len(self._queue)

    def send(self, request: ChatRequest) -> ChatResponse:
        entry = None
        if self.mode == "map":
            entry = self._map.get(fingerprint(request.messages))
        if entry is None:
            with self._lock:
                if not self._queue:
                    raise FixtureExhausted("scripted backend has no responses left")
                entry = self._queue.popleft()
        return ChatResponse(entry.content, entry.prompt_tokens, entry.output_tokens, self.name)


def parse_fixture(lines: Iterable[str]) -> ScriptedBackend:
    header = None
    queue: list[FixtureEntry] = []
    mapping: dict[str, FixtureEntry] = {}
    for lineno, raw in enumerate(lines, 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FixtureParseError(exc.msg, lineno, exc.colno) from exc
        if not isinstance(obj, dict):
            raise FixtureParseError("expected a JSON object", lineno)
        if header is None:
            if obj.get("mode") not in ("queue", "map"):
                raise FixtureParseError('header must be {"mode": "queue"|"map"}', lineno)
            header = obj
            continue
        content = obj.get("content")
        if not isinstance(content, str):
            raise FixtureParseError("entry needs a string 'content'", lineno)
        counts = {}
        for key in ("prompt_tokens", "output_tokens"):
            val = obj.get(key, 0)
            if not isinstance(val, int) or isinstance(val, bool) or val < 0:
                raise FixtureParseError(f"{key} must be a nonnegative integer", lineno)
            counts[key] = val
        fp = obj.get("fingerprint")
        entry = FixtureEntry(content, fp, **counts)
        if header["mode"] == "map" and fp is not None:
            if fp in mapping:
                raise FixtureParseError(f"duplicate fingerprint {fp[:12]}...", lineno)
            mapping[fp] = entry
        else:
            queue.append(entry)
    if header is None:
        raise FixtureParseError("missing header line", 1)
    return ScriptedBackend(queue, header["mode"], mapping)


def load_fixture(path: str | os.PathLike) -> ScriptedBackend:
    with open(path, encoding="utf-8") as f:
        return parse_fixture(f)


# --------------------------------------------------------------------------
# live backend


class HttpBackend:
    """OpenAI-compatible ``/chat/completions`` client.

    Only transport-level failures are retried (connection errors, timeouts,
    429 and 5xx); at most ``retry_limit + 1`` attempts per call.
    """

    name = "http"

    def __init__(self, api_base: str | None = None, api_key: str | None = None,
                 retry_limit: int = 2, timeout: float = 120.0, backoff: float = 1.0,
                 client: httpx.Client | None = None, sleep: Callable[[float], None] = time.sleep):
        self.api_base = (api_base or os.environ.get(DEFAULT_API_BASE_ENV) or "").rstrip("/")
        if not self.api_base:
            raise AuthMissing(f"no endpoint configured (set {DEFAULT_API_BASE_ENV})")
        self.api_key = api_key
        self.retry_limit = retry_limit
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def _key_for(self, profile: ModelProfile) -> str:
        key = self.api_key or os.environ.get(profile.auth_source)
        if not key:
            raise AuthMissing(f"environment variable {profile.auth_source} is not set")
        return key

    def send(self, request: ChatRequest) -> ChatResponse:
        profile = request.profile
        url = (profile.endpoint or self.api_base).rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {self._key_for(profile)}"}
        payload = {
            "model": profile.name,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": profile.temperature,
            "max_tokens": profile.max_output_tokens,
        }
        last: Exception | None = None
        for attempt in range(self.retry_limit + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(url, json=payload, headers=headers)
            except httpx.TransportError as exc:
                last = exc
                log.warning("attempt %d/%d failed: %s", attempt + 1, self.retry_limit + 1, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}")
                log.warning("attempt %d/%d got HTTP %d", attempt + 1, self.retry_limit + 1, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                body = resp.json()
                content = body["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"malformed completion payload: {exc}") from exc
            usage = body.get("usage") or {}
            return ChatResponse(
                content,
                int(usage.get("prompt_tokens", 0) or 0),
                int(usage.get("completion_tokens", 0) or 0),
                self.name,
            )
        raise TransportError(f"gave up after {self.retry_limit + 1} attempts: {last}")


# --------------------------------------------------------------------------


class Gateway:
    """Model handle passed to every operation that calls the LLM.

    ``chat`` is the convenience entry point: it wraps role/content pairs into
    a :class:`ChatRequest` carrying this gateway's profile.
    """

    def __init__(self, backend, profile: ModelProfile | None = None, record: bool = False):
        self.backend = backend
        self.profile = profile or ModelProfile()
        self.recording = record
        self.transcript: list[TranscriptRecord] = []
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def scripted(cls, responses: Iterable[str] = (), **kw) -> "Gateway":
        return cls(ScriptedBackend(responses), **kw)

    def complete(self, request: ChatRequest) -> ChatResponse:
        resp = self.backend.send(request)
        resp = ChatResponse(resp.content.rstrip(), resp.prompt_tokens, resp.output_tokens, resp.backend)
        with self._lock:
            self.calls += 1
            if self.recording:
                self.transcript.append(
                    TranscriptRecord(fingerprint(request.messages), request, resp, len(self.transcript))
                )
        return resp

    def chat(self, messages: Iterable[tuple[str, str]]) -> str:
        return self.complete(ChatRequest.of(messages, self.profile)).content

    def save_fixture(self, path: str | os.PathLike) -> int:
        """Write the transcript as a fixture; returns entries written.

        Map mode when every fingerprint always got the same response, so one
        fixture serves runs that issue requests in any order. If an identical
        request got different responses the map cannot reproduce that, and
        the transcript is written as an ordered queue instead.
        """
        seen: dict[str, str] = {}
        divergent = False
        for rec in self.transcript:
            first = seen.setdefault(rec.request_fingerprint, rec.response.content)
            divergent = divergent or first != rec.response.content
        mode = "queue" if divergent else "map"
        if divergent:
            log.warning("identical requests got different responses; saving fixture in queue mode")
        lines = [json.dumps({"mode": mode})]
        written: set[str] = set()
        for rec in self.transcript:
            fp = rec.request_fingerprint
            row = {"content": rec.response.content,
                   "prompt_tokens": rec.response.prompt_tokens,
                   "output_tokens": rec.response.output_tokens}
            if mode == "map":
                if fp in written:
                    continue
                written.add(fp)
                row = {"fingerprint": fp, **row}
            lines.append(json.dumps(row, ensure_ascii=False))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        return len(lines) - 1


class CallCounter:
    """Per-run view of a shared gateway that counts calls made through it."""

    def __init__(self, model):
        self.model = model
        self.calls = 0

    def chat(self, messages):
        self.calls += 1
        return self.model.chat(messages)
