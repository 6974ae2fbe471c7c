import json
import threading

import httpx
import pytest

from iecache.errors import AuthMissing, FixtureExhausted, FixtureParseError, TransportError
from iecache.gateway import (ChatRequest, Gateway, HttpBackend, Message, ModelProfile, ScriptedBackend,
                             fingerprint, load_fixture, parse_fixture)


def req(text="hi"):
    return ChatRequest.of([("user", text)])


def test_profile_defaults():
    p = ModelProfile()
    assert p.temperature == 0
    assert p.max_output_tokens == 1024
    with pytest.raises(ValueError):
        ModelProfile(max_output_tokens=0)


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest(())
    with pytest.raises(ValueError):
        ChatRequest.of([("assistant", "x")])
    with pytest.raises(ValueError):
        Message("tool", "x")


def test_queue_serves_then_exhausts():
    gw = Gateway(ScriptedBackend(["hello"]))
    assert gw.complete(req()).content == "hello"
    with pytest.raises(FixtureExhausted):
        gw.complete(req())


def test_empty_queue_raises():
    with pytest.raises(FixtureExhausted):
        Gateway(ScriptedBackend([])).complete(req())


def test_trailing_whitespace_only_trimmed():
    gw = Gateway(ScriptedBackend(["  answer \n\n"]))
    assert gw.complete(req()).content == "  answer"


def test_recording_sequence_indices():
    gw = Gateway(ScriptedBackend(["a", "b", "c"]), record=True)
    for i in range(3):
        gw.complete(req(str(i)))
    assert [r.sequence_index for r in gw.transcript] == [0, 1, 2]
    assert gw.transcript[1].request_fingerprint == fingerprint(req("1").messages)


def test_fingerprint_canonical_form():
    import hashlib
    msgs = (Message("system", "s"), Message("user", "u"))
    assert fingerprint(msgs) == hashlib.sha256(b"system\ns\nuser\nu\n").hexdigest()


def test_fixture_queue_mode(tmp_path):
    p = tmp_path / "f.jsonl"
    p.write_text('{"mode": "queue"}\n{"content": "one", "prompt_tokens": 3}\n{"content": "two"}\n')
    gw = Gateway(load_fixture(p))
    r1 = gw.complete(req())
    assert (r1.content, r1.prompt_tokens, r1.output_tokens, r1.backend) == ("one", 3, 0, "scripted")
    assert gw.complete(req()).content == "two"
    with pytest.raises(FixtureExhausted):
        gw.complete(req())


def test_fixture_duplicate_fingerprint_rejected():
    lines = ['{"mode": "map"}', '{"fingerprint": "ab", "content": "x"}', '{"fingerprint": "ab", "content": "y"}']
    with pytest.raises(FixtureParseError) as info:
        parse_fixture(lines)
    assert info.value.line == 3


@pytest.mark.parametrize("lines", [
    ['{"mode": "stack"}'],
    ["not json"],
    ['{"mode": "queue"}', '{"text": "x"}'],
    ['{"mode": "queue"}', '{"content": "x", "prompt_tokens": -1}'],
    [],
])
def test_fixture_parse_errors(lines):
    with pytest.raises(FixtureParseError):
        parse_fixture(lines)


def test_map_mode_with_queue_fallback():
    fp = fingerprint(req("known").messages)
    backend = parse_fixture(['{"mode": "map"}', json.dumps({"fingerprint": fp, "content": "mapped"}),
                             '{"content": "queued"}'])
    gw = Gateway(backend)
    assert gw.complete(req("known")).content == "mapped"
    assert gw.complete(req("known")).content == "mapped"
    assert gw.complete(req("other")).content == "queued"
    with pytest.raises(FixtureExhausted):
        gw.complete(req("other"))


def test_record_then_replay_round_trip(tmp_path):
    # oracle: a scripted "live" run recorded to a fixture, then replayed
    live = Gateway(ScriptedBackend(["r1", "r2", "r1-again", "r3"]), record=True)
    prompts = ["p1", "p2", "p1", "p3"]
    original = [live.complete(req(p)) for p in prompts]
    path = tmp_path / "rec.jsonl"
    live.save_fixture(path)
    replayed = Gateway(load_fixture(path))
    again = [replayed.complete(req(p)) for p in prompts]
    assert [r.content for r in again] == [r.content for r in original]


def test_replay_determinism(tmp_path, fixtures_dir):
    a = Gateway(load_fixture(fixtures_dir / "loop.fixture.jsonl"))
    b = Gateway(load_fixture(fixtures_dir / "loop.fixture.jsonl"))
    lines = (fixtures_dir / "loop.fixture.jsonl").read_text().splitlines()[1:]
    # every recorded fingerprint maps to its content in both replays
    for ln in lines:
        obj = json.loads(ln)
        assert a.backend._map[obj["fingerprint"]].content == b.backend._map[obj["fingerprint"]].content


def test_queue_concurrency_each_entry_once():
    n = 200
    gw = Gateway(ScriptedBackend([str(i) for i in range(n)]), record=True)
    out = []
    lock = threading.Lock()

    def worker():
        while True:
            try:
                r = gw.complete(req())
            except FixtureExhausted:
                return
            with lock:
                out.append(r.content)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(out, key=int) == [str(i) for i in range(n)]
    assert [r.sequence_index for r in gw.transcript] == list(range(n))


# live backend ----------------------------------------------------------------

def _client(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


def _ok(content="pong"):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}],
                                     "usage": {"prompt_tokens": 5, "completion_tokens": 1}})


def test_http_backend_request_shape(monkeypatch):
    monkeypatch.setenv("IECACHE_API_KEY", "sekrit")
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return _ok()

    be = HttpBackend("http://llm.test/v1/", client=_client(handler), sleep=lambda s: None)
    gw = Gateway(be, ModelProfile("m1", max_output_tokens=64))
    r = gw.complete(ChatRequest.of([("system", "s"), ("user", "ping")], gw.profile))
    assert r.content == "pong" and r.prompt_tokens == 5 and r.output_tokens == 1 and r.backend == "http"
    assert seen["url"] == "http://llm.test/v1/chat/completions"
    assert seen["auth"] == "Bearer sekrit"
    assert seen["body"] == {"model": "m1", "messages": [{"role": "system", "content": "s"},
                                                        {"role": "user", "content": "ping"}],
                            "temperature": 0.0, "max_tokens": 64}


@pytest.mark.parametrize("retry_limit", [0, 1, 2, 4])
def test_http_retry_bound(monkeypatch, retry_limit):
    monkeypatch.setenv("IECACHE_API_KEY", "k")
    calls = []

    def handler(request):
        calls.append(1)
        raise httpx.ConnectError("down")

    be = HttpBackend("http://x", retry_limit=retry_limit, client=_client(handler), sleep=lambda s: None)
    with pytest.raises(TransportError):
        be.send(req())
    assert len(calls) == retry_limit + 1


def test_http_retry_recovers_from_5xx(monkeypatch):
    monkeypatch.setenv("IECACHE_API_KEY", "k")
    codes = iter([503, 429, 200])

    def handler(request):
        c = next(codes)
        return _ok("fine") if c == 200 else httpx.Response(c)

    be = HttpBackend("http://x", retry_limit=2, client=_client(handler), sleep=lambda s: None)
    assert be.send(req()).content == "fine"


def test_http_client_error_not_retried(monkeypatch):
    monkeypatch.setenv("IECACHE_API_KEY", "k")
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(400, text="bad request")

    be = HttpBackend("http://x", client=_client(handler), sleep=lambda s: None)
    with pytest.raises(TransportError):
        be.send(req())
    assert len(calls) == 1


def test_http_auth_missing(monkeypatch):
    monkeypatch.delenv("IECACHE_API_KEY", raising=False)
    be = HttpBackend("http://x", client=_client(lambda r: _ok()))
    with pytest.raises(AuthMissing):
        be.send(req())


def test_http_endpoint_missing(monkeypatch):
    monkeypatch.delenv("IECACHE_API_BASE", raising=False)
    with pytest.raises(AuthMissing):
        HttpBackend(None)


def test_request_not_mutated(monkeypatch):
    monkeypatch.setenv("IECACHE_API_KEY", "k")
    sent = {}

    def handler(request):
        sent["messages"] = json.loads(request.content)["messages"]
        return _ok()

    gw = Gateway(HttpBackend("http://x", client=_client(handler)), record=True)
    r = ChatRequest.of([("user", "exact  text\n")])
    gw.complete(r)
    hashed = fingerprint(tuple(Message(m["role"], m["content"]) for m in sent["messages"]))
    assert hashed == gw.transcript[0].request_fingerprint


def test_consistent_recording_saved_as_map(tmp_path):
    live = Gateway(ScriptedBackend(["a", "b", "a"]), record=True)
    for p in ["x", "y", "x"]:
        live.complete(req(p))
    path = tmp_path / "f.jsonl"
    assert live.save_fixture(path) == 2
    assert json.loads(path.read_text().splitlines()[0]) == {"mode": "map"}
    replay = Gateway(load_fixture(path))
    assert [replay.complete(req(p)).content for p in ["y", "x", "x", "y"]] == ["b", "a", "a", "b"]
