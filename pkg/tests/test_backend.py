from __future__ import annotations

import json

import httpx
import pytest

from thinkpress.backend import (
    BackendConfig,
    ChatRequest,
    HttpBackend,
    Message,
    MockBackend,
    MockScript,
    chat,
    message_digest,
    mock_chat,
)
from thinkpress.errors import (
    AuthMissing,
    BackendError,
    BackendTimeout,
    HttpStatus,
    InvalidInput,
    MalformedResponse,
    ScriptExhausted,
    UnscriptedRequest,
)

OK_BODY = {
    "choices": [{"message": {"role": "assistant", "content": "Paris"}}],
    "usage": {"prompt_tokens": 12, "completion_tokens": 1},
}


def client_for(handler) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


@pytest.fixture
def cfg(monkeypatch):
    monkeypatch.setenv("TP_TEST_KEY", "sk-test")
    return BackendConfig("http://llm.local/v1", model="m", api_key_env="TP_TEST_KEY", max_retries=2, retry_backoff_s=0.5)


REQ = ChatRequest.user("m", "hello", max_output_tokens=16)


def test_request_validation():
    with pytest.raises(InvalidInput):
        ChatRequest("m", ())
    with pytest.raises(InvalidInput):
        ChatRequest("m", (Message("assistant", "x"),))
    with pytest.raises(InvalidInput):
        ChatRequest("m", (Message("user", "x"),), temperature=-1)
    with pytest.raises(InvalidInput):
        BackendConfig("http://x", timeout_s=0)


def test_chat_success_wire_format(cfg):
    seen = {}

    def handler(request: httpx.Request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json=OK_BODY)

    resp = chat(cfg, REQ, client=client_for(handler))
    assert resp.text == "Paris"
    assert (resp.prompt_tokens, resp.completion_tokens) == (12, 1)
    assert resp.latency_ms > 0
    assert seen["url"] == "http://llm.local/v1/chat/completions"
    assert seen["auth"] == "Bearer sk-test"
    assert seen["body"] == {
        "model": "m",
        "messages": [{"role": "user", "content": "hello"}],
        "temperature": 0.0,
        "max_tokens": 16,
    }


def test_retries_then_succeeds(cfg):
    calls = []
    sleeps = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            return httpx.Response(429, text="slow down")
        if len(calls) == 2:
            return httpx.Response(503, text="busy")
        return httpx.Response(200, json=OK_BODY)

    resp = chat(cfg, REQ, client=client_for(handler), sleep=sleeps.append)
    assert resp.text == "Paris"
    assert len(calls) == 3
    assert sleeps == [0.5, 1.0]


def test_retries_exhausted_raises_status(cfg):
    def handler(request):
        return httpx.Response(500, text="boom" * 500)

    with pytest.raises(HttpStatus) as info:
        chat(cfg, REQ, client=client_for(handler), sleep=lambda s: None)
    assert info.value.code == 500
    assert len(info.value.body) <= 500


def test_client_error_not_retried(cfg):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(400, text="bad request")

    with pytest.raises(HttpStatus):
        chat(cfg, REQ, client=client_for(handler), sleep=lambda s: None)
    assert len(calls) == 1


def test_timeout_and_transport_errors(cfg):
    def timeout(request):
        raise httpx.ReadTimeout("too slow", request=request)

    def refused(request):
        raise httpx.ConnectError("refused", request=request)

    with pytest.raises(BackendTimeout):
        chat(cfg, REQ, client=client_for(timeout), sleep=lambda s: None)
    with pytest.raises(BackendError):
        chat(cfg, REQ, client=client_for(refused), sleep=lambda s: None)


@pytest.mark.parametrize(
    "body",
    [{"id": "x"}, {"choices": []}, {"choices": [{"message": {}}]}, {"choices": [{"message": {"content": None}}]}],
)
def test_malformed_response(cfg, body):
    with pytest.raises(MalformedResponse):
        chat(cfg, REQ, client=client_for(lambda r: httpx.Response(200, json=body)))


def test_missing_usage_is_absent(cfg):
    body = {"choices": [{"message": {"content": "x"}}]}
    resp = chat(cfg, REQ, client=client_for(lambda r: httpx.Response(200, json=body)))
    assert resp.prompt_tokens is None and resp.completion_tokens is None


def test_auth_missing_before_network(monkeypatch):
    monkeypatch.delenv("TP_ABSENT_KEY", raising=False)
    cfg = BackendConfig("http://llm.local/v1", api_key_env="TP_ABSENT_KEY")

    def handler(request):  # pragma: no cover - must never run
        raise AssertionError("network touched")

    with pytest.raises(AuthMissing):
        chat(cfg, REQ, client=client_for(handler))


def test_no_auth_header_when_key_env_is_null():
    cfg = BackendConfig("http://llm.local/v1", api_key_env=None)
    seen = {}

    def handler(request):
        seen["has_auth"] = "authorization" in request.headers
        return httpx.Response(200, json=OK_BODY)

    chat(cfg, REQ, client=client_for(handler))
    assert seen["has_auth"] is False


def test_http_backend_ping_and_complete(cfg):
    def handler(request):
        if request.url.path.endswith("/models"):
            return httpx.Response(200, json={"data": []})
        return httpx.Response(200, json=OK_BODY)

    b = HttpBackend(cfg, transport=httpx.MockTransport(handler))
    assert b.ping()
    assert b.complete(REQ).text == "Paris"
    dead = HttpBackend(cfg, transport=httpx.MockTransport(lambda r: httpx.Response(502)))
    assert not dead.ping()


def test_chat_does_not_mutate_request(cfg):
    before = REQ.body()
    chat(cfg, REQ, client=client_for(lambda r: httpx.Response(200, json=OK_BODY)))
    assert REQ.body() == before


def test_digest_is_stable_and_role_sensitive():
    a = (Message("system", "s"), Message("user", "u"))
    assert message_digest(a) == message_digest(tuple(a))
    assert message_digest(a) != message_digest((Message("user", "s"), Message("user", "u")))
    # separator prevents boundary collisions
    assert message_digest((Message("user", "ab"),)) != message_digest((Message("user", "a"), Message("user", "b")))


def test_mock_keyed_mode():
    key = message_digest(REQ.messages)
    script = MockScript([{"key": key, "text": "scripted"}])
    assert mock_chat(script, REQ).text == "scripted"
    assert mock_chat(script, REQ).latency_ms == 0
    with pytest.raises(UnscriptedRequest):
        mock_chat(script, ChatRequest.user("m", "other"))


def test_mock_sequence_mode():
    script = MockScript([{"key": None, "text": "first"}, {"key": None, "text": "second"}])
    assert mock_chat(script, REQ).text == "first"
    assert mock_chat(script, REQ).text == "second"
    with pytest.raises(ScriptExhausted):
        mock_chat(script, REQ)


def test_mock_script_file(tmp_path):
    p = tmp_path / "s.jsonl"
    p.write_text('{"key": null, "text": "a"}\n\n{"key": null, "text": "b"}\n', encoding="utf-8")
    assert [e["text"] for e in MockScript.load(p).entries] == ["a", "b"]
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"key": null}\n', encoding="utf-8")
    with pytest.raises(InvalidInput):
        MockScript.load(bad)
    with pytest.raises(InvalidInput):
        MockScript([{"key": None, "text": "a"}, {"key": "k", "text": "b"}])


def test_mock_backend_records_requests():
    b = MockBackend(responder=lambda r: "ok")
    b.complete(REQ)
    assert b.requests == [REQ]
    with pytest.raises(InvalidInput):
        MockBackend()
