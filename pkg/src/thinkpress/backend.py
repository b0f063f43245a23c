"""OpenAI-compatible chat-completions client and a scripted mock."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import httpx

from .errors import (
    AuthMissing,
    BackendError,
    BackendTimeout,
    HttpStatus,
    InvalidInput,
    MalformedResponse,
    ScriptExhausted,
    UnscriptedRequest,
)

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    max_output_tokens: int = 2048

    def __post_init__(self):
        msgs = tuple(m if isinstance(m, Message) else Message(**m) for m in self.messages)
        object.__setattr__(self, "messages", msgs)
        if not msgs:
            raise InvalidInput("messages must be non-empty")
        if msgs[0].role not in ("system", "user"):
            raise InvalidInput("first message must be a system or user message")
        for m in msgs:
            if m.role not in ROLES:
                raise InvalidInput(f"unknown role {m.role!r}")
        if self.temperature < 0:
            raise InvalidInput("temperature must be >= 0")

    @classmethod
    def user(cls, model: str, content: str, **kw) -> "ChatRequest":
        return cls(model, (Message("user", content),), **kw)

    def body(self) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_output_tokens,
        }


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None
    latency_ms: float = 0.0


@dataclass(frozen=True)
class BackendConfig:
    base_url: str
    model: str = "default"
    api_key_env: Optional[str] = "OPENAI_API_KEY"
    timeout_s: float = 60.0
    max_retries: int = 3
    retry_backoff_s: float = 1.0

    def __post_init__(self):
        if not self.timeout_s > 0:
            raise InvalidInput("timeout_s must be > 0")
        if self.max_retries < 0:
            raise InvalidInput("max_retries must be >= 0")


def _parse_completion(payload) -> tuple[str, Optional[int], Optional[int]]:
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as e:
        raise MalformedResponse(f"no choices[0].message.content in response ({e!r})") from None
    if not isinstance(content, str):
        raise MalformedResponse("message content is not a string")
    usage = payload.get("usage") or {}
    return content, usage.get("prompt_tokens"), usage.get("completion_tokens")


def _retryable(code: int) -> bool:
    return code == 429 or 500 <= code < 600


def chat(
    cfg: BackendConfig,
    req: ChatRequest,
    *,
    client: Optional[httpx.Client] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ChatResponse:
    """POST ``req`` to ``{base_url}/chat/completions`` with retry on 429/5xx and transport errors."""
    headers = {"Content-Type": "application/json"}
    if cfg.api_key_env:
        key = os.environ.get(cfg.api_key_env)
        if not key:
            raise AuthMissing(f"environment variable {cfg.api_key_env} is not set")
        headers["Authorization"] = f"Bearer {key}"

    url = cfg.base_url.rstrip("/") + "/chat/completions"
    owns_client = client is None
    client = client or httpx.Client(timeout=cfg.timeout_s)
    t0 = time.perf_counter()
    try:
        for attempt in range(cfg.max_retries + 1):
            last = attempt == cfg.max_retries
            try:
                resp = client.post(url, json=req.body(), headers=headers, timeout=cfg.timeout_s)
            except httpx.TimeoutException as e:
                if last:
                    raise BackendTimeout(f"timed out after {attempt + 1} attempts: {e}") from e
                log.warning("chat timeout (attempt %d): %s", attempt + 1, e)
            except httpx.TransportError as e:
                if last:
                    raise BackendError(f"transport error after {attempt + 1} attempts: {e}") from e
                log.warning("chat transport error (attempt %d): %s", attempt + 1, e)
            else:
                if resp.status_code == 200:
                    try:
                        payload = resp.json()
                    except ValueError:
                        raise MalformedResponse("response body is not JSON") from None
                    text, pt, ct = _parse_completion(payload)
                    latency = (time.perf_counter() - t0) * 1000.0
                    return ChatResponse(text, pt, ct, latency)
                if not _retryable(resp.status_code) or last:
                    raise HttpStatus(resp.status_code, resp.text)
                log.warning("chat HTTP %d (attempt %d), retrying", resp.status_code, attempt + 1)
            sleep(cfg.retry_backoff_s * (2 ** attempt))
        raise AssertionError("unreachable")
    finally:
        if owns_client:
            client.close()


def message_digest(messages: Sequence[Message]) -> str:
    """Stable key for a conversation: sha256 over role/content pairs."""
    joined = "\x1e".join(f"{m.role}\x1f{m.content}" for m in messages)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


@dataclass
class MockScript:
    """Scripted responses: keyed by message digest, or consumed in order."""

    entries: list[dict]
    keyed: dict[str, str] = field(init=False)
    _cursor: int = field(init=False, default=0)
    _lock: threading.Lock = field(init=False, default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        keys = [e.get("key") for e in self.entries]
        if any(k is None for k in keys) and any(k is not None for k in keys):
            raise InvalidInput("mock script mixes keyed and sequence entries")
        self.keyed = {e["key"]: e["text"] for e in self.entries if e.get("key") is not None}

    @property
    def sequence_mode(self) -> bool:
        return not self.keyed

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MockScript":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                if not isinstance(obj.get("text"), str) or "key" not in obj:
                    raise InvalidInput(f"{path}:{i}: mock entry needs 'key' and string 'text'")
                entries.append(obj)
        return cls(entries)

    def next_text(self, req: ChatRequest) -> str:
        if not self.sequence_mode:
            key = message_digest(req.messages)
            try:
                return self.keyed[key]
            except KeyError:
                raise UnscriptedRequest(f"no scripted response for digest {key}") from None
        # order across threads is whatever order callers arrive in
        with self._lock:
            if self._cursor >= len(self.entries):
                raise ScriptExhausted(f"all {len(self.entries)} scripted responses consumed")
            text = self.entries[self._cursor]["text"]
            self._cursor += 1
            return text


def mock_chat(script: MockScript, req: ChatRequest) -> ChatResponse:
    return ChatResponse(script.next_text(req), None, None, 0.0)


class ChatBackend:
    """Common surface the pipeline and reward service talk to."""

    name: str = "backend"
    model: str = "default"

    def complete(self, req: ChatRequest) -> ChatResponse:
        raise NotImplementedError

    def ping(self) -> bool:
        return True


class HttpBackend(ChatBackend):
    def __init__(self, cfg: BackendConfig, name: str = "http", transport=None):
        self.cfg = cfg
        self.name = name
        self.model = cfg.model
        self._client = httpx.Client(timeout=cfg.timeout_s, transport=transport)

    def complete(self, req: ChatRequest) -> ChatResponse:
        return chat(self.cfg, req, client=self._client)

    def ping(self) -> bool:
        try:
            resp = self._client.get(self.cfg.base_url.rstrip("/") + "/models", timeout=5.0)
        except httpx.HTTPError:
            return False
        return resp.status_code < 500

    def close(self) -> None:
        self._client.close()


class MockBackend(ChatBackend):
    """Deterministic, network-free backend.

    Either a :class:`MockScript` or a ``responder`` callable produces the
    text. Every request is kept in ``requests`` for inspection.
    """

    def __init__(
        self,
        script: Optional[MockScript] = None,
        responder: Optional[Callable[[ChatRequest], str]] = None,
        name: str = "mock",
        model: str = "mock",
    ):
        if (script is None) == (responder is None):
            raise InvalidInput("give exactly one of script or responder")
        self.script = script
        self.responder = responder
        self.name = name
        self.model = model
        self.requests: list[ChatRequest] = []
        self._lock = threading.Lock()

    def complete(self, req: ChatRequest) -> ChatResponse:
        with self._lock:
            self.requests.append(req)
        if self.script is not None:
            return mock_chat(self.script, req)
        return ChatResponse(self.responder(req), None, None, 0.0)
