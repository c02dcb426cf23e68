"""Single abstraction over chat-style LLM backends.

Two backends ship with the package: an HTTP backend speaking the
OpenAI-compatible chat-completions protocol, and deterministic scripted
mocks for tests and offline runs. The gateway enforces the context-window
budget up front -- an over-budget request fails loudly instead of being
silently truncated -- and keeps a transcript of every call for audit.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import (
    BudgetExceeded,
    ConfigError,
    MalformedResponse,
    ScriptExhausted,
    TransportError,
)

API_KEY_ENV = "NEEDLEGAUGE_API_KEY"

ROLES = ("system", "user", "assistant")


def estimate_tokens(text: str) -> int:
    """Default token estimate: ceil(chars / 4). Zero for the empty string."""
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")


@dataclass(frozen=True)
class GatewayConfig:
    """Connection and budget parameters for one model endpoint."""

    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-4o"
    temperature: float = 0.0
    max_output_tokens: int = 4095
    context_window_tokens: int = 128000
    max_attempts: int = 5
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_output_tokens <= 0 or self.context_window_tokens <= 0:
            raise ConfigError("token limits must be positive")
        if self.max_output_tokens >= self.context_window_tokens:
            raise ConfigError("max_output_tokens must be smaller than context_window_tokens")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")


@dataclass(frozen=True)
class Thread:
    """Immutable ordered message list with a running token estimate."""

    messages: tuple[ChatMessage, ...] = ()
    token_estimate: int = 0

    @classmethod
    def empty(cls) -> "Thread":
        return cls()

    def append(self, message: ChatMessage, estimator: Callable[[str], int] = estimate_tokens) -> "Thread":
        return Thread(
            messages=self.messages + (message,),
            token_estimate=self.token_estimate + estimator(message.content),
        )


@dataclass
class CallRecord:
    """One gateway call: full request messages, reply, and bookkeeping."""

    request: tuple[ChatMessage, ...]
    reply: ChatMessage
    attempts: int
    projected_tokens: int


class Backend:
    """Minimal backend interface: turn a message list into one reply string."""

    def complete(self, messages: Sequence[ChatMessage], cfg: GatewayConfig) -> tuple[str, int]:
        """Return (reply_text, attempts_used)."""
        raise NotImplementedError


class HttpBackend(Backend):
    """OpenAI-compatible chat-completions client with retry/backoff.

    Retries only transport failures, HTTP 429 and 5xx; anything else is
    surfaced immediately. The API key is read from NEEDLEGAUGE_API_KEY.
    """

    def __init__(self, session: requests.Session | None = None, sleep=time.sleep):
        self._session = session or requests.Session()
        self._sleep = sleep

    def complete(self, messages: Sequence[ChatMessage], cfg: GatewayConfig) -> tuple[str, int]:
        url = cfg.endpoint.rstrip("/") + "/chat/completions"
        payload = {
            "model": cfg.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error: Exception | None = None
        for attempt in range(1, cfg.max_attempts + 1):
            try:
                response = self._session.post(url, json=payload, headers=headers, timeout=120)
            except requests.RequestException as exc:
                last_error = exc
            else:
                if response.status_code == 200:
                    return _parse_chat_completion(response), attempt
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = TransportError(f"HTTP {response.status_code} from {url}")
                else:
                    raise TransportError(
                        f"HTTP {response.status_code} from {url}: {response.text[:200]}"
                    )
            if attempt < cfg.max_attempts:
                self._sleep(cfg.backoff_base * (2 ** (attempt - 1)))
        raise TransportError(f"giving up after {cfg.max_attempts} attempts: {last_error}")


def _parse_chat_completion(response: requests.Response) -> str:
    try:
        body = response.json()
        content = body["choices"][0]["message"]["content"]
    except (ValueError, LookupError, TypeError) as exc:
        raise MalformedResponse(f"cannot read chat completion: {exc}") from exc
    if not isinstance(content, str):
        raise MalformedResponse("chat completion content is not a string")
    return content


class ScriptedBackend(Backend):
    """Replays a fixed reply sequence in call order; raises when exhausted."""

    def __init__(self, replies: Sequence[str]):
        self._replies = list(replies)
        self._cursor = 0
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage], cfg: GatewayConfig) -> tuple[str, int]:
        with self._lock:
            if self._cursor >= len(self._replies):
                raise ScriptExhausted(f"script exhausted after {len(self._replies)} replies")
            reply = self._replies[self._cursor]
            self._cursor += 1
        return reply, 1

    @property
    def remaining(self) -> int:
        return len(self._replies) - self._cursor


class DirectoryBackend(ScriptedBackend):
    """Reads numbered JSON reply files from a directory, served in sorted order.

    Each file holds either {"content": "..."} or a bare JSON string.
    """

    def __init__(self, path):
        directory = Path(path)
        if not directory.is_dir():
            raise ConfigError(f"mock reply directory not found: {directory}")
        replies = []
        for file in sorted(directory.glob("*.json")):
            raw = json.loads(file.read_text(encoding="utf-8"))
            if isinstance(raw, str):
                replies.append(raw)
            elif isinstance(raw, dict) and isinstance(raw.get("content"), str):
                replies.append(raw["content"])
            else:
                raise ConfigError(f"bad mock reply file {file}: expected string or {{'content': ...}}")
        super().__init__(replies)


class ResponderBackend(Backend):
    """Pure-function mock: reply = fn(messages). Identical inputs, identical outputs."""

    def __init__(self, fn: Callable[[Sequence[ChatMessage]], str]):
        self._fn = fn

    def complete(self, messages: Sequence[ChatMessage], cfg: GatewayConfig) -> tuple[str, int]:
        return self._fn(messages), 1


class Gateway:
    """Budget-checked send() over a backend, with a per-gateway transcript.

    Thread-safe for concurrent sends on distinct Thread values; a single
    Thread is meant to be confined to one logical task at a time.
    """

    def __init__(
        self,
        backend: Backend,
        cfg: GatewayConfig | None = None,
        estimator: Callable[[str], int] = estimate_tokens,
    ):
        self.backend = backend
        self.cfg = cfg or GatewayConfig()
        self.estimator = estimator
        self._transcript: list[CallRecord] = []
        self._lock = threading.Lock()

    def send(
        self, thread: Thread, message: ChatMessage, cfg: GatewayConfig | None = None
    ) -> tuple[ChatMessage, Thread]:
        """Append `message`, obtain the backend reply, return (reply, new thread).

        Raises BudgetExceeded when the projected thread plus the reply budget
        would not fit the context window; the caller is expected to start a
        fresh extraction epoch in that case.
        """
        cfg = cfg or self.cfg
        projected = thread.token_estimate + self.estimator(message.content) + cfg.max_output_tokens
        if projected > cfg.context_window_tokens:
            raise BudgetExceeded(projected, cfg.context_window_tokens)
        request = thread.messages + (message,)
        reply_text, attempts = self.backend.complete(request, cfg)
        reply = ChatMessage(role="assistant", content=reply_text)
        new_thread = thread.append(message, self.estimator).append(reply, self.estimator)
        record = CallRecord(request=request, reply=reply, attempts=attempts, projected_tokens=projected)
        with self._lock:
            self._transcript.append(record)
        return reply, new_thread

    @property
    def transcript(self) -> list[CallRecord]:
        with self._lock:
            return list(self._transcript)

    @property
    def call_count(self) -> int:
        with self._lock:
            return len(self._transcript)

    def write_transcript(self, path) -> None:
        """Write the transcript as newline-delimited JSON of (request, reply) pairs."""
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.transcript:
                fh.write(
                    json.dumps(
                        {
                            "request": [{"role": m.role, "content": m.content} for m in record.request],
                            "reply": {"role": record.reply.role, "content": record.reply.content},
                            "attempts": record.attempts,
                            "projected_tokens": record.projected_tokens,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
