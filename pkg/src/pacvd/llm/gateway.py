"""Chat-completion dispatch with retries, rate limiting and bounded concurrency."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Protocol

import httpx

from ..prompts import ANALYSIS_SLOT, ASSISTANT_PLACEHOLDER, SYSTEM, USER, PromptBundle, resolve_analysis
from .ratelimit import TokenBucket
from .verdict import parse_verdict

logger = logging.getLogger(__name__)

DEFAULT_AUTH_ENV = "PACVD_API_KEY"


class GatewayError(Exception):
    pass


class AuthMissing(GatewayError):
    def __init__(self, env: str):
        self.env = env
        super().__init__(f"environment variable {env} is not set")


class TransportError(GatewayError):
    pass


class ProviderError(GatewayError):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message
        super().__init__(f"provider returned {status}: {message}")


@dataclass
class ProviderConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o"
    auth_env: str = DEFAULT_AUTH_ENV
    temperature: float = 0.1
    top_p: float = 0.95
    max_tokens: int = 512
    timeout: float = 60.0
    max_retries: int = 3
    rpm: Optional[float] = None
    max_in_flight: int = 4
    max_input_chars: int = 32000
    backoff: float = 0.5

    def __post_init__(self):
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must be in [0, 2]")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.max_retries < 0 or self.max_in_flight < 1:
            raise ValueError("max_retries must be >= 0 and max_in_flight >= 1")

    @property
    def provider_id(self) -> str:
        return f"{self.model}@{self.endpoint}"

    @classmethod
    def from_dict(cls, doc: dict) -> "ProviderConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown provider config keys: {', '.join(sorted(unknown))}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path: str) -> "ProviderConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Verdict:
    label: str
    raw: str
    turns: List[Dict[str, str]]
    latency: float
    provider_id: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "Verdict":
        return cls(doc["label"], doc["raw"], list(doc["turns"]), doc.get("latency", 0.0), doc["provider_id"])


class Provider(Protocol):
    id: str

    def chat(self, messages: List[Dict[str, str]]) -> str: ...


_RETRY_STATUS = {429, 500, 502, 503, 504}


class HttpProvider:
    """JSON chat-completions client ({model, messages, temperature, top_p, max_tokens})."""

    def __init__(self, config: ProviderConfig, transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep, require_auth: bool = True):
        self.config = config
        self.id = config.provider_id
        self.sleep = sleep
        self.token = os.environ.get(config.auth_env)
        if require_auth and not self.token:
            raise AuthMissing(config.auth_env)
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        self.client = httpx.Client(transport=transport, timeout=config.timeout, headers=headers)
        self.requests_sent = 0

    def payload(self, messages: List[Dict[str, str]]) -> dict:
        c = self.config
        return {"model": c.model, "messages": messages, "temperature": c.temperature,
                "top_p": c.top_p, "max_tokens": c.max_tokens}

    def chat(self, messages: List[Dict[str, str]]) -> str:
        body = self.payload(messages)
        attempts = self.config.max_retries + 1
        for attempt in range(attempts):
            last = attempt == attempts - 1
            try:
                self.requests_sent += 1
                resp = self.client.post(self.config.endpoint, json=body)
            except httpx.TransportError as exc:
                if last:
                    raise TransportError(f"{type(exc).__name__}: {exc}") from exc
                self._backoff(attempt, str(exc))
                continue
            if resp.status_code in _RETRY_STATUS and not last:
                self._backoff(attempt, f"status {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise ProviderError(resp.status_code, _error_message(resp))
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ProviderError(resp.status_code, f"malformed response: {exc}") from None
        raise TransportError("retries exhausted")  # pragma: no cover

    def _backoff(self, attempt: int, why: str) -> None:
        delay = self.config.backoff * (2 ** attempt)
        logger.warning("%s: transient failure (%s), retrying in %.2fs", self.id, why, delay)
        self.sleep(delay)

    def close(self) -> None:
        self.client.close()


def _error_message(resp: httpx.Response) -> str:
    try:
        doc = resp.json()
        err = doc.get("error", doc)
        return err.get("message", json.dumps(err)) if isinstance(err, dict) else str(err)
    except ValueError:
        return resp.text[:500]


class Gateway:
    """Runs dialogues against a provider; safe to share between threads."""

    def __init__(self, provider: Provider, max_in_flight: int = 4, rpm: Optional[float] = None,
                 max_input_chars: Optional[int] = 32000, limiter: Optional[TokenBucket] = None):
        self.provider = provider
        self.max_in_flight = max_in_flight
        self.slots = threading.BoundedSemaphore(max_in_flight)
        self.limiter = limiter or TokenBucket(rpm)
        self.max_input_chars = max_input_chars
        self._lock = threading.Lock()
        self.in_flight = 0
        self.peak_in_flight = 0
        self.calls = 0

    @classmethod
    def from_config(cls, config: ProviderConfig, provider: Optional[Provider] = None) -> "Gateway":
        return cls(provider or HttpProvider(config), config.max_in_flight, config.rpm, config.max_input_chars)

    def _send(self, messages: List[Dict[str, str]]) -> str:
        self.limiter.acquire()
        with self.slots:
            with self._lock:
                self.in_flight += 1
                self.calls += 1
                self.peak_in_flight = max(self.peak_in_flight, self.in_flight)
            try:
                return self.provider.chat([dict(m) for m in messages])
            finally:
                with self._lock:
                    self.in_flight -= 1

    def complete(self, bundle: PromptBundle) -> Verdict:
        if not bundle.placeholders_resolved:
            raise ValueError("prompt has unresolved placeholders")
        start = time.monotonic()
        messages: List[Dict[str, str]] = []
        reply = ""
        for turn in bundle.turns:
            if turn.role == ASSISTANT_PLACEHOLDER:
                continue  # filled by the reply to the preceding user turn
            if turn.role == SYSTEM:
                messages.append({"role": "system", "content": turn.text})
                continue
            text = turn.text
            if ANALYSIS_SLOT in bundle.pending and ANALYSIS_SLOT in text:
                text = resolve_analysis(text, reply, self.max_input_chars)
            messages.append({"role": USER, "content": text})
            reply = self._send(messages)
            messages.append({"role": "assistant", "content": reply})
        return Verdict(parse_verdict(reply), reply, messages, time.monotonic() - start, self.provider.id)


def complete(config: ProviderConfig, bundle: PromptBundle, provider: Optional[Provider] = None) -> Verdict:
    return Gateway.from_config(config, provider).complete(bundle)
