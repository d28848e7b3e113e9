"""Model-interaction layer: one request/response contract, two backends.

The HTTP backend speaks the de-facto chat-completions schema so any hosted
or local server works. The scripted mock replays a transcript keyed on a
hash of the exact message contents, making every downstream module testable
with no model at all; it never fabricates text for an unknown prompt.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")


@dataclass
class Message:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"invalid role {self.role!r}")


@dataclass
class GenerationRequest:
    messages: list[Message]
    temperature: float = 0.7
    max_new_tokens: int = 1024
    stop_sequences: list[str] = field(default_factory=list)
    n_samples: int = 1
    request_id: str = ""

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.n_samples < 1 or self.max_new_tokens < 1:
            raise ValueError("n_samples and max_new_tokens must be positive")


@dataclass
class GenerationResult:
    request_id: str
    samples: list[dict]  # {"text": str, "finish_reason": "stop"|"length"|"error"}
    usage: dict = field(default_factory=lambda: {"prompt_tokens": 0,
                                                 "completion_tokens": 0})
    error: str | None = None


class TransportError(RuntimeError):
    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class UnscriptedRequestError(RuntimeError):
    """The mock transcript has no entry for this request."""


@dataclass
class RetryPolicy:
    max_attempts: int = 3
    backoff_s: float = 0.5


@dataclass
class BackendConfig:
    kind: str = "scripted_mock"  # or "http_openai_compatible"
    base_url: str = ""
    model: str = "default"
    auth_env_var_name: str = ""
    transcript_path: str = ""
    max_in_flight: int = 8
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self) -> None:
        if self.kind == "scripted_mock" and not self.transcript_path:
            raise ValueError("scripted_mock backend requires a transcript path")
        if self.kind == "http_openai_compatible" and not self.base_url:
            raise ValueError("http backend requires base_url")


def transcript_key(messages: list[Message], n_samples: int) -> str:
    """Stable hash of the serialized message list plus the sample count."""
    payload = json.dumps([[m.role, m.content] for m in messages]
                         + [n_samples], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ScriptedMockBackend:
    def __init__(self, transcript_path: str | Path):
        self.entries: dict[str, list[str]] = {}
        with open(transcript_path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    rec = json.loads(line)
                    self.entries[rec["key_hash"]] = rec["samples"]

    def complete(self, req: GenerationRequest) -> list[str]:
        key = transcript_key(req.messages, req.n_samples)
        if key not in self.entries:
            raise UnscriptedRequestError(
                f"no transcript entry for request {req.request_id or key[:12]}")
        samples = self.entries[key]
        if len(samples) != req.n_samples:
            raise UnscriptedRequestError(
                f"transcript entry for {key[:12]} has {len(samples)} samples, "
                f"request wants {req.n_samples}")
        return list(samples)


class HttpOpenAICompatBackend:
    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()

    def complete(self, req: GenerationRequest) -> list[str]:
        headers = {}
        if self.config.auth_env_var_name:
            token = os.environ.get(self.config.auth_env_var_name, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.config.model,
            "messages": [{"role": m.role, "content": m.content}
                         for m in req.messages],
            "temperature": req.temperature,
            "n": req.n_samples,
            "max_tokens": req.max_new_tokens,
        }
        if req.stop_sequences:
            body["stop"] = req.stop_sequences
        resp = self.session.post(
            f"{self.config.base_url.rstrip('/')}/v1/chat/completions",
            json=body, headers=headers, timeout=600)
        resp.raise_for_status()
        data = resp.json()
        choices = sorted(data["choices"], key=lambda c: c.get("index", 0))
        return [c["message"]["content"] for c in choices]


def apply_stop_sequences(text: str, stop_sequences: list[str]) -> tuple[str, str]:
    """Truncate before the earliest stop occurrence; report the finish reason."""
    cut = len(text)
    for stop in stop_sequences:
        idx = text.find(stop)
        if idx != -1:
            cut = min(cut, idx)
    if cut < len(text):
        return text[:cut], "stop"
    return text, "length"


class InferenceGateway:
    """Thread-safe front door to a backend, with retries and an in-flight cap."""

    def __init__(self, config: BackendConfig):
        self.config = config
        if config.kind == "scripted_mock":
            self.backend = ScriptedMockBackend(config.transcript_path)
        elif config.kind == "http_openai_compatible":
            self.backend = HttpOpenAICompatBackend(config)
        else:
            raise ValueError(f"unknown backend kind {config.kind!r}")
        self._semaphore = threading.Semaphore(config.max_in_flight)

    def generate(self, req: GenerationRequest) -> GenerationResult:
        last_exc: Exception | None = None
        for attempt in range(1, self.config.retry.max_attempts + 1):
            raw_samples = None
            with self._semaphore:
                try:
                    raw_samples = self.backend.complete(req)
                except UnscriptedRequestError:
                    raise
                except Exception as exc:  # noqa: BLE001 - retried transport faults
                    last_exc = exc
                    logger.warning("generate attempt %d/%d failed: %s",
                                   attempt, self.config.retry.max_attempts, exc)
            if raw_samples is None:
                time.sleep(self.config.retry.backoff_s * attempt)
                continue
            samples = []
            for text in raw_samples:
                truncated, reason = apply_stop_sequences(text, req.stop_sequences)
                samples.append({"text": truncated, "finish_reason": reason})
            usage = {
                "prompt_tokens": sum(estimate_tokens(m.content) for m in req.messages),
                "completion_tokens": sum(estimate_tokens(s["text"]) for s in samples),
            }
            return GenerationResult(request_id=req.request_id,
                                    samples=samples, usage=usage)
        raise TransportError(str(last_exc), self.config.retry.max_attempts)

    def generate_batch(self, reqs: list[GenerationRequest]) -> list[GenerationResult]:
        """Order-aligned results; per-request failures become error results."""
        if not reqs:
            return []

        def run(req: GenerationRequest) -> GenerationResult:
            try:
                return self.generate(req)
            except Exception as exc:  # noqa: BLE001 - embedded per-request
                return GenerationResult(request_id=req.request_id, samples=[],
                                        error=str(exc))

        with ThreadPoolExecutor(max_workers=self.config.max_in_flight) as pool:
            return list(pool.map(run, reqs))


def estimate_tokens(text: str) -> int:
    """Cheap length estimator: ~4 characters per token."""
    return max(1, len(text) // 4) if text else 0


TOKEN_BUDGET = 3072


def budgeted_max_new_tokens(messages: list[Message],
                            budget: int = TOKEN_BUDGET) -> int:
    """Completion budget keeping prompt + completion within the window."""
    prompt_tokens = sum(estimate_tokens(m.content) for m in messages)
    return max(64, budget - prompt_tokens)
