"""Chat-completion gateway: one live HTTP backend plus record/replay doubles.

Every model call in the pipeline goes through :class:`Gateway`, which owns
the temperature policy (0 everywhere except the Plan role) and keeps a log
of (role, temperature) pairs for audit.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol

import requests

logger = logging.getLogger(__name__)

TOKEN_ENV_VAR = "TRIPSMITH_API_TOKEN"


class AgentRole(Enum):
    PATH_FINDER = "PathFinder"
    KEYPOINTS = "Keypoints"
    COMMONSENSE = "Commonsense"
    THOUGHT = "Thought"
    TOOL = "Tool"
    DESCRIPTION = "Description"
    PLAN = "Plan"
    EVALUATE = "Evaluate"


class BackendError(Exception):
    """Base class for model-call failures."""


class TransportError(BackendError):
    """Network failure or non-success HTTP status after retries."""


class ContextOverflowError(BackendError):
    """The provider rejected the request as too long."""


class EmptyResponseError(BackendError):
    """The model returned no text."""


class ReplayError(BackendError):
    """Replay transcript exhausted or rejected."""


@dataclass(frozen=True)
class ChatMessage:
    speaker: str  # "system" | "user" | "assistant"
    text: str

    def __post_init__(self) -> None:
        if self.speaker not in ("system", "user", "assistant"):
            raise ValueError(f"bad speaker {self.speaker!r}")


@dataclass(frozen=True)
class ChatRequest:
    role: AgentRole
    messages: tuple[ChatMessage, ...]
    temperature: float

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("request has no messages")
        if self.messages[0].speaker != "system":
            raise ValueError("first message must be the system prompt")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature out of range: {self.temperature}")


def request_digest(request: ChatRequest) -> str:
    """Stable fingerprint of a request, used to pair replays with recordings."""
    payload = {
        "role": request.role.value,
        "temperature": request.temperature,
        "messages": [[m.speaker, m.text] for m in request.messages],
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


# ---------------------------------------------------------------------------
# live backend


_OVERFLOW_MARKERS = ("context_length", "context length", "maximum context", "too many tokens")


class LiveBackend:
    """Minimal chat-completions client over HTTP.

    Reads the bearer token from the TRIPSMITH_API_TOKEN environment variable
    unless one is passed explicitly. Retries transient failures with a short
    backoff; context-overflow rejections are surfaced as their own error so
    callers can trim and retry.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        token: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_seconds: float = 1.0,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.token = token if token is not None else os.environ.get(TOKEN_ENV_VAR, "")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self._session = requests.Session()

    def complete(self, request: ChatRequest) -> str:
        url = f"{self.base_url}/chat/completions"
        body = {
            "model": self.model,
            "temperature": request.temperature,
            "messages": [{"role": m.speaker, "content": m.text} for m in request.messages],
        }
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"

        last_error: Exception | None = None
        for attempt in range(1, self.max_retries + 1):
            try:
                response = self._session.post(url, json=body, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("request failed (attempt %d/%d): %s", attempt, self.max_retries, exc)
            else:
                if response.status_code == 200:
                    return self._extract_text(response)
                detail = response.text[:500]
                if response.status_code == 400 and any(
                    marker in detail.lower() for marker in _OVERFLOW_MARKERS
                ):
                    raise ContextOverflowError(detail)
                if response.status_code in (400, 401, 403, 404):
                    raise TransportError(f"HTTP {response.status_code}: {detail}")
                last_error = TransportError(f"HTTP {response.status_code}: {detail}")
                logger.warning(
                    "server error (attempt %d/%d): HTTP %s",
                    attempt,
                    self.max_retries,
                    response.status_code,
                )
            if attempt < self.max_retries:
                time.sleep(self.backoff_seconds * attempt)
        raise TransportError(f"gave up after {self.max_retries} attempts: {last_error}")

    @staticmethod
    def _extract_text(response: requests.Response) -> str:
        try:
            data = response.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from None
        if not isinstance(text, str) or not text.strip():
            raise EmptyResponseError("model returned empty text")
        return text


# ---------------------------------------------------------------------------
# record / replay


@dataclass(frozen=True)
class TranscriptEntry:
    role: str
    digest: str
    response: str


def load_transcript(path: Path | str) -> list[TranscriptEntry]:
    entries: list[TranscriptEntry] = []
    try:
        handle = Path(path).open(encoding="utf-8")
    except FileNotFoundError:
        raise ReplayError(f"transcript file not found: {path}") from None
    with handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                entries.append(
                    TranscriptEntry(
                        role=obj["role"], digest=obj["digest"], response=obj["response"]
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ReplayError(f"{path}:{lineno}: bad transcript line: {exc}") from None
    return entries


class RecordBackend:
    """Wraps a live backend and writes every exchange to a JSONL transcript."""

    def __init__(self, inner: Backend, path: Path | str) -> None:
        self.inner = inner
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        # truncate: a recording is a fresh take, never an append to an old one
        self.path.write_text("", encoding="utf-8")

    def complete(self, request: ChatRequest) -> str:
        response = self.inner.complete(request)
        entry = {
            "role": request.role.value,
            "digest": request_digest(request),
            "response": response,
        }
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return response

    def close(self) -> None:  # kept for symmetry; writes are flushed per line
        pass


class ReplayBackend:
    """Serves recorded responses per role, in recorded order.

    Each role has its own FIFO queue. A digest mismatch means the prompts
    drifted since recording: logged as a warning by default, raised when
    `strict` is set. Never touches the network.
    """

    def __init__(self, entries: list[TranscriptEntry], *, strict: bool = False) -> None:
        self.strict = strict
        self._queues: dict[str, list[TranscriptEntry]] = {}
        for entry in entries:
            self._queues.setdefault(entry.role, []).append(entry)
        self._cursors: dict[str, int] = {role: 0 for role in self._queues}

    @classmethod
    def from_path(cls, path: Path | str, *, strict: bool = False) -> ReplayBackend:
        return cls(load_transcript(path), strict=strict)

    def complete(self, request: ChatRequest) -> str:
        role = request.role.value
        queue = self._queues.get(role, [])
        cursor = self._cursors.get(role, 0)
        if cursor >= len(queue):
            raise ReplayError(f"transcript exhausted for role {role} (served {cursor})")
        entry = queue[cursor]
        self._cursors[role] = cursor + 1
        digest = request_digest(request)
        if entry.digest != digest:
            message = (
                f"digest mismatch for role {role} entry {cursor}: "
                f"recorded {entry.digest[:12]}, got {digest[:12]}"
            )
            if self.strict:
                raise ReplayError(message)
            logger.warning("%s", message)
        return entry.response

    def leftover(self) -> dict[str, int]:
        """Entries recorded but never replayed, per role."""
        out = {}
        for role, queue in self._queues.items():
            rest = len(queue) - self._cursors.get(role, 0)
            if rest:
                out[role] = rest
        return out


# ---------------------------------------------------------------------------
# the gateway


@dataclass
class Gateway:
    """Routes agent calls to a backend and enforces the temperature policy."""

    backend: Backend
    plan_temperature: float = 0.7
    request_log: list[tuple[str, float]] = field(default_factory=list)

    def temperature_for(self, role: AgentRole) -> float:
        return self.plan_temperature if role is AgentRole.PLAN else 0.0

    def ask(self, role: AgentRole, messages: tuple[ChatMessage, ...]) -> str:
        temperature = self.temperature_for(role)
        request = ChatRequest(role=role, messages=messages, temperature=temperature)
        # the policy is part of the engine's contract; catch drift loudly
        if role is AgentRole.PLAN:
            assert request.temperature == self.plan_temperature
        else:
            assert request.temperature == 0.0
        self.request_log.append((role.value, temperature))
        text = self.backend.complete(request)
        if not text.strip():
            raise EmptyResponseError(f"{role.value} returned empty text")
        return text
