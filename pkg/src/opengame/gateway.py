"""Chat-completion and vision-judge clients with retries and a fixture mock.

Three backends implement the same small interface:

- :class:`HttpBackend` speaks the chat-completion-style HTTP+JSON wire format
  (messages array, optional base64 image parts).
- :class:`MockBackend` answers from fixture files on disk, keyed by request
  tags with a digest fallback; it is a pure function of
  (tags, prompt digest, image digest) so CI runs are byte-reproducible.
- :class:`ScriptedBackend` plays back a canned outcome sequence; used to
  exercise retry behavior.

The :class:`Gateway` owns the retry loop (3 attempts, 1 s/2 s/4 s backoff,
120 s per-attempt timeout) and the structured-JSON extraction rules.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from . import imaging

DEFAULT_TIMEOUT_SECONDS = 120.0
DEFAULT_ATTEMPTS = 3
DEFAULT_BACKOFFS = (1.0, 2.0, 4.0)

LLM_BASE_URL_ENV = "OPENGAME_LLM_BASE_URL"
LLM_API_KEY_ENV = "OPENGAME_LLM_API_KEY"
VLM_BASE_URL_ENV = "OPENGAME_VLM_BASE_URL"
VLM_API_KEY_ENV = "OPENGAME_VLM_API_KEY"


class UnknownBackend(KeyError):
    """No backend registered under the requested id."""


class BackendError(RuntimeError):
    """Non-transient backend failure."""


class TransientBackendError(BackendError):
    """Failure worth retrying (connection reset, 429/5xx, ...)."""


class DeadlineExceeded(TimeoutError):
    """The per-attempt deadline elapsed."""


class SchemaError(ValueError):
    """A response could not be coerced into the requested schema."""


@dataclass(frozen=True)
class TokenUsage:
    prompt: int = 0
    completion: int = 0


@dataclass(frozen=True)
class ChatRequest:
    backend_id: str
    system_prompt: str
    user_prompt: str
    temperature: float = 0.2
    max_tokens: int = 4096
    tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.system_prompt.strip() or not self.user_prompt.strip():
            raise ValueError("prompts must be non-empty")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 1]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        object.__setattr__(self, "tags", tuple(self.tags))


@dataclass(frozen=True)
class ChatResponse:
    text: str
    token_usage: TokenUsage
    attempts: int


@dataclass(frozen=True)
class SchemaKey:
    name: str
    kind: str  # text | number | enum | list
    values: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("text", "number", "enum", "list"):
            raise ValueError(f"unknown schema kind {self.kind!r}")
        if self.kind == "enum" and not self.values:
            raise ValueError("enum kind needs values")
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class ResponseSchema:
    required_keys: tuple[SchemaKey, ...]
    description: str = ""

    def __post_init__(self) -> None:
        if not self.required_keys:
            raise ValueError("schema needs at least one required key")
        names = [k.name for k in self.required_keys]
        if len(set(names)) != len(names):
            raise ValueError("schema keys must be unique by name")
        object.__setattr__(self, "required_keys", tuple(self.required_keys))

    def instruction(self) -> str:
        parts = []
        for key in self.required_keys:
            if key.kind == "enum":
                parts.append(f'"{key.name}" (one of {", ".join(key.values)})')
            else:
                parts.append(f'"{key.name}" ({key.kind})')
        return (
            "Respond with ONLY a valid JSON object containing the keys: "
            + ", ".join(parts)
            + "."
        )


@dataclass(frozen=True)
class JudgeRequest:
    images: tuple[bytes, ...]
    rubric_prompt: str
    schema: ResponseSchema
    tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.images:
            raise ValueError("judge request needs at least one image")
        for i, blob in enumerate(self.images):
            if not imaging.is_png(blob):
                raise ValueError(f"image {i} is not a valid PNG")
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "tags", tuple(self.tags))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def prompt_digest(system_prompt: str, user_prompt: str) -> str:
    return sha256_hex((system_prompt + "\x00" + user_prompt).encode("utf-8"))[:16]


def image_set_digest(images: Sequence[bytes]) -> str:
    h = hashlib.sha256()
    for blob in images:
        h.update(sha256_hex(blob).encode("ascii"))
    return h.hexdigest()[:16]


# --- JSON extraction ----------------------------------------------------------

_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_-]+)?\s*\n(.*?)```", re.DOTALL)


def extract_json(text: str) -> Any:
    """Parse a model response as JSON: raw, then fenced block, then brace slice."""
    try:
        return json.loads(text)
    except (json.JSONDecodeError, TypeError):
        pass
    for block in _FENCE_RE.findall(text):
        try:
            return json.loads(block)
        except json.JSONDecodeError:
            continue
    start, end = text.find("{"), text.rfind("}")
    if start != -1 and end > start:
        try:
            return json.loads(text[start : end + 1])
        except json.JSONDecodeError:
            pass
    raise SchemaError(f"no JSON object found in response: {text[:120]!r}")


def validate_schema(value: Any, schema: ResponseSchema) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"expected a JSON object, got {type(value).__name__}")
    for key in schema.required_keys:
        if key.name not in value:
            raise SchemaError(f"missing required key {key.name!r}")
        item = value[key.name]
        if key.kind == "text" and not isinstance(item, str):
            raise SchemaError(f"key {key.name!r} must be text")
        if key.kind == "number" and (isinstance(item, bool) or not isinstance(item, (int, float))):
            raise SchemaError(f"key {key.name!r} must be a number")
        if key.kind == "enum" and item not in key.values:
            raise SchemaError(f"key {key.name!r} must be one of {key.values}")
        if key.kind == "list" and not isinstance(item, list):
            raise SchemaError(f"key {key.name!r} must be a list")
    return value


# --- backends -------------------------------------------------------------

class MockBackend:
    """Fixture-backed backend for offline runs.

    Chat lookups try ``<root>/<tag0>/<tag1>.json`` (then ``default.json`` for
    a single tag), falling back to ``<root>/_digest/<prompt-digest>.json``.
    Judge lookups use the same tag path with an image-set-digest fallback.
    Fixture files hold ``{"text": ...}`` plus optional token counts.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    @staticmethod
    def _safe(tag: str) -> str:
        return re.sub(r"[^A-Za-z0-9._-]", "-", tag)

    def _fixture_path(self, tags: Sequence[str], digest: str) -> Path | None:
        candidates = []
        if len(tags) >= 2:
            candidates.append(self.root / self._safe(tags[0]) / f"{self._safe(tags[1])}.json")
        elif len(tags) == 1:
            candidates.append(self.root / self._safe(tags[0]) / "default.json")
        candidates.append(self.root / "_digest" / f"{digest}.json")
        for path in candidates:
            if path.is_file():
                return path
        return None

    def _load(self, tags: Sequence[str], digest: str) -> dict:
        path = self._fixture_path(tags, digest)
        if path is None:
            raise BackendError(
                f"no mock fixture for tags={list(tags)} digest={digest} under {self.root}"
            )
        return json.loads(path.read_text())

    def chat(self, request: ChatRequest, timeout: float) -> tuple[str, TokenUsage]:
        digest = prompt_digest(request.system_prompt, request.user_prompt)
        data = self._load(request.tags, digest)
        usage = TokenUsage(int(data.get("prompt_tokens", 0)), int(data.get("completion_tokens", 0)))
        return str(data["text"]), usage

    def judge(self, request: JudgeRequest, timeout: float) -> str:
        digest = image_set_digest(request.images)
        data = self._load(request.tags, digest)
        return str(data["text"])

    def supports_vision(self) -> bool:
        return True


class ScriptedBackend:
    """Plays back a list of outcomes; an Exception instance is raised, a
    string is returned. Used to exercise retry and failure paths."""

    def __init__(self, outcomes: Sequence):
        self.outcomes = list(outcomes)
        self.calls = 0

    def _next(self):
        outcome = self.outcomes[min(self.calls, len(self.outcomes) - 1)]
        self.calls += 1
        if isinstance(outcome, Exception):
            raise outcome
        return str(outcome)

    def chat(self, request: ChatRequest, timeout: float) -> tuple[str, TokenUsage]:
        return self._next(), TokenUsage()

    def judge(self, request: JudgeRequest, timeout: float) -> str:
        return self._next()

    def supports_vision(self) -> bool:
        return True


class HttpBackend:
    """Chat-completion-style HTTP+JSON backend (messages array, image parts)."""

    def __init__(self, base_url: str, api_key: str = "", model: str = "", vision: bool = False):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.vision = vision

    def _post(self, payload: dict, timeout: float) -> dict:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=timeout,
            )
        except requests.Timeout as exc:
            raise DeadlineExceeded(f"no response within {timeout:.0f}s") from exc
        except requests.ConnectionError as exc:
            raise TransientBackendError(str(exc)) from exc
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientBackendError(f"HTTP {response.status_code}: {response.text[:200]}")
        if response.status_code >= 400:
            raise BackendError(f"HTTP {response.status_code}: {response.text[:200]}")
        return response.json()

    @staticmethod
    def _text_of(data: dict) -> tuple[str, TokenUsage]:
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion payload: {data!r:.200}") from exc
        usage = data.get("usage") or {}
        return text, TokenUsage(int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0)))

    def chat(self, request: ChatRequest, timeout: float) -> tuple[str, TokenUsage]:
        payload = {
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if self.model:
            payload["model"] = self.model
        return self._text_of(self._post(payload, timeout))

    def judge(self, request: JudgeRequest, timeout: float) -> str:
        parts: list[dict] = [{"type": "text", "text": request.rubric_prompt}]
        for blob in request.images:
            encoded = base64.b64encode(blob).decode("ascii")
            parts.append(
                {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{encoded}"}}
            )
        payload = {
            "messages": [{"role": "user", "content": parts}],
            "temperature": 0.0,
        }
        if self.model:
            payload["model"] = self.model
        text, _ = self._text_of(self._post(payload, timeout))
        return text

    def supports_vision(self) -> bool:
        return self.vision


# --- gateway ------------------------------------------------------------------

@dataclass
class RetryPolicy:
    attempts: int = DEFAULT_ATTEMPTS
    backoffs: tuple[float, ...] = DEFAULT_BACKOFFS
    timeout: float = DEFAULT_TIMEOUT_SECONDS
    sleep: Callable[[float], None] = time.sleep


class Gateway:
    """Uniform client over chat and vision-judge backends.

    Shareable across concurrent workers: per-request state only.
    """

    def __init__(self, retry: RetryPolicy | None = None, judge_backend_id: str = "vlm"):
        self.retry = retry or RetryPolicy()
        self.judge_backend_id = judge_backend_id
        self._backends: dict[str, Any] = {}

    def register(self, backend_id: str, backend) -> "Gateway":
        self._backends[backend_id] = backend
        return self

    def backend(self, backend_id: str):
        try:
            return self._backends[backend_id]
        except KeyError:
            raise UnknownBackend(backend_id) from None

    def _with_retries(self, call: Callable[[float], Any]) -> tuple[Any, int]:
        last: Exception | None = None
        for attempt in range(1, self.retry.attempts + 1):
            try:
                return call(self.retry.timeout), attempt
            except (TransientBackendError, DeadlineExceeded) as exc:
                last = exc
                if attempt < self.retry.attempts:
                    self.retry.sleep(self.retry.backoffs[min(attempt - 1, len(self.retry.backoffs) - 1)])
        assert last is not None
        raise last

    def complete_chat(self, request: ChatRequest) -> ChatResponse:
        backend = self.backend(request.backend_id)
        (text, usage), attempts = self._with_retries(lambda t: backend.chat(request, t))
        return ChatResponse(text=text, token_usage=usage, attempts=attempts)

    def complete_structured(self, request: ChatRequest, schema: ResponseSchema) -> dict:
        response = self.complete_chat(request)
        try:
            return validate_schema(extract_json(response.text), schema)
        except SchemaError:
            pass
        # One corrective re-prompt before giving up.
        retry_request = replace(
            request,
            user_prompt=request.user_prompt + "\n\n" + schema.instruction(),
        )
        retry_response = self.complete_chat(retry_request)
        try:
            return validate_schema(extract_json(retry_response.text), schema)
        except SchemaError as exc:
            raise SchemaError(
                f"response failed schema after re-prompt: {exc}"
            ) from exc

    def judge(self, request: JudgeRequest, backend_id: str | None = None) -> dict:
        backend = self.backend(backend_id or self.judge_backend_id)
        if not backend.supports_vision():
            raise BackendError(f"backend {backend_id or self.judge_backend_id!r} has no vision support")
        text, _ = self._with_retries(lambda t: backend.judge(request, t))
        return validate_schema(extract_json(text), request.schema)


def build_gateway(
    mock_fixtures: str | Path | None = None,
    chat_env: tuple[str, str] = (LLM_BASE_URL_ENV, LLM_API_KEY_ENV),
    vlm_env: tuple[str, str] = (VLM_BASE_URL_ENV, VLM_API_KEY_ENV),
    retry: RetryPolicy | None = None,
) -> Gateway:
    """Build a gateway with 'chat' and 'vlm' backends.

    With ``mock_fixtures`` set, both ids route to the fixture mock and the
    gateway needs no network or environment configuration.
    """
    import os

    gateway = Gateway(retry=retry)
    if mock_fixtures is not None:
        mock = MockBackend(mock_fixtures)
        return gateway.register("chat", mock).register("vlm", mock)

    chat_url = os.environ.get(chat_env[0], "")
    if not chat_url:
        raise BackendError(f"{chat_env[0]} is not set and no mock fixtures were given")
    gateway.register("chat", HttpBackend(chat_url, os.environ.get(chat_env[1], "")))
    vlm_url = os.environ.get(vlm_env[0], chat_url)
    gateway.register(
        "vlm", HttpBackend(vlm_url, os.environ.get(vlm_env[1], ""), vision=True)
    )
    return gateway


__all__ = [
    "BackendError",
    "ChatRequest",
    "ChatResponse",
    "DeadlineExceeded",
    "Gateway",
    "HttpBackend",
    "JudgeRequest",
    "MockBackend",
    "ResponseSchema",
    "RetryPolicy",
    "SchemaError",
    "SchemaKey",
    "ScriptedBackend",
    "TokenUsage",
    "TransientBackendError",
    "UnknownBackend",
    "build_gateway",
    "extract_json",
    "image_set_digest",
    "prompt_digest",
    "validate_schema",
]
