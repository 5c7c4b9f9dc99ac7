"""Chat-completion providers behind one interface.

Two backends: an HTTP client for any endpoint that streams JSON deltas
over server-sent events, and a deterministic scripted mock for tests and
benchmarks. Credentials are referenced by environment-variable name and
never stored or echoed.
"""

from __future__ import annotations

import base64
import json
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator

import httpx

from .prompts import PromptBundle


class ProviderError(Exception):
    pass


class AuthError(ProviderError):
    pass


class TransportError(ProviderError):
    pass


class ProtocolError(ProviderError):
    pass


class Cancelled(ProviderError):
    """Consumer-side cancellation marker; closing the chunk iterator is
    equivalent and releases the connection."""


class BadScriptFormat(ProviderError):
    pass


class ProviderKind(Enum):
    HTTP = "http"
    MOCK = "mock"


@dataclass(frozen=True)
class ProviderConfig:
    kind: ProviderKind = ProviderKind.MOCK
    endpoint_url: str = ""
    api_key_env_var_name: str = "DRAWGEN_API_KEY"
    model_id: str = "default"
    max_output_tokens: int = 4000
    temperature: float = 0.2
    script_path: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must be in [0, 1]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        if self.kind is ProviderKind.HTTP and not self.endpoint_url:
            raise ValueError("http provider needs endpoint_url")
        if self.kind is ProviderKind.MOCK and not self.script_path:
            raise ValueError("mock provider needs script_path")


@dataclass(frozen=True)
class TokenChunk:
    text: str
    is_final: bool = False
    usage: tuple[int, int] | None = None  # (input tokens, output tokens), final only


def _estimate(text: str) -> int:
    return -(-len(text) // 4)


def bundle_text(bundle: PromptBundle) -> str:
    return "\n".join(t.text for t in bundle.turns)


# ---------------------------------------------------------------------------
# Scripted mock
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MockEntry:
    match: str = ""  # substring of the request; empty matches anything
    response: str = ""
    chunk_size: int = 16
    error: str | None = None  # transport | protocol | auth
    error_at_chunk: int | None = None  # 1-based; that chunk raises instead
    delay_ms: float = 0.0


@dataclass(frozen=True)
class MockScript:
    entries: tuple[MockEntry, ...]


_ERROR_KINDS = {"transport": TransportError, "protocol": ProtocolError, "auth": AuthError}


def load_mock_script(path: str | Path) -> MockScript:
    """Load a JSON mock script; see README for the documented format."""
    path = Path(path)
    raw = path.read_text(encoding="utf-8")  # FileNotFoundError propagates
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise BadScriptFormat(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("entries"), list):
        raise BadScriptFormat(f"{path}: expected an object with an 'entries' list")
    entries: list[MockEntry] = []
    for i, item in enumerate(data["entries"]):
        if not isinstance(item, dict):
            raise BadScriptFormat(f"{path}: entry {i} is not an object")
        response = item.get("response")
        if response is None and "response_file" in item:
            response = (path.parent / item["response_file"]).read_text(encoding="utf-8")
        if not isinstance(response, str):
            raise BadScriptFormat(f"{path}: entry {i} needs 'response' or 'response_file'")
        error = item.get("error")
        if error is not None and error not in _ERROR_KINDS:
            raise BadScriptFormat(f"{path}: entry {i} has unknown error kind {error!r}")
        chunk_size = item.get("chunk_size", 16)
        if not isinstance(chunk_size, int) or chunk_size < 1:
            raise BadScriptFormat(f"{path}: entry {i} chunk_size must be a positive integer")
        entries.append(
            MockEntry(
                match=item.get("match", ""),
                response=response,
                chunk_size=chunk_size,
                error=error,
                error_at_chunk=item.get("error_at_chunk"),
                delay_ms=float(item.get("delay_ms", 0)),
            )
        )
    return MockScript(entries=tuple(entries))


class MockProvider:
    """Serves scripted responses; entries are matched in order and each is
    consumed once. Thread-safe; streams are deterministic."""

    def __init__(self, script: MockScript) -> None:
        self._entries = list(script.entries)
        self._consumed = [False] * len(self._entries)
        self._lock = threading.Lock()
        self.calls: list[str] = []

    def check_ready(self) -> None:
        pass

    def send(self, bundle: PromptBundle) -> Iterator[TokenChunk]:
        request = bundle_text(bundle)
        with self._lock:
            self.calls.append(request)
            entry = None
            for i, candidate in enumerate(self._entries):
                if not self._consumed[i] and candidate.match in request:
                    self._consumed[i] = True
                    entry = candidate
                    break
        if entry is None:
            raise ProtocolError("no mock script entry matches the request")
        return _mock_stream(entry, input_tokens=bundle.token_estimate)

    def close(self) -> None:
        pass


def _mock_stream(entry: MockEntry, input_tokens: int) -> Iterator[TokenChunk]:
    text = entry.response
    size = entry.chunk_size
    pieces = [text[i : i + size] for i in range(0, len(text), size)] or [""]
    fire_at = entry.error_at_chunk if entry.error else None
    usage = (input_tokens, _estimate(text))
    for index, piece in enumerate(pieces, start=1):
        if fire_at is not None and index >= fire_at:
            raise _ERROR_KINDS[entry.error](f"injected {entry.error} error at chunk {fire_at}")
        if entry.delay_ms:
            time.sleep(entry.delay_ms / 1000.0)
        last = index == len(pieces)
        if last and fire_at is None:
            yield TokenChunk(piece, is_final=True, usage=usage)
        else:
            yield TokenChunk(piece)
    if fire_at is not None:
        raise _ERROR_KINDS[entry.error](f"injected {entry.error} error at chunk {fire_at}")


# ---------------------------------------------------------------------------
# HTTP + SSE
# ---------------------------------------------------------------------------

_TIMEOUT = httpx.Timeout(120.0, connect=30.0)


def _media_type(image: bytes) -> str:
    if image.startswith(b"\xff\xd8"):
        return "image/jpeg"
    return "image/png"


class HttpProvider:
    """POSTs ``{model, messages, max_tokens, temperature, stream:true}`` and
    reads server-sent events with JSON deltas plus a terminal usage event."""

    def __init__(self, cfg: ProviderConfig, transport: httpx.BaseTransport | None = None) -> None:
        self._cfg = cfg
        self._client = httpx.Client(timeout=_TIMEOUT, transport=transport)

    def _resolve_key(self) -> str | None:
        name = self._cfg.api_key_env_var_name
        if not name:
            return None  # endpoint without authentication
        key = os.environ.get(name, "")
        if not key:
            raise AuthError(f"credential environment variable {name!r} is not set")
        return key

    def check_ready(self) -> None:
        self._resolve_key()

    def send(self, bundle: PromptBundle) -> Iterator[TokenChunk]:
        key = self._resolve_key()  # raises before any network activity
        payload = self._payload(bundle)
        headers = {"accept": "text/event-stream"}
        if key is not None:
            headers["authorization"] = f"Bearer {key}"
        return self._stream(payload, headers)

    def _payload(self, bundle: PromptBundle) -> dict:
        messages = []
        for turn in bundle.turns:
            content: list[dict] = [{"type": "text", "text": turn.text}]
            if turn.image is not None:
                content.append(
                    {
                        "type": "image",
                        "media_type": _media_type(turn.image),
                        "data": base64.b64encode(turn.image).decode("ascii"),
                    }
                )
            messages.append({"role": turn.role.value, "content": content})
        return {
            "model": self._cfg.model_id,
            "messages": messages,
            "max_tokens": self._cfg.max_output_tokens,
            "temperature": self._cfg.temperature,
            "stream": True,
        }

    def _stream(self, payload: dict, headers: dict) -> Iterator[TokenChunk]:
        try:
            with self._client.stream(
                "POST", self._cfg.endpoint_url, json=payload, headers=headers
            ) as response:
                if response.status_code in (401, 403):
                    raise AuthError(f"endpoint rejected credentials (HTTP {response.status_code})")
                if response.status_code >= 400:
                    raise TransportError(f"HTTP {response.status_code} from endpoint")
                saw_final = False
                for line in response.iter_lines():
                    line = line.strip()
                    if not line or line.startswith(":") or not line.startswith("data:"):
                        continue
                    body = line[len("data:") :].strip()
                    if body == "[DONE]":
                        break
                    try:
                        event = json.loads(body)
                    except json.JSONDecodeError as exc:
                        raise ProtocolError(f"malformed event payload: {body[:80]}") from exc
                    if "delta" in event:
                        yield TokenChunk(str(event["delta"].get("text", "")))
                    if "usage" in event:
                        usage = event["usage"]
                        yield TokenChunk(
                            "",
                            is_final=True,
                            usage=(
                                int(usage.get("input_tokens", 0)),
                                int(usage.get("output_tokens", 0)),
                            ),
                        )
                        saw_final = True
                        break
                if not saw_final:
                    raise ProtocolError("stream ended without a terminal usage event")
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc

    def close(self) -> None:
        self._client.close()


def make_provider(
    cfg: ProviderConfig, transport: httpx.BaseTransport | None = None
) -> MockProvider | HttpProvider:
    if cfg.kind is ProviderKind.MOCK:
        return MockProvider(load_mock_script(cfg.script_path))
    return HttpProvider(cfg, transport=transport)


def send(cfg: ProviderConfig, bundle: PromptBundle) -> Iterator[TokenChunk]:
    """One-shot convenience over make_provider(cfg).send(bundle)."""
    return make_provider(cfg).send(bundle)
