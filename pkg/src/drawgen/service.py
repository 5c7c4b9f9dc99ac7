"""HTTP service: session-scoped chat generation streamed over SSE, diagram
retrieval, version history with restore, and provider/layout settings.

SSE events per generation, in order: ``text``* then at most one ``phase``,
at most one ``repair``, then exactly one of ``diagram``/``error``, then
``done``. Every successful round appends exactly one history version.
"""

from __future__ import annotations

import base64
import binascii
import json
import secrets
import threading
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Iterator, Literal

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response, StreamingResponse
from pydantic import BaseModel, Field

from .history import HistoryStore, Origin, UnknownVersion
from .layout import LayoutConfig, Orientation
from .model import new_empty_diagram
from .pipeline import run_generation
from .prompts import ChatTurn, PromptConfig, Role, load_default_examples
from .provider import ProviderConfig, ProviderError, ProviderKind, make_provider
from .xml_codec import check_wellformed, parse

SESSIONS_SUBDIR = "sessions"


# ---------------------------------------------------------------------------
# Settings models (the PUT /api/settings validation boundary)
# ---------------------------------------------------------------------------

class ProviderSettings(BaseModel):
    kind: Literal["mock", "http"] = "mock"
    endpoint_url: str = ""
    api_key_env_var_name: str = "DRAWGEN_API_KEY"
    model_id: str = "default"
    max_output_tokens: int = Field(default=4000, gt=0)
    temperature: float = Field(default=0.2, ge=0.0, le=1.0)
    script_path: str = ""

    def to_config(self) -> ProviderConfig:
        return ProviderConfig(
            kind=ProviderKind(self.kind),
            endpoint_url=self.endpoint_url,
            api_key_env_var_name=self.api_key_env_var_name,
            model_id=self.model_id,
            max_output_tokens=self.max_output_tokens,
            temperature=self.temperature,
            script_path=self.script_path,
        )


class LayoutSettings(BaseModel):
    orientation: Literal["horizontal", "vertical"] = "horizontal"
    node_gap: float = Field(default=60, gt=0)
    layer_gap: float = Field(default=120, gt=0)
    default_width: float = Field(default=120, gt=0)
    default_height: float = Field(default=60, gt=0)

    def to_config(self) -> LayoutConfig:
        return LayoutConfig(
            orientation=Orientation(self.orientation),
            node_gap=self.node_gap,
            layer_gap=self.layer_gap,
            default_width=self.default_width,
            default_height=self.default_height,
        )


class ServiceSettings(BaseModel):
    provider: ProviderSettings = Field(default_factory=ProviderSettings)
    layout: LayoutSettings = Field(default_factory=LayoutSettings)
    token_budget: int = Field(default=8000, gt=0)

    def prompt_config(self) -> PromptConfig:
        return PromptConfig(
            alignment=Orientation(self.layout.orientation), token_budget=self.token_budget
        )


class ChatRequest(BaseModel):
    text: str = ""
    image: str | None = None  # base64-encoded attachment


@dataclass
class ServiceConfig:
    data_dir: Path | None = None
    session_limit: int = 100
    ui_origin: str = "*"
    settings: ServiceSettings = dataclass_field(default_factory=ServiceSettings)


# ---------------------------------------------------------------------------
# Session registry
# ---------------------------------------------------------------------------

@dataclass
class Session:
    id: str
    store: HistoryStore
    chat_history: list[ChatTurn] = dataclass_field(default_factory=list)
    lock: threading.Lock = dataclass_field(default_factory=threading.Lock)
    active: bool = False
    stop_event: threading.Event = dataclass_field(default_factory=threading.Event)


class _State:
    def __init__(self, config: ServiceConfig) -> None:
        self.config = config
        self.settings = config.settings
        self.settings_lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self.sessions_lock = threading.Lock()
        self.examples = load_default_examples()
        self.last_provider = None  # most recent provider handle, for tests
        self.last_provider_config: ProviderConfig | None = None
        if config.data_dir is not None:
            self._recover_sessions()

    def _session_dir(self, session_id: str) -> Path | None:
        if self.config.data_dir is None:
            return None
        return self.config.data_dir / SESSIONS_SUBDIR / session_id

    def _recover_sessions(self) -> None:
        base = self.config.data_dir / SESSIONS_SUBDIR  # type: ignore[operator]
        if not base.is_dir():
            return
        for entry in sorted(base.iterdir()):
            if entry.is_dir():
                self.sessions[entry.name] = Session(
                    id=entry.name, store=HistoryStore.load(entry)
                )

    def create_session(self) -> Session:
        with self.sessions_lock:
            if len(self.sessions) >= self.config.session_limit:
                raise HTTPException(status_code=503, detail="session limit reached")
            session_id = secrets.token_urlsafe(32)
            store = HistoryStore(self._session_dir(session_id))
            store.append(new_empty_diagram(), summary="initial version", origin=Origin.IMPORT)
            session = Session(id=session_id, store=store)
            self.sessions[session_id] = session
            return session

    def session(self, session_id: str) -> Session:
        found = self.sessions.get(session_id)
        if found is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return found


def _sse(event: str, payload: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(payload)}\n\n"


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    if config.data_dir is not None:
        config.data_dir.mkdir(parents=True, exist_ok=True)
    state = _State(config)
    app = FastAPI(title="drawgen", version="0.1.0")
    app.state.drawgen = state
    if config.ui_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[config.ui_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.post("/api/sessions", status_code=201)
    def create_session() -> dict:
        session = state.create_session()
        return {"session_id": session.id}

    @app.get("/api/sessions/{session_id}/diagram")
    def get_diagram(session_id: str) -> Response:
        session = state.session(session_id)
        head = session.store.head()
        assert head is not None  # sessions always start at version 0
        return Response(content=head.xml_snapshot, media_type="application/xml")

    @app.post("/api/sessions/{session_id}/diagram", status_code=201)
    def import_diagram(session_id: str, body: dict) -> dict:
        session = state.session(session_id)
        xml = body.get("xml") if isinstance(body, dict) else None
        if not isinstance(xml, str):
            raise HTTPException(status_code=422, detail="body must carry an 'xml' string")
        issues = check_wellformed(xml)
        if issues:
            raise HTTPException(status_code=422, detail=[str(i) for i in issues])
        version = session.store.append(parse(xml), origin=Origin.IMPORT)
        return {"version": version}

    @app.get("/api/sessions/{session_id}/history")
    def get_history(session_id: str) -> dict:
        session = state.session(session_id)
        return {
            "entries": [
                {
                    "version": version,
                    "timestamp": timestamp.isoformat(),
                    "summary": summary,
                    "origin": origin.value,
                }
                for version, timestamp, summary, origin in session.store.log()
            ]
        }

    @app.post("/api/sessions/{session_id}/history/{version}/restore")
    def restore_version(session_id: str, version: int) -> dict:
        session = state.session(session_id)
        try:
            new_version = session.store.restore(version)
        except UnknownVersion:
            raise HTTPException(status_code=404, detail="unknown version")
        return {"version": new_version, "xml": session.store.head().xml_snapshot}

    @app.get("/api/settings")
    def get_settings() -> ServiceSettings:
        with state.settings_lock:
            return state.settings

    @app.put("/api/settings")
    def put_settings(settings: ServiceSettings) -> ServiceSettings:
        try:
            settings.provider.to_config()
            settings.layout.to_config()
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        with state.settings_lock:
            state.settings = settings
        return settings

    @app.post("/api/sessions/{session_id}/chat")
    def chat(session_id: str, body: ChatRequest) -> StreamingResponse:
        session = state.session(session_id)
        image: bytes | None = None
        if body.image is not None:
            try:
                image = base64.b64decode(body.image, validate=True)
            except (binascii.Error, ValueError):
                raise HTTPException(status_code=422, detail="image is not valid base64")
            if not image:
                raise HTTPException(status_code=422, detail="image attachment is empty")
        if not body.text and image is None:
            raise HTTPException(status_code=422, detail="text or image is required")

        with session.lock:
            if session.active:
                raise HTTPException(status_code=409, detail="generation already active")
            session.active = True
            session.stop_event = threading.Event()

        with state.settings_lock:
            settings = state.settings
        try:
            provider = make_provider(settings.provider.to_config())
            provider.check_ready()
        except (ProviderError, OSError, ValueError) as exc:
            with session.lock:
                session.active = False
            raise HTTPException(status_code=502, detail=f"provider unavailable: {exc}")
        state.last_provider = provider
        state.last_provider_config = settings.provider.to_config()

        def event_source() -> Iterator[str]:
            try:
                head = session.store.head()
                current = parse(head.xml_snapshot) if head else None
                generation = run_generation(
                    provider,
                    body.text,
                    image=image,
                    chat_history=list(session.chat_history),
                    current_diagram=current,
                    examples=state.examples,
                    prompt_cfg=settings.prompt_config(),
                    layout_cfg=settings.layout.to_config(),
                    stop_event=session.stop_event,
                )
                while True:
                    try:
                        event, payload = next(generation)
                    except StopIteration as stop_iter:
                        result = stop_iter.value
                        break
                    yield _sse(event, payload)

                version = None
                if result.status == "ok":
                    version = session.store.append(result.diagram, origin=Origin.USER_PROMPT)
                    session.chat_history.append(ChatTurn(Role.USER, body.text or "(image)"))
                    session.chat_history.append(ChatTurn(Role.ASSISTANT, result.xml))
                    yield _sse("diagram", {"xml": result.xml, "version": version})
                elif result.status == "error":
                    yield _sse(
                        "error",
                        {
                            "message": result.error or "generation failed",
                            "kind": result.error_kind,
                        },
                    )
                yield _sse(
                    "done",
                    {
                        "status": result.status,
                        "correction_iterations": result.correction_iterations,
                        "version": version,
                        "tokens": {
                            "input": result.input_tokens,
                            "output": result.output_tokens,
                        },
                    },
                )
            finally:
                provider.close()
                with session.lock:
                    session.active = False

        return StreamingResponse(event_source(), media_type="text/event-stream")

    @app.delete("/api/sessions/{session_id}/chat")
    def stop_chat(session_id: str) -> dict:
        session = state.session(session_id)
        with session.lock:
            if not session.active:
                raise HTTPException(status_code=404, detail="no active generation")
            session.stop_event.set()
        return {"status": "stopping"}

    return app
