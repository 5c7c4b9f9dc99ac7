"""End-to-end generation loop shared by the HTTP service and the CLI.

Drives prompt assembly, the provider stream and the streaming machine,
escalates once to a self-correction re-prompt when local repair leaves
residue, and lays out coordinate-free vertices in the result. Progress is
yielded as (event, payload) pairs that map 1:1 onto the service's SSE
events; the terminal outcome is the generator's return value.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Generator, Iterator

from .layout import LayoutConfig, layout
from .model import Diagram
from .prompts import (
    ChatTurn,
    PromptBundle,
    PromptConfig,
    FewShotExample,
    assemble,
    build_image_description_prompt,
)
from .provider import AuthError, ProviderError, TokenChunk, TransportError
from .streaming import StreamEventKind, StreamState, feed, stop as stop_machine
from .validator import CorrectionOutcome, CorrectionStatus, build_self_correction_prompt
from .xml_codec import serialize

Event = tuple[str, dict]


@dataclass
class GenerationResult:
    status: str = "error"  # ok | error | stopped
    diagram: Diagram | None = None
    xml: str | None = None
    correction_iterations: int = 0
    outcome: CorrectionOutcome | None = None
    error: str | None = None
    error_kind: str | None = None  # auth | transport | protocol | validation
    input_tokens: int = 0
    output_tokens: int = 0


def _issues_payload(outcome: CorrectionOutcome) -> dict:
    return {
        "issues": [
            {"category": i.category.value, "detail": i.detail, "repaired": i.repaired}
            for i in outcome.issues
        ],
        "passes_applied": list(outcome.passes_applied),
    }


def _error_kind(exc: ProviderError) -> str:
    if isinstance(exc, AuthError):
        return "auth"
    if isinstance(exc, TransportError):
        return "transport"
    return "protocol"


class _Stopped(Exception):
    pass


def _consume(
    stream: Iterator[TokenChunk],
    stop_event: threading.Event | None,
    result: GenerationResult,
) -> Generator[Event, None, list[TokenChunk]]:
    """Forward chunks as text events until the stream ends; collects usage."""
    chunks: list[TokenChunk] = []
    try:
        for chunk in stream:
            if stop_event is not None and stop_event.is_set():
                raise _Stopped()
            chunks.append(chunk)
            if chunk.text:
                yield ("text", {"text": chunk.text})
            if chunk.usage:
                result.input_tokens += chunk.usage[0]
                result.output_tokens += chunk.usage[1]
    finally:
        close = getattr(stream, "close", None)
        if close is not None:
            close()
    return chunks


def _machine_pass(
    provider,
    bundle: PromptBundle,
    stop_event: threading.Event | None,
    result: GenerationResult,
) -> Generator[Event, None, tuple[str, CorrectionOutcome | None, Diagram | None]]:
    """One provider round through the stream machine.

    Returns ("diagram", outcome, diagram) | ("error", outcome, None) |
    ("stopped", None, None).
    """
    state = StreamState()
    stream = provider.send(bundle)
    try:
        for chunk in stream:
            if stop_event is not None and stop_event.is_set():
                stop_machine(state)
                return ("stopped", None, None)
            if chunk.usage:
                result.input_tokens += chunk.usage[0]
                result.output_tokens += chunk.usage[1]
            state, events = feed(state, chunk)
            for event in events:
                if event.kind is StreamEventKind.TEXT_APPENDED:
                    yield ("text", {"text": event.text})
                elif event.kind is StreamEventKind.PHASE_TRANSITION:
                    yield ("phase", {"phase": "visual"})
                elif event.kind is StreamEventKind.REPAIR_APPLIED:
                    yield ("repair", _issues_payload(event.outcome))
                elif event.kind is StreamEventKind.DIAGRAM_READY:
                    return ("diagram", event.outcome, event.diagram)
                elif event.kind is StreamEventKind.ERROR:
                    return ("error", event.outcome, None)
    finally:
        close = getattr(stream, "close", None)
        if close is not None:
            close()
    return ("error", None, None)  # stream ended without a final chunk


def run_generation(
    provider,
    user_text: str,
    *,
    image: bytes | None = None,
    chat_history: list[ChatTurn] | None = None,
    current_diagram: Diagram | None = None,
    examples: tuple[FewShotExample, ...] = (),
    prompt_cfg: PromptConfig | None = None,
    layout_cfg: LayoutConfig | None = None,
    stop_event: threading.Event | None = None,
) -> Generator[Event, None, GenerationResult]:
    """Run one chat round; yields SSE-shaped events, returns the outcome."""
    prompt_cfg = prompt_cfg or PromptConfig()
    result = GenerationResult()
    try:
        generation_text = user_text
        if image is not None:
            describe_bundle = build_image_description_prompt(image)
            chunks = yield from _consume(provider.send(describe_bundle), stop_event, result)
            description = "".join(c.text for c in chunks)
            generation_text = _compose_replication_request(user_text, description)

        bundle = assemble(
            chat_history or [], current_diagram, generation_text, examples, prompt_cfg
        )
        kind, outcome, diagram = yield from _machine_pass(provider, bundle, stop_event, result)

        if (
            kind == "error"
            and outcome is not None
            and outcome.status is CorrectionStatus.NEEDS_REPROMPT
        ):
            result.correction_iterations = 1
            retry = build_self_correction_prompt(outcome.xml or "", outcome.issues, prompt_cfg)
            kind, outcome, diagram = yield from _machine_pass(provider, retry, stop_event, result)

        if kind == "stopped":
            result.status = "stopped"
        elif kind == "diagram":
            assert diagram is not None
            laid_out = layout(diagram, layout_cfg or LayoutConfig())
            result.status = "ok"
            result.diagram = laid_out
            result.xml = serialize(laid_out)
            result.outcome = outcome
        else:
            result.status = "error"
            result.outcome = outcome
            result.error_kind = "validation"
            if outcome is not None and outcome.issues:
                result.error = "; ".join(i.detail for i in outcome.issues)
            else:
                result.error = "provider stream ended without a final chunk"
    except _Stopped:
        result.status = "stopped"
    except ProviderError as exc:
        result.status = "error"
        result.error = str(exc)
        result.error_kind = _error_kind(exc)
    return result


def _compose_replication_request(user_text: str, description: str) -> str:
    request = (
        "Create a draw.io diagram with exactly these components and connections:\n"
        + description.strip()
    )
    if user_text.strip():
        request = f"{user_text.strip()}\n\n{request}"
    return request
