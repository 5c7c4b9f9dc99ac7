"""Two-phase streaming: accumulate tokens, detect a complete XML response,
then hand over a parsed diagram for the visual phase.

Completion is detected incrementally: once an mxfile/mxGraphModel root tag
has been seen and the open-tag depth returns to zero at a tag boundary the
machine attempts validation early (at most once); the provider's final
chunk is the authoritative fallback. The scanner ignores quoted attribute
values and comments; the validator owns the final judgment.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from .model import Diagram
from .provider import TokenChunk
from .validator import CorrectionOutcome, CorrectionStatus, validate_and_correct
from .xml_codec import parse


class FedAfterTerminal(RuntimeError):
    """feed()/stop() called on a machine already in a terminal phase."""


class Phase(Enum):
    TEXTUAL = "textual"
    VISUAL = "visual"
    FAILED = "failed"
    STOPPED = "stopped"


class StreamEventKind(Enum):
    TEXT_APPENDED = "text_appended"
    PHASE_TRANSITION = "phase_transition"
    DIAGRAM_READY = "diagram_ready"
    REPAIR_APPLIED = "repair_applied"
    ERROR = "error"
    STOPPED = "stopped"


@dataclass(frozen=True)
class StreamEvent:
    kind: StreamEventKind
    text: str = ""
    diagram: Diagram | None = None
    outcome: CorrectionOutcome | None = None


_ROOT_NAMES = ("mxfile", "mxGraphModel")
_NAME_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.:")


@dataclass(frozen=True)
class _ScanState:
    """Incremental tag scanner state, safe to resume across chunk splits."""

    mode: str = "text"  # text | lt | open | close | quote | bang1 | bang2 | bangother | comment | pi
    name: str = ""
    in_name: bool = False
    quote_char: str = ""
    had_slash: bool = False
    tail: str = ""  # rolling lookbehind for --> and ?>
    depth: int = 0
    root_seen: bool = False


def _scan(state: _ScanState, fragment: str) -> tuple[_ScanState, bool]:
    mode = state.mode
    name = state.name
    in_name = state.in_name
    quote_char = state.quote_char
    had_slash = state.had_slash
    tail = state.tail
    depth = state.depth
    root_seen = state.root_seen
    completed = False

    for ch in fragment:
        if mode == "text":
            if ch == "<":
                mode = "lt"
        elif mode == "lt":
            if ch == "/":
                mode, name = "close", ""
            elif ch == "!":
                mode = "bang1"
            elif ch == "?":
                mode, tail = "pi", ""
            elif ch.isalpha() or ch == "_":
                mode, name, in_name, had_slash = "open", ch, True, False
            elif ch == "<":
                pass  # stay; previous < was stray text
            else:
                mode = "text"
        elif mode == "open":
            if ch in "\"'":
                mode, quote_char, in_name, had_slash = "quote", ch, False, False
            elif ch == ">":
                is_root = name in _ROOT_NAMES
                starting = is_root and not root_seen
                if starting:
                    root_seen = True
                if root_seen and (starting or depth > 0):
                    if had_slash:
                        if starting and depth == 0:
                            completed = True
                    else:
                        depth += 1
                mode = "text"
            elif ch == "/":
                had_slash, in_name = True, False
            elif ch.isspace():
                in_name = False
            else:
                had_slash = False
                if in_name and ch in _NAME_CHARS:
                    name += ch
                else:
                    in_name = False
        elif mode == "quote":
            if ch == quote_char:
                mode = "open"
        elif mode == "close":
            if ch == ">":
                if root_seen and depth > 0:
                    depth -= 1
                    if depth == 0:
                        completed = True
                mode = "text"
            elif ch in _NAME_CHARS:
                name += ch
        elif mode == "bang1":
            mode = "bang2" if ch == "-" else ("text" if ch == ">" else "bangother")
        elif mode == "bang2":
            if ch == "-":
                mode, tail = "comment", ""
            elif ch == ">":
                mode = "text"
            else:
                mode = "bangother"
        elif mode == "comment":
            tail = (tail + ch)[-3:]
            if tail.endswith("-->"):
                mode = "text"
        elif mode == "bangother":
            if ch == ">":
                mode = "text"
        elif mode == "pi":
            tail = (tail + ch)[-2:]
            if tail.endswith("?>"):
                mode = "text"

    new_state = _ScanState(
        mode=mode,
        name=name,
        in_name=in_name,
        quote_char=quote_char,
        had_slash=had_slash,
        tail=tail,
        depth=depth,
        root_seen=root_seen,
    )
    return new_state, completed


@dataclass(frozen=True)
class StreamState:
    phase: Phase = Phase.TEXTUAL
    buffer: str = ""
    open_tag_depth: int = 0
    root_tag_seen: bool = False
    early_attempted: bool = False
    scan: _ScanState = field(default_factory=_ScanState)


def feed(state: StreamState, chunk: TokenChunk) -> tuple[StreamState, list[StreamEvent]]:
    """Append a chunk, emit TextAppended, and on completion run validation:
    success yields PhaseTransition (+ RepairApplied) + DiagramReady; residual
    failure at the final chunk yields Error."""
    if state.phase is not Phase.TEXTUAL:
        raise FedAfterTerminal(f"cannot feed a machine in phase {state.phase.value}")

    buffer = state.buffer + chunk.text
    scan_state, completed = _scan(state.scan, chunk.text)
    events: list[StreamEvent] = []
    if chunk.text:
        events.append(StreamEvent(StreamEventKind.TEXT_APPENDED, text=chunk.text))

    phase = Phase.TEXTUAL
    early_attempted = state.early_attempted
    attempt_early = completed and not early_attempted and not chunk.is_final
    if chunk.is_final or attempt_early:
        outcome = validate_and_correct(buffer)
        if outcome.ok():
            diagram = parse(outcome.xml)
            events.append(StreamEvent(StreamEventKind.PHASE_TRANSITION))
            if outcome.status is CorrectionStatus.REPAIRED_LOCALLY:
                events.append(StreamEvent(StreamEventKind.REPAIR_APPLIED, outcome=outcome))
            events.append(
                StreamEvent(StreamEventKind.DIAGRAM_READY, diagram=diagram, outcome=outcome)
            )
            phase = Phase.VISUAL
        elif chunk.is_final:
            events.append(StreamEvent(StreamEventKind.ERROR, outcome=outcome))
            phase = Phase.FAILED
        else:
            early_attempted = True  # keep accumulating until the final chunk

    new_state = StreamState(
        phase=phase,
        buffer=buffer,
        open_tag_depth=scan_state.depth,
        root_tag_seen=scan_state.root_seen,
        early_attempted=early_attempted,
        scan=scan_state,
    )
    return new_state, events


def stop(state: StreamState) -> tuple[StreamState, list[StreamEvent]]:
    """User stop: keep the partial buffer for display, produce no diagram.
    The caller must cancel the provider stream."""
    if state.phase is not Phase.TEXTUAL:
        raise FedAfterTerminal(f"cannot stop a machine in phase {state.phase.value}")
    return replace(state, phase=Phase.STOPPED), [StreamEvent(StreamEventKind.STOPPED)]
