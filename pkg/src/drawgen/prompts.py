"""Prompt assembly: system prompt, few-shot examples, per-turn context.

The system prompt and the bundled request/answer example pairs live as
data files next to this module. Token estimates are character-based
(ceil(chars / 4)) so budgets stay provider-independent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .layout import Orientation
from .verifier import RequirementSpec
from .xml_codec import check_wellformed, serialize
from .model import Diagram

DIAGRAM_CONTEXT_BEGIN = "-----BEGIN CURRENT DIAGRAM-----"
DIAGRAM_CONTEXT_END = "-----END CURRENT DIAGRAM-----"

IMAGE_DESCRIPTION_INSTRUCTION = (
    "Analyze the given diagram image and describe all the components "
    "(with their labels) and connections between them."
)

_DESCRIPTION_SYSTEM_PROMPT = (
    "You are a diagram analyst. Reply with a plain-text enumeration only: "
    "one line per component giving its label, then one line per connection "
    "in the form label -> label. No headings, no numbering, no other text."
)

_ARROW = "->"
_BULLET_RE = re.compile(r"^\s*(?:[-*•·]|\d+[.)])\s*")


class EmptyUserText(ValueError):
    pass


class EmptyImage(ValueError):
    pass


class Role(Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatTurn:
    role: Role
    text: str
    image: bytes | None = None  # User turns only


@dataclass(frozen=True)
class FewShotExample:
    """A dummy request plus a correct XML answer, injected verbatim."""

    request: str
    response_xml: str

    def __post_init__(self) -> None:
        issues = check_wellformed(self.response_xml)
        if issues:
            raise ValueError(f"few-shot example XML is invalid: {issues[0]}")


@dataclass(frozen=True)
class PromptBundle:
    turns: tuple[ChatTurn, ...]
    token_estimate: int


@dataclass(frozen=True)
class PromptConfig:
    alignment: Orientation = Orientation.HORIZONTAL
    token_budget: int = 8000


def estimate_tokens(turns: tuple[ChatTurn, ...] | list[ChatTurn]) -> int:
    total = sum(len(t.text) for t in turns)
    return -(-total // 4)


def _bundle(turns: list[ChatTurn]) -> PromptBundle:
    return PromptBundle(turns=tuple(turns), token_estimate=estimate_tokens(turns))


def _data_text(relative: str) -> str:
    return (resources.files("drawgen") / "data" / relative).read_text(encoding="utf-8")


def build_system_prompt(cfg: PromptConfig | None = None) -> str:
    """Role definition + ground rules + minimal schema example."""
    cfg = cfg or PromptConfig()
    word = "horizontally" if cfg.alignment is Orientation.HORIZONTAL else "vertically"
    return _data_text("system_prompt.txt").format(alignment=word)


def load_default_examples() -> tuple[FewShotExample, ...]:
    """The bundled example pairs; each is validated on load."""
    pairs = []
    for stem in ("flowchart", "orgchart"):
        pairs.append(
            FewShotExample(
                request=_data_text(f"examples/{stem}.request.txt").strip(),
                response_xml=_data_text(f"examples/{stem}.response.xml"),
            )
        )
    return tuple(pairs)


def assemble(
    history: list[ChatTurn],
    current_diagram: Diagram | None,
    user_text: str,
    examples: list[FewShotExample] | tuple[FewShotExample, ...] = (),
    cfg: PromptConfig | None = None,
) -> PromptBundle:
    """System turn, example pairs, prior history, then the user turn with
    the current diagram in a delimited context block.

    Over budget, the oldest history turns are evicted first, then example
    pairs; the system turn and the final user turn always survive.
    """
    if not user_text:
        raise EmptyUserText("user text must be non-empty")
    cfg = cfg or PromptConfig()

    system = ChatTurn(Role.SYSTEM, build_system_prompt(cfg))
    example_turns: list[tuple[ChatTurn, ChatTurn]] = [
        (ChatTurn(Role.USER, ex.request), ChatTurn(Role.ASSISTANT, ex.response_xml))
        for ex in examples
    ]
    history_turns = [t for t in history if t.role is not Role.SYSTEM]

    final_text = user_text
    if current_diagram is not None:
        context = (
            "The current diagram is between the markers below; apply the request to it.\n"
            f"{DIAGRAM_CONTEXT_BEGIN}\n{serialize(current_diagram)}{DIAGRAM_CONTEXT_END}"
        )
        final_text = f"{context}\n\n{user_text}"
    final = ChatTurn(Role.USER, final_text)

    def current_turns() -> list[ChatTurn]:
        flat = [system]
        for user, assistant in example_turns:
            flat += [user, assistant]
        flat += history_turns
        flat.append(final)
        return flat

    while estimate_tokens(current_turns()) > cfg.token_budget:
        if history_turns:
            history_turns.pop(0)
        elif example_turns:
            example_turns.pop(0)
        else:
            break
    return _bundle(current_turns())


def build_image_description_prompt(image: bytes) -> PromptBundle:
    """Two turns: enumeration instructions plus the image to describe."""
    if not image:
        raise EmptyImage("image attachment must be non-empty")
    return _bundle(
        [
            ChatTurn(Role.SYSTEM, _DESCRIPTION_SYSTEM_PROMPT),
            ChatTurn(Role.USER, IMAGE_DESCRIPTION_INSTRUCTION, image=image),
        ]
    )


def parse_component_description(text: str) -> RequirementSpec:
    """Turn an enumerated description into a requirement spec.

    Lines containing ``->`` contribute edges (chains yield one edge per
    hop); other non-empty lines are component labels after bullet and
    numbering prefixes are stripped. Heading lines ending with a colon are
    ignored. Unparseable text yields an empty spec.
    """
    components: list[str] = []
    edges: list[tuple[str, str]] = []
    for raw_line in text.splitlines():
        line = _BULLET_RE.sub("", raw_line).strip()
        if not line:
            continue
        if _ARROW in line:
            hops = [part.strip() for part in line.split(_ARROW)]
            if any(not hop for hop in hops):
                continue
            for src, tgt in zip(hops, hops[1:]):
                edges.append((src, tgt))
                for label in (src, tgt):
                    if label not in components:
                        components.append(label)
        elif line.endswith(":"):
            continue  # section heading
        elif line not in components:
            components.append(line)
    return RequirementSpec(
        required_components=tuple(components), required_edges=tuple(edges)
    )


def render_description(spec: RequirementSpec) -> str:
    """Inverse of parse_component_description for arrow-free labels."""
    lines = list(spec.required_components)
    lines += [f"{src} {_ARROW} {tgt}" for src, tgt in spec.required_edges]
    return "\n".join(lines)
