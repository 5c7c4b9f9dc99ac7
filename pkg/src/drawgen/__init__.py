"""drawgen: chat-driven draw.io diagram generation.

Natural-language requests become valid, editable draw.io XML through an
LLM provider, a validation-and-correction pipeline, two-phase streaming,
semantic verification, auto-layout and versioned history.
"""

from .model import (
    Cell,
    CellKind,
    Diagram,
    DiagramDiff,
    Geometry,
    add_edge,
    add_vertex,
    diff,
    integrity_check,
    new_empty_diagram,
)
from .xml_codec import ParseFailure, ParseIssue, check_wellformed, parse, serialize

__version__ = "0.1.0"

__all__ = [
    "Cell",
    "CellKind",
    "Diagram",
    "DiagramDiff",
    "Geometry",
    "ParseFailure",
    "ParseIssue",
    "add_edge",
    "add_vertex",
    "check_wellformed",
    "diff",
    "integrity_check",
    "new_empty_diagram",
    "parse",
    "serialize",
    "__version__",
]
