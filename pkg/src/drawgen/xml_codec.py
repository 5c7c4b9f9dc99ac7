"""Parse draw.io XML into Diagram values and serialize them back.

Parsing accepts both the full ``<mxfile><diagram>...`` wrapper and a bare
``<mxGraphModel>`` (the wrapper is synthesized). Serialization is
canonical: fixed attribute order, 2-space indentation, the five
predefined entities escaped in attribute values, and byte-identical
output for equal diagrams, so ``parse(serialize(d)) == d`` and
``serialize(parse(text))`` is a fixpoint.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from enum import Enum

from .model import (
    LAYER_ID,
    ROOT_ID,
    Cell,
    CellKind,
    Diagram,
    Geometry,
    ViolationKind,
    integrity_check,
)

DEFAULT_DIAGRAM_NAME = "Page-1"

# Fixed mxGraphModel attributes (the model carries no canvas settings).
_MODEL_ATTRS = 'dx="800" dy="600" grid="1" gridSize="10"'


class ParseIssueKind(Enum):
    NOT_WELLFORMED = "NotWellFormed"
    MISSING_ROOT_MODEL = "MissingRootModel"
    MISSING_SKELETON = "MissingSkeleton"
    BAD_ATTRIBUTE = "BadAttribute"


@dataclass(frozen=True)
class ParseIssue:
    kind: ParseIssueKind
    message: str
    location: tuple[int, int] | None = None  # (line, column), tokenizer issues only

    def __str__(self) -> str:
        where = f" at {self.location[0]}:{self.location[1]}" if self.location else ""
        return f"{self.kind.value}{where}: {self.message}"


class ParseFailure(ValueError):
    """Raised by parse(); carries every issue found (never partial success)."""

    def __init__(self, issues: list[ParseIssue]) -> None:
        super().__init__("; ".join(str(i) for i in issues))
        self.issues = issues


class IntegrityViolation(ValueError):
    """serialize() precondition failure: the diagram flunks integrity_check."""

    def __init__(self, violations) -> None:
        super().__init__(", ".join(v.detail or v.subject for v in violations))
        self.violations = violations


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse(text: str) -> Diagram:
    """Parse draw.io XML text into a Diagram; raises ParseFailure on any issue."""
    diagram, issues = _parse_document(text)
    if issues:
        raise ParseFailure(issues)
    assert diagram is not None
    return diagram


def check_wellformed(text: str) -> list[ParseIssue]:
    """Structural-validity predicate: empty list iff text parses into a Diagram.

    Well-formed XML containing an mxGraphModel with the 0/1 skeleton and
    sane cell attributes. This is the validity check used by the bench.
    """
    _, issues = _parse_document(text)
    return issues


def _parse_document(text: str) -> tuple[Diagram | None, list[ParseIssue]]:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position if exc.position else (0, 0)
        return None, [
            ParseIssue(ParseIssueKind.NOT_WELLFORMED, exc.msg.split(":")[0], (line, column))
        ]
    except Exception as exc:  # defensive: expat chokes on some byte soups
        return None, [ParseIssue(ParseIssueKind.NOT_WELLFORMED, str(exc))]

    name = DEFAULT_DIAGRAM_NAME
    if root.tag == "mxfile":
        diagram_el = root.find("diagram")
        if diagram_el is None:
            return None, [
                ParseIssue(ParseIssueKind.MISSING_ROOT_MODEL, "mxfile has no diagram element")
            ]
        name = diagram_el.get("name", DEFAULT_DIAGRAM_NAME)
        model_el = diagram_el.find("mxGraphModel")
        if model_el is None:
            if (diagram_el.text or "").strip():
                msg = "diagram payload is not plain XML (compressed payloads are not supported)"
            else:
                msg = "diagram element has no mxGraphModel"
            return None, [ParseIssue(ParseIssueKind.MISSING_ROOT_MODEL, msg)]
    elif root.tag == "mxGraphModel":
        model_el = root
    else:
        return None, [
            ParseIssue(
                ParseIssueKind.MISSING_ROOT_MODEL, f"expected mxfile or mxGraphModel, got {root.tag}"
            )
        ]

    root_el = model_el.find("root")
    if root_el is None:
        return None, [ParseIssue(ParseIssueKind.MISSING_SKELETON, "mxGraphModel has no root element")]

    issues: list[ParseIssue] = []
    cells: list[Cell] = []
    for child in root_el:
        if child.tag != "mxCell":
            # Unknown element: preserve verbatim on the nearest (preceding) cell.
            if not cells:
                issues.append(
                    ParseIssue(
                        ParseIssueKind.BAD_ATTRIBUTE,
                        f"unsupported element <{child.tag}> before the first cell",
                    )
                )
                continue
            last = cells[-1]
            cells[-1] = _with_trailing(last, _verbatim(child))
            continue
        cell = _parse_cell(child, issues)
        if cell is not None:
            cells.append(cell)

    ids = {c.id for c in cells}
    if ROOT_ID not in ids or LAYER_ID not in ids:
        issues.append(
            ParseIssue(ParseIssueKind.MISSING_SKELETON, "skeleton cells '0' and '1' are required")
        )
    diagram = Diagram(name=name, cells=tuple(cells), revision=0)
    if not issues:
        # A Diagram handed out by parse must satisfy the structural
        # invariants end to end (serialize requires them).
        for violation in integrity_check(diagram):
            kind = (
                ParseIssueKind.MISSING_SKELETON
                if violation.kind is ViolationKind.MISSING_SKELETON
                else ParseIssueKind.BAD_ATTRIBUTE
            )
            issues.append(ParseIssue(kind, violation.detail or violation.subject))
    if issues:
        return None, issues
    return diagram, []


def _parse_cell(el: ET.Element, issues: list[ParseIssue]) -> Cell | None:
    cell_id = el.get("id", "")
    if not cell_id:
        issues.append(ParseIssue(ParseIssueKind.BAD_ATTRIBUTE, "mxCell without id"))
        return None

    is_vertex = el.get("vertex") == "1"
    is_edge = el.get("edge") == "1"
    parent = el.get("parent") or None
    if is_vertex and is_edge:
        issues.append(
            ParseIssue(ParseIssueKind.BAD_ATTRIBUTE, f"cell '{cell_id}' is both vertex and edge")
        )
        return None
    if is_vertex:
        kind = CellKind.VERTEX
    elif is_edge:
        kind = CellKind.EDGE
    elif cell_id == ROOT_ID and parent is None:
        kind = CellKind.ROOT
    elif parent == ROOT_ID:
        kind = CellKind.LAYER
    else:
        issues.append(
            ParseIssue(
                ParseIssueKind.BAD_ATTRIBUTE,
                f"cell '{cell_id}' is neither vertex, edge, root nor layer",
            )
        )
        return None

    geometry: Geometry | None = None
    annotations: list[str] = []
    for child in el:
        if child.tag == "mxGeometry" and geometry is None:
            geometry = _parse_geometry(child, cell_id, kind, issues)
        else:
            annotations.append(_verbatim(child))

    return Cell(
        id=cell_id,
        label=el.get("value", ""),
        style=el.get("style", ""),
        kind=kind,
        parent_id=parent,
        geometry=geometry,
        source_id=el.get("source") or None,
        target_id=el.get("target") or None,
        annotations=tuple(annotations),
    )


def _parse_geometry(
    el: ET.Element, cell_id: str, kind: CellKind, issues: list[ParseIssue]
) -> Geometry | None:
    values: dict[str, float] = {}
    for attr in ("x", "y", "width", "height"):
        raw = el.get(attr)
        if raw is None:
            values[attr] = 0.0
            continue
        try:
            values[attr] = float(raw)
        except ValueError:
            issues.append(
                ParseIssue(
                    ParseIssueKind.BAD_ATTRIBUTE,
                    f"cell '{cell_id}' geometry {attr}='{raw}' is not a number",
                )
            )
            return None
    relative = el.get("relative") == "1"
    if kind is CellKind.VERTEX and not relative and (values["width"] <= 0 or values["height"] <= 0):
        issues.append(
            ParseIssue(
                ParseIssueKind.BAD_ATTRIBUTE,
                f"vertex '{cell_id}' geometry needs positive width and height",
            )
        )
        return None
    return Geometry(
        x=values["x"], y=values["y"], width=values["width"], height=values["height"],
        relative=relative,
    )


def _verbatim(el: ET.Element) -> str:
    # Deterministic single-line form; attribute order is preserved by ET.
    clone = _strip_whitespace(el)
    return ET.tostring(clone, encoding="unicode")


def _strip_whitespace(el: ET.Element) -> ET.Element:
    clone = ET.Element(el.tag, dict(el.attrib))
    clone.text = el.text.strip() if el.text and el.text.strip() else None
    for child in el:
        clone.append(_strip_whitespace(child))
    return clone


def _with_trailing(cell: Cell, fragment: str) -> Cell:
    from dataclasses import replace

    return replace(cell, trailing=cell.trailing + (fragment,))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_ESCAPES = [
    ("&", "&amp;"),
    ("<", "&lt;"),
    (">", "&gt;"),
    ('"', "&quot;"),
    ("'", "&apos;"),
]


def escape_attribute(value: str) -> str:
    """Escape the five predefined XML entities for use in an attribute value.

    Tab/newline/carriage-return become character references so they survive
    the parser's attribute-value whitespace normalization.
    """
    for raw, entity in _ESCAPES:
        value = value.replace(raw, entity)
    return value.replace("\t", "&#9;").replace("\n", "&#10;").replace("\r", "&#13;")


def _num(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def serialize(d: Diagram) -> str:
    """Canonical XML for a diagram; requires integrity_check(d) == []."""
    violations = integrity_check(d)
    if violations:
        raise IntegrityViolation(violations)

    lines = [
        "<mxfile>",
        f'  <diagram name="{escape_attribute(d.name)}">',
        f"    <mxGraphModel {_MODEL_ATTRS}>",
        "      <root>",
    ]
    for cell in d.cells:
        lines.extend(_cell_lines(cell, indent=8))
    lines += [
        "      </root>",
        "    </mxGraphModel>",
        "  </diagram>",
        "</mxfile>",
        "",
    ]
    return "\n".join(lines)


def _cell_lines(cell: Cell, indent: int) -> list[str]:
    pad = " " * indent
    attrs = [f'id="{escape_attribute(cell.id)}"']
    if cell.label:
        attrs.append(f'value="{escape_attribute(cell.label)}"')
    if cell.style:
        attrs.append(f'style="{escape_attribute(cell.style)}"')
    if cell.kind is CellKind.VERTEX:
        attrs.append('vertex="1"')
    elif cell.kind is CellKind.EDGE:
        attrs.append('edge="1"')
    if cell.parent_id is not None:
        attrs.append(f'parent="{escape_attribute(cell.parent_id)}"')
    if cell.source_id is not None:
        attrs.append(f'source="{escape_attribute(cell.source_id)}"')
    if cell.target_id is not None:
        attrs.append(f'target="{escape_attribute(cell.target_id)}"')
    open_tag = f"{pad}<mxCell {' '.join(attrs)}"

    children: list[str] = []
    if cell.geometry is not None:
        children.append(f"{pad}  {_geometry_line(cell.geometry)}")
    for fragment in cell.annotations:
        children.append(f"{pad}  {fragment}")

    lines: list[str] = []
    if children:
        lines.append(open_tag + ">")
        lines.extend(children)
        lines.append(f"{pad}</mxCell>")
    else:
        lines.append(open_tag + " />")
    for fragment in cell.trailing:
        lines.append(f"{pad}{fragment}")
    return lines


def _geometry_line(g: Geometry) -> str:
    parts: list[str] = []
    if g.relative:
        if g.x:
            parts.append(f'x="{_num(g.x)}"')
        if g.y:
            parts.append(f'y="{_num(g.y)}"')
        if g.width:
            parts.append(f'width="{_num(g.width)}"')
        if g.height:
            parts.append(f'height="{_num(g.height)}"')
        parts.append('relative="1"')
    else:
        parts.append(f'x="{_num(g.x)}"')
        parts.append(f'y="{_num(g.y)}"')
        parts.append(f'width="{_num(g.width)}"')
        parts.append(f'height="{_num(g.height)}"')
    return f"<mxGeometry {' '.join(parts)} as=\"geometry\" />"
