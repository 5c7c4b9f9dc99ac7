"""Typed in-memory model of a draw.io diagram.

A diagram is an ordered list of cells: the two mandatory skeleton cells
(root "0" and its default layer "1"), then vertices and edges. Diagram
values are immutable snapshots; every operation is copy-on-write and
leaves its input untouched, so snapshots can be shared freely between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

ROOT_ID = "0"
LAYER_ID = "1"


class InvalidGeometry(ValueError):
    """Vertex geometry with non-positive width or height."""


class UnknownEndpoint(LookupError):
    """Edge endpoint id that names no vertex in the diagram."""

    def __init__(self, endpoint_id: str) -> None:
        super().__init__(endpoint_id)
        self.endpoint_id = endpoint_id


class CellKind(Enum):
    ROOT = "root"
    LAYER = "layer"
    VERTEX = "vertex"
    EDGE = "edge"


@dataclass(frozen=True)
class Geometry:
    """Position and size in canvas units (draw.io pixels).

    Vertices require positive width/height; edges carry a degenerate
    geometry marked ``relative`` (draw.io convention).
    """

    x: float = 0.0
    y: float = 0.0
    width: float = 0.0
    height: float = 0.0
    relative: bool = False


EDGE_GEOMETRY = Geometry(relative=True)


@dataclass(frozen=True)
class Cell:
    """A single diagram element: root, layer, vertex or edge."""

    id: str
    label: str = ""
    style: str = ""
    kind: CellKind = CellKind.VERTEX
    parent_id: str | None = None
    geometry: Geometry | None = None
    source_id: str | None = None
    target_id: str | None = None
    # Verbatim XML of unknown child elements, re-emitted inside this cell.
    annotations: tuple[str, ...] = ()
    # Verbatim XML of unknown sibling elements, re-emitted after this cell.
    trailing: tuple[str, ...] = ()


@dataclass(frozen=True)
class Diagram:
    """An ordered, immutable collection of cells plus a tab name.

    ``revision`` counts construction steps and is excluded from equality:
    two diagrams are equal when their names and cell lists match.
    """

    name: str = "Page-1"
    cells: tuple[Cell, ...] = ()
    revision: int = field(default=0, compare=False)

    def cell(self, cell_id: str) -> Cell:
        for c in self.cells:
            if c.id == cell_id:
                return c
        raise KeyError(cell_id)

    def vertices(self) -> list[Cell]:
        return [c for c in self.cells if c.kind is CellKind.VERTEX]

    def edges(self) -> list[Cell]:
        return [c for c in self.cells if c.kind is CellKind.EDGE]


def new_empty_diagram(name: str = "Page-1") -> Diagram:
    """Canonical skeleton: root cell "0" and default layer "1"."""
    root = Cell(id=ROOT_ID, kind=CellKind.ROOT)
    layer = Cell(id=LAYER_ID, kind=CellKind.LAYER, parent_id=ROOT_ID)
    return Diagram(name=name, cells=(root, layer), revision=0)


def fresh_id(d: Diagram) -> str:
    """Next free decimal id: (max numeric id) + 1, never below 2.

    Non-numeric ids (imported from hand-written XML) are ignored here and
    never collide with generated ids.
    """
    highest = 1
    for c in d.cells:
        try:
            highest = max(highest, int(c.id))
        except ValueError:
            continue
    return str(highest + 1)


def add_vertex(d: Diagram, label: str, style: str, g: Geometry) -> tuple[Diagram, str]:
    """Append a vertex parented to the default layer; returns (diagram, id)."""
    if g.width <= 0 or g.height <= 0:
        raise InvalidGeometry(f"vertex needs positive size, got {g.width}x{g.height}")
    cid = fresh_id(d)
    cell = Cell(
        id=cid,
        label=label,
        style=style,
        kind=CellKind.VERTEX,
        parent_id=LAYER_ID,
        geometry=replace(g, relative=False),
    )
    return Diagram(name=d.name, cells=d.cells + (cell,), revision=d.revision + 1), cid


def add_edge(
    d: Diagram, source_id: str, target_id: str, label: str = "", style: str = ""
) -> tuple[Diagram, str]:
    """Append an edge between two existing vertices; returns (diagram, id)."""
    vertex_ids = {c.id for c in d.cells if c.kind is CellKind.VERTEX}
    for endpoint in (source_id, target_id):
        if endpoint not in vertex_ids:
            raise UnknownEndpoint(endpoint)
    cid = fresh_id(d)
    cell = Cell(
        id=cid,
        label=label,
        style=style,
        kind=CellKind.EDGE,
        parent_id=LAYER_ID,
        geometry=EDGE_GEOMETRY,
        source_id=source_id,
        target_id=target_id,
    )
    return Diagram(name=d.name, cells=d.cells + (cell,), revision=d.revision + 1), cid


# ---------------------------------------------------------------------------
# Integrity checking
# ---------------------------------------------------------------------------

class ViolationKind(Enum):
    MISSING_SKELETON = "missing_skeleton"
    DUPLICATE_ID = "duplicate_id"
    ORPHAN_PARENT = "orphan_parent"
    CHILD_BEFORE_PARENT = "child_before_parent"


@dataclass(frozen=True)
class Violation:
    """One structural invariant violation. ``subject`` is the offending id."""

    kind: ViolationKind
    subject: str
    detail: str = ""


def integrity_check(d: Diagram) -> list[Violation]:
    """Every structural invariant violation; empty iff the diagram is well-formed.

    Checks the canonical 0/1 skeleton, id uniqueness, parent existence and
    parents-before-children ordering. Violations are data, not errors.
    """
    violations: list[Violation] = []

    roots = [c for c in d.cells if c.kind is CellKind.ROOT]
    layers = [c for c in d.cells if c.kind is CellKind.LAYER]
    if len(roots) != 1 or roots[0].id != ROOT_ID or roots[0].parent_id is not None:
        violations.append(
            Violation(ViolationKind.MISSING_SKELETON, ROOT_ID, "expected exactly one root cell '0'")
        )
    default_layers = [c for c in layers if c.id == LAYER_ID and c.parent_id == ROOT_ID]
    if len(default_layers) != 1:
        violations.append(
            Violation(ViolationKind.MISSING_SKELETON, LAYER_ID, "expected layer '1' under root '0'")
        )
    for extra in layers:
        if extra.id != LAYER_ID:
            violations.append(
                Violation(
                    ViolationKind.MISSING_SKELETON,
                    extra.id,
                    f"unexpected extra layer cell '{extra.id}'",
                )
            )

    seen: set[str] = set()
    duplicates: set[str] = set()
    for c in d.cells:
        if c.id in seen:
            duplicates.add(c.id)
        seen.add(c.id)
    for dup in sorted(duplicates):
        violations.append(Violation(ViolationKind.DUPLICATE_ID, dup, f"id '{dup}' used twice"))

    position = {c.id: i for i, c in enumerate(d.cells)}
    for i, c in enumerate(d.cells):
        if c.kind is CellKind.ROOT:
            continue
        if c.parent_id is None:
            violations.append(
                Violation(ViolationKind.ORPHAN_PARENT, c.id, f"cell '{c.id}' has no parent")
            )
        elif c.parent_id not in position:
            violations.append(Violation(ViolationKind.ORPHAN_PARENT, c.parent_id))
        elif position[c.parent_id] > i:
            violations.append(
                Violation(
                    ViolationKind.CHILD_BEFORE_PARENT,
                    c.id,
                    f"cell '{c.id}' appears before its parent '{c.parent_id}'",
                )
            )
    return violations


# ---------------------------------------------------------------------------
# Diffing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagramDiff:
    """Change summary between two diagram snapshots, keyed by cell id."""

    added: tuple[str, ...] = ()
    removed: tuple[str, ...] = ()
    relabeled: tuple[tuple[str, str, str], ...] = ()
    moved: tuple[tuple[str, Geometry | None, Geometry | None], ...] = ()

    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.relabeled or self.moved)


def diff(old: Diagram, new: Diagram) -> DiagramDiff:
    """Id-based diff: added/removed ids plus label and geometry changes.

    A cell whose label and geometry both changed is reported as relabeled
    only, keeping the four lists disjoint on ids.
    """
    old_by_id = {c.id: c for c in old.cells}
    new_by_id = {c.id: c for c in new.cells}

    added = tuple(c.id for c in new.cells if c.id not in old_by_id)
    removed = tuple(c.id for c in old.cells if c.id not in new_by_id)

    relabeled: list[tuple[str, str, str]] = []
    moved: list[tuple[str, Geometry | None, Geometry | None]] = []
    for c in old.cells:
        counterpart = new_by_id.get(c.id)
        if counterpart is None:
            continue
        if counterpart.label != c.label:
            relabeled.append((c.id, c.label, counterpart.label))
        elif counterpart.geometry != c.geometry:
            moved.append((c.id, c.geometry, counterpart.geometry))
    return DiagramDiff(
        added=added, removed=removed, relabeled=tuple(relabeled), moved=tuple(moved)
    )
