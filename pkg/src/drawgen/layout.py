"""Coordinate assignment for vertices that arrive without geometry.

Longest-path layering over the edge digraph (back-edges found by a
deterministic depth-first sweep are ignored), then stacked placement
within each layer. Vertices that already carry geometry are never
touched; overlaps with those are permitted but logged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum

from .model import CellKind, Diagram, Geometry

log = logging.getLogger(__name__)

_MARGIN = 40.0


class Orientation(Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


@dataclass(frozen=True)
class LayoutConfig:
    orientation: Orientation = Orientation.HORIZONTAL
    node_gap: float = 60.0
    layer_gap: float = 120.0
    default_width: float = 120.0
    default_height: float = 60.0

    def __post_init__(self) -> None:
        if self.node_gap <= 0 or self.layer_gap <= 0:
            raise ValueError("gaps must be positive")
        if self.default_width <= 0 or self.default_height <= 0:
            raise ValueError("default size must be positive")


def _back_edge_indices(vertex_ids: list[str], adjacency: dict[str, list[tuple[int, str]]]) -> set[int]:
    """Edge indices whose targets are on the DFS stack, visiting vertices
    and neighbours in cell order."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {v: WHITE for v in vertex_ids}
    back: set[int] = set()
    for root in vertex_ids:
        if color[root] != WHITE:
            continue
        color[root] = GRAY
        stack: list[tuple[str, int]] = [(root, 0)]
        while stack:
            node, i = stack[-1]
            neighbours = adjacency[node]
            if i >= len(neighbours):
                color[node] = BLACK
                stack.pop()
                continue
            stack[-1] = (node, i + 1)
            edge_index, target = neighbours[i]
            if color[target] == GRAY:
                back.add(edge_index)
            elif color[target] == WHITE:
                color[target] = GRAY
                stack.append((target, 0))
    return back


def assign_layers(d: Diagram) -> dict[str, int]:
    """Longest-path layering: layer(v) = 1 + max layer over predecessors,
    sources and isolated vertices at layer 0."""
    vertex_ids = [c.id for c in d.cells if c.kind is CellKind.VERTEX]
    vertex_set = set(vertex_ids)
    adjacency: dict[str, list[tuple[int, str]]] = {v: [] for v in vertex_ids}
    edges: list[tuple[str, str]] = []
    for c in d.cells:
        if c.kind is not CellKind.EDGE:
            continue
        if c.source_id in vertex_set and c.target_id in vertex_set:
            adjacency[c.source_id].append((len(edges), c.target_id))
            edges.append((c.source_id, c.target_id))

    back = _back_edge_indices(vertex_ids, adjacency)
    predecessors: dict[str, list[str]] = {v: [] for v in vertex_ids}
    successors: dict[str, list[str]] = {v: [] for v in vertex_ids}
    for i, (src, tgt) in enumerate(edges):
        if i in back:
            continue
        predecessors[tgt].append(src)
        successors[src].append(tgt)

    layers: dict[str, int] = {}
    remaining = {v: len(predecessors[v]) for v in vertex_ids}
    queue = [v for v in vertex_ids if remaining[v] == 0]
    while queue:
        node = queue.pop(0)
        layers[node] = max((layers[p] + 1 for p in predecessors[node]), default=0)
        for nxt in successors[node]:
            remaining[nxt] -= 1
            if remaining[nxt] == 0:
                queue.append(nxt)
    return layers


def layout(d: Diagram, cfg: LayoutConfig | None = None) -> Diagram:
    """Assign default-size boxes to geometry-less vertices, layer by layer.

    Returns the input unchanged when every vertex already has geometry.
    Assigned boxes never overlap each other; overlap with pre-existing
    user geometry is allowed and logged as a warning.
    """
    cfg = cfg or LayoutConfig()
    pending = [c for c in d.cells if c.kind is CellKind.VERTEX and c.geometry is None]
    if not pending:
        return d

    layers = assign_layers(d)
    horizontal = cfg.orientation is Orientation.HORIZONTAL
    major_step = (cfg.default_width if horizontal else cfg.default_height) + cfg.layer_gap
    minor_step = (cfg.default_height if horizontal else cfg.default_width) + cfg.node_gap

    slot_within_layer: dict[int, int] = {}
    assigned: dict[str, Geometry] = {}
    for cell in pending:  # cell order fixes the within-layer stacking
        layer = layers[cell.id]
        slot = slot_within_layer.get(layer, 0)
        slot_within_layer[layer] = slot + 1
        major = _MARGIN + layer * major_step
        minor = _MARGIN + slot * minor_step
        x, y = (major, minor) if horizontal else (minor, major)
        assigned[cell.id] = Geometry(
            x=x, y=y, width=cfg.default_width, height=cfg.default_height
        )

    for cell in d.cells:
        if cell.kind is CellKind.VERTEX and cell.geometry is not None:
            for cid, g in assigned.items():
                if _overlaps(g, cell.geometry):
                    log.warning(
                        "layout: assigned box for cell %s overlaps existing cell %s", cid, cell.id
                    )

    cells = tuple(
        replace(c, geometry=assigned[c.id]) if c.id in assigned else c for c in d.cells
    )
    return Diagram(name=d.name, cells=cells, revision=d.revision + 1)


def _overlaps(a: Geometry, b: Geometry) -> bool:
    return not (
        a.x + a.width <= b.x
        or b.x + b.width <= a.x
        or a.y + a.height <= b.y
        or b.y + b.height <= a.y
    )
