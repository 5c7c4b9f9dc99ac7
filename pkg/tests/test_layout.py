import random
from dataclasses import replace

import pytest

from drawgen.layout import LayoutConfig, Orientation, assign_layers, layout
from drawgen.model import (
    Cell,
    CellKind,
    Diagram,
    Geometry,
    add_edge,
    add_vertex,
    new_empty_diagram,
)

BOX = Geometry(0, 0, 120, 60)


def bare_chain(*labels):
    """Chain diagram whose vertices have no geometry."""
    d = new_empty_diagram("x")
    ids = []
    for label in labels:
        d, cid = add_vertex(d, label, "", BOX)
        ids.append(cid)
    for a, b in zip(ids, ids[1:]):
        d, _ = add_edge(d, a, b)
    cells = tuple(
        replace(c, geometry=None) if c.kind is CellKind.VERTEX else c for c in d.cells
    )
    return Diagram(name="x", cells=cells), ids


def geometry_of(d, cid):
    return d.cell(cid).geometry


class TestAssignLayers:
    def test_chain(self):
        d, (a, b, c) = bare_chain("A", "B", "C")
        assert assign_layers(d) == {a: 0, b: 1, c: 2}

    def test_isolated_vertices_at_layer_zero(self):
        d = new_empty_diagram("x")
        ids = []
        for label in "xyz":
            d, cid = add_vertex(d, label, "", BOX)
            ids.append(cid)
        assert assign_layers(d) == {cid: 0 for cid in ids}

    def test_two_node_cycle_breaks_on_back_edge(self):
        d, (a, b) = bare_chain("A", "B")
        d2, _ = add_edge(Diagram(name="x", cells=d.cells), b, a)
        assert assign_layers(d2) == {a: 0, b: 1}

    def test_diamond(self):
        d = new_empty_diagram("x")
        ids = {}
        for label in "abcd":
            d, cid = add_vertex(d, label, "", BOX)
            ids[label] = cid
        for src, tgt in [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]:
            d, _ = add_edge(d, ids[src], ids[tgt])
        layers = assign_layers(d)
        assert layers[ids["a"]] == 0
        assert layers[ids["b"]] == layers[ids["c"]] == 1
        assert layers[ids["d"]] == 2


class TestLayout:
    def test_chain_is_left_to_right(self):
        d, (a, b, c) = bare_chain("A", "B", "C")
        out = layout(d, LayoutConfig())
        xs = [geometry_of(out, cid).x for cid in (a, b, c)]
        ys = [geometry_of(out, cid).y for cid in (a, b, c)]
        assert xs[0] < xs[1] < xs[2]
        assert ys[0] == ys[1] == ys[2]

    def test_vertical_orientation(self):
        d, (a, b) = bare_chain("A", "B")
        out = layout(d, LayoutConfig(orientation=Orientation.VERTICAL))
        assert geometry_of(out, a).y < geometry_of(out, b).y
        assert geometry_of(out, a).x == geometry_of(out, b).x

    def test_identity_when_all_have_geometry(self):
        d, _ = add_vertex(new_empty_diagram("x"), "A", "", BOX)
        assert layout(d, LayoutConfig()) is d

    def test_existing_geometry_untouched(self):
        d, fixed = add_vertex(new_empty_diagram("x"), "pinned", "", Geometry(500, 500, 80, 40))
        d, loose = add_vertex(d, "loose", "", BOX)
        cells = tuple(
            replace(c, geometry=None) if c.id == loose else c for c in d.cells
        )
        out = layout(Diagram(name="x", cells=cells), LayoutConfig())
        assert geometry_of(out, fixed) == Geometry(500, 500, 80, 40)
        assert geometry_of(out, loose) is not None

    def test_deterministic(self):
        d, _ = bare_chain("A", "B", "C")
        assert layout(d, LayoutConfig()) == layout(d, LayoutConfig())

    def test_no_overlap_random_dags(self):
        rng = random.Random(7)
        for _ in range(15):
            d = new_empty_diagram("x")
            ids = []
            for i in range(7):
                d, cid = add_vertex(d, f"n{i}", "", BOX)
                ids.append(cid)
            for i in range(rng.randint(0, 10)):
                a, b = sorted(rng.sample(range(7), 2))
                d, _ = add_edge(d, ids[a], ids[b])
            cells = tuple(
                replace(c, geometry=None) if c.kind is CellKind.VERTEX else c
                for c in d.cells
            )
            out = layout(Diagram(name="x", cells=cells), LayoutConfig())
            boxes = [out.cell(cid).geometry for cid in ids]
            for i in range(len(boxes)):
                for j in range(i + 1, len(boxes)):
                    a, b = boxes[i], boxes[j]
                    disjoint = (
                        a.x + a.width <= b.x
                        or b.x + b.width <= a.x
                        or a.y + a.height <= b.y
                        or b.y + b.height <= a.y
                    )
                    assert disjoint, f"boxes {i} and {j} overlap"

    def test_edge_monotonicity(self):
        d, ids = bare_chain("A", "B", "C", "D")
        out = layout(d, LayoutConfig())
        for a, b in zip(ids, ids[1:]):
            assert geometry_of(out, a).x < geometry_of(out, b).x

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LayoutConfig(node_gap=0)
        with pytest.raises(ValueError):
            LayoutConfig(default_width=-1)


def test_overlap_with_user_geometry_logged(caplog):
    d, pinned = add_vertex(new_empty_diagram("x"), "pinned", "", Geometry(40, 40, 120, 60))
    d, loose = add_vertex(d, "loose", "", BOX)
    cells = tuple(replace(c, geometry=None) if c.id == loose else c for c in d.cells)
    with caplog.at_level("WARNING", logger="drawgen.layout"):
        layout(Diagram(name="x", cells=cells), LayoutConfig())
    assert any("overlaps existing" in r.message for r in caplog.records)
