import random

import pytest
from hypothesis import example, given, settings, strategies as st

from drawgen.model import Geometry, add_vertex, new_empty_diagram
from drawgen.xml_codec import (
    IntegrityViolation,
    ParseFailure,
    ParseIssueKind,
    check_wellformed,
    parse,
    serialize,
)
from drawgen.model import Cell, CellKind, Diagram

from conftest import build_random_diagram

BOX = Geometry(0, 0, 120, 60)

FLOWCHART_ABC = """<mxfile>
  <diagram name="Page-1">
    <mxGraphModel dx="800" dy="600" grid="1" gridSize="10">
      <root>
        <mxCell id="0" />
        <mxCell id="1" parent="0" />
        <mxCell id="2" value="A" style="rounded=1;" vertex="1" parent="1">
          <mxGeometry x="40" y="40" width="120" height="60" as="geometry" />
        </mxCell>
        <mxCell id="3" value="B" style="rounded=1;" vertex="1" parent="1">
          <mxGeometry x="220" y="40" width="120" height="60" as="geometry" />
        </mxCell>
        <mxCell id="4" value="C" style="rounded=1;" vertex="1" parent="1">
          <mxGeometry x="400" y="40" width="120" height="60" as="geometry" />
        </mxCell>
        <mxCell id="5" style="endArrow=classic;" edge="1" parent="1" source="2" target="3">
          <mxGeometry relative="1" as="geometry" />
        </mxCell>
        <mxCell id="6" style="endArrow=classic;" edge="1" parent="1" source="3" target="4">
          <mxGeometry relative="1" as="geometry" />
        </mxCell>
      </root>
    </mxGraphModel>
  </diagram>
</mxfile>
"""


class TestParse:
    def test_minimal_skeleton(self):
        text = serialize(new_empty_diagram("Page-1"))
        assert parse(text) == new_empty_diagram("Page-1")

    def test_flowchart_three_nodes_two_arrows(self):
        d = parse(FLOWCHART_ABC)
        assert len(d.vertices()) == 3
        assert len(d.edges()) == 2
        assert [v.label for v in d.vertices()] == ["A", "B", "C"]

    def test_truncated_document(self):
        with pytest.raises(ParseFailure) as exc:
            parse("<mxfile><diagram>")
        issue = exc.value.issues[0]
        assert issue.kind is ParseIssueKind.NOT_WELLFORMED
        assert issue.location is not None

    def test_bare_mxgraphmodel_accepted(self):
        bare = (
            '<mxGraphModel><root><mxCell id="0" /><mxCell id="1" parent="0" />'
            "</root></mxGraphModel>"
        )
        d = parse(bare)
        assert d.name == "Page-1"
        assert serialize(d).startswith("<mxfile>")

    def test_missing_skeleton_reported(self):
        text = '<mxGraphModel><root><mxCell id="5" vertex="1" parent="1" /></root></mxGraphModel>'
        issues = check_wellformed(text)
        assert any(i.kind is ParseIssueKind.MISSING_SKELETON for i in issues)

    def test_compressed_payload_rejected(self):
        text = "<mxfile><diagram>jVNdb5swFP01PE4CTFn6uKRf0jpt6qb</diagram></mxfile>"
        issues = check_wellformed(text)
        assert [i.kind for i in issues] == [ParseIssueKind.MISSING_ROOT_MODEL]
        assert "compressed" in issues[0].message

    def test_html_snippet_is_missing_root_model(self):
        issues = check_wellformed("<html><body><p>hello</p></body></html>")
        assert [i.kind for i in issues] == [ParseIssueKind.MISSING_ROOT_MODEL]

    def test_vertex_without_geometry_parses(self):
        text = (
            '<mxGraphModel><root><mxCell id="0" /><mxCell id="1" parent="0" />'
            '<mxCell id="2" value="A" vertex="1" parent="1" /></root></mxGraphModel>'
        )
        d = parse(text)
        assert d.vertices()[0].geometry is None

    def test_cell_without_id_rejected(self):
        text = (
            '<mxGraphModel><root><mxCell id="0" /><mxCell id="1" parent="0" />'
            '<mxCell vertex="1" parent="1" /></root></mxGraphModel>'
        )
        issues = check_wellformed(text)
        assert any(i.kind is ParseIssueKind.BAD_ATTRIBUTE for i in issues)

    def test_unknown_elements_preserved(self):
        text = (
            '<mxGraphModel><root><mxCell id="0" /><mxCell id="1" parent="0" />'
            '<mxCell id="2" value="A" vertex="1" parent="1">'
            '<mxGeometry x="0" y="0" width="10" height="10" as="geometry" />'
            '<mxPoint x="5" y="5" as="offset" /></mxCell>'
            "</root></mxGraphModel>"
        )
        d = parse(text)
        cell = d.cell("2")
        assert len(cell.annotations) == 1 and "mxPoint" in cell.annotations[0]
        assert parse(serialize(d)) == d


class TestSerialize:
    def test_skeleton_document(self):
        text = serialize(new_empty_diagram("P"))
        assert "<mxGraphModel" in text
        assert '<mxCell id="0" />' in text
        assert '<mxCell id="1" parent="0" />' in text

    def test_entity_escaping(self):
        d, _ = add_vertex(new_empty_diagram("x"), "A & B", "", BOX)
        assert 'value="A &amp; B"' in serialize(d)

    def test_all_five_entities_round_trip(self):
        label = "a&b<c>d\"e'f"
        d, cid = add_vertex(new_empty_diagram("x"), label, "", BOX)
        assert parse(serialize(d)).cell(cid).label == label

    def test_integrity_precondition(self):
        bad = Diagram(name="x", cells=(Cell(id="0", kind=CellKind.ROOT),))
        with pytest.raises(IntegrityViolation):
            serialize(bad)

    def test_deterministic(self, rng):
        d = build_random_diagram(rng)
        assert serialize(d) == serialize(d)

    def test_round_trip_random_diagrams(self, rng):
        for _ in range(20):
            d = build_random_diagram(rng)
            text = serialize(d)
            assert parse(text) == d
            assert serialize(parse(text)) == text


class TestCheckWellformed:
    def test_valid_skeleton(self):
        assert check_wellformed(serialize(new_empty_diagram("x"))) == []

    def test_mismatched_tag_located(self):
        bad = FLOWCHART_ABC.replace("</root>", "</wrong>")
        issues = check_wellformed(bad)
        assert issues[0].kind is ParseIssueKind.NOT_WELLFORMED
        assert issues[0].location is not None
        assert issues[0].location[0] > 1


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=300))
@example("<mxfile><diagram>")
@example("\x00\x01<")
def test_parse_never_panics(text):
    """Arbitrary input either parses or reports issues, never crashes."""
    try:
        parse(text)
    except ParseFailure:
        pass


@settings(max_examples=150, deadline=None)
@given(st.text(max_size=120))
def test_escape_unescape_inverse(label):
    d, cid = add_vertex(new_empty_diagram("x"), label, "", BOX)
    try:
        back = parse(serialize(d))
    except ParseFailure:
        # Control characters cannot be represented in XML 1.0 at all.
        assert any(ord(ch) < 32 and ch not in "\t\n\r" for ch in label)
        return
    assert back.cell(cid).label == label


class TestParseIntegrity:
    def test_duplicate_ids_rejected(self):
        text = (
            '<mxGraphModel><root><mxCell id="0" /><mxCell id="1" parent="0" />'
            '<mxCell id="2" vertex="1" parent="1" /><mxCell id="2" vertex="1" parent="1" />'
            "</root></mxGraphModel>"
        )
        issues = check_wellformed(text)
        assert issues and all(i.kind is ParseIssueKind.BAD_ATTRIBUTE for i in issues)

    def test_orphan_parent_rejected(self):
        text = (
            '<mxGraphModel><root><mxCell id="0" /><mxCell id="1" parent="0" />'
            '<mxCell id="2" vertex="1" parent="77" /></root></mxGraphModel>'
        )
        assert check_wellformed(text)


def test_root_level_unknown_element_preserved():
    text = (
        '<mxGraphModel><root><mxCell id="0" /><mxCell id="1" parent="0" />'
        '<mxCell id="2" value="A" vertex="1" parent="1" />'
        '<object label="meta" id="weird" />'
        "</root></mxGraphModel>"
    )
    d = parse(text)
    cell = d.cell("2")
    assert len(cell.trailing) == 1 and "object" in cell.trailing[0]
    assert parse(serialize(d)) == d
