import pytest

from drawgen.validator import (
    CorrectionStatus,
    EmptyIssueList,
    Issue,
    IssueCategory,
    NoXmlFound,
    build_self_correction_prompt,
    extract_xml,
    repair,
    validate_and_correct,
)
from drawgen.xml_codec import check_wellformed, parse, serialize
from drawgen.model import Geometry, add_edge, add_vertex, new_empty_diagram

from conftest import build_random_diagram

BOX = Geometry(0, 0, 120, 60)


def sample_xml() -> str:
    d, a = add_vertex(new_empty_diagram("x"), "A", "rounded=1;", BOX)
    d, b = add_vertex(d, "B", "rounded=1;", Geometry(200, 0, 120, 60))
    d, _ = add_edge(d, a, b)
    return serialize(d)


class TestExtractXml:
    def test_prose_and_fence_stripped(self):
        inner = sample_xml().strip()
        wrapped = f"Here is your diagram:\n```xml\n{inner}\n```\nEnjoy!"
        assert extract_xml(wrapped) == inner

    def test_bare_xml_unchanged(self):
        inner = sample_xml().strip()
        assert extract_xml(inner) == inner

    def test_refusal_raises(self):
        with pytest.raises(NoXmlFound):
            extract_xml("Sorry, I cannot draw that.")

    def test_unterminated_region_runs_to_fence(self):
        text = "<mxGraphModel><root><mxCell id=\"0\" />\n```\ntrailing prose"
        region = extract_xml(text)
        assert region.endswith('<mxCell id="0" />')

    def test_mxfile_prefix_word_not_matched(self):
        with pytest.raises(NoXmlFound):
            extract_xml("the <mxfileish> tag is not ours")


class TestRepair:
    def test_unescaped_ampersand(self):
        bad = sample_xml().replace('value="A"', 'value="A & B"')
        fixed, issues = repair(bad)
        assert 'value="A &amp; B"' in fixed
        unescaped = [i for i in issues if i.category is IssueCategory.UNESCAPED_CHAR]
        assert len(unescaped) == 1 and unescaped[0].repaired

    def test_unescaped_lt_in_attribute(self):
        bad = sample_xml().replace('value="A"', 'value="a<b"')
        fixed, issues = repair(bad)
        assert 'value="a&lt;b"' in fixed
        assert check_wellformed(fixed) == []

    def test_missing_final_close_tag(self):
        good = sample_xml()
        bad = good.replace("</mxfile>", "")
        fixed, issues = repair(bad)
        assert check_wellformed(fixed) == []
        assert any(i.category is IssueCategory.MISMATCHED_TAG and i.repaired for i in issues)
        assert parse(fixed) == parse(good)

    def test_missing_inner_close_tag(self):
        good = sample_xml()
        idx = good.rfind("</mxCell>")
        bad = good[:idx] + good[idx + len("</mxCell>") :]
        fixed, issues = repair(bad)
        assert check_wellformed(fixed) == []

    def test_orphan_close_dropped(self):
        bad = sample_xml().replace("<root>", "<root></mxPoint>")
        fixed, issues = repair(bad)
        assert check_wellformed(fixed) == []
        assert any("orphan" in i.detail for i in issues)

    def test_dangling_edge_target_removed(self):
        bad = sample_xml().replace('target="3"', 'target="42"')
        fixed, issues = repair(bad)
        dangling = [i for i in issues if i.category is IssueCategory.DANGLING_EDGE_REF]
        assert len(dangling) == 1 and "42" in dangling[0].detail
        assert 'target="42"' not in fixed
        assert check_wellformed(fixed) == []

    def test_skeleton_injected(self):
        bad = sample_xml().replace('        <mxCell id="0" />\n', "").replace(
            '        <mxCell id="1" parent="0" />\n', ""
        )
        fixed, issues = repair(bad)
        assert check_wellformed(fixed) == []
        skeleton = [i for i in issues if i.category is IssueCategory.MISSING_SKELETON]
        assert len(skeleton) == 2

    def test_missing_id_synthesized(self):
        bad = sample_xml().replace('id="2" ', "", 1)
        fixed, issues = repair(bad)
        assert check_wellformed(fixed) == []
        assert any(i.category is IssueCategory.MISSING_REQUIRED_ATTR for i in issues)

    def test_vertex_count_preserved(self, rng):
        for _ in range(10):
            good = serialize(build_random_diagram(rng))
            bad = good.replace("</mxfile>", "").replace('value="', 'value="& ', 3)
            fixed, _ = repair(bad)
            assert fixed.count('vertex="1"') == good.count('vertex="1"')

    def test_idempotent_on_corpus(self, rng):
        texts = [serialize(build_random_diagram(rng)) for _ in range(5)]
        corruptions = [
            lambda t: t.replace("</mxfile>", ""),
            lambda t: t.replace('value="', 'value="x & ', 2),
            lambda t: t.replace('        <mxCell id="0" />\n', ""),
        ]
        for text in texts:
            for corrupt in corruptions:
                once, _ = repair(corrupt(text))
                twice, _ = repair(once)
                assert twice == once


class TestValidateAndCorrect:
    def test_clean_first_pass(self):
        outcome = validate_and_correct(sample_xml())
        assert outcome.status is CorrectionStatus.CLEAN_FIRST_PASS
        assert outcome.issues == ()
        assert outcome.passes_applied == ()
        assert check_wellformed(outcome.xml) == []

    def test_prose_wrapped_with_unescaped_amp(self):
        bad = sample_xml().replace('value="A"', 'value="A & B"')
        outcome = validate_and_correct(f"Sure! Here you go:\n```\n{bad}\n```")
        assert outcome.status is CorrectionStatus.REPAIRED_LOCALLY
        assert len(outcome.issues) == 1
        assert outcome.passes_applied == ("escape",)
        assert check_wellformed(outcome.xml) == []

    def test_refusal_fails(self):
        outcome = validate_and_correct("I cannot help with that")
        assert outcome.status is CorrectionStatus.FAILED
        assert outcome.xml is None
        assert outcome.issues[0].category is IssueCategory.NO_XML_FOUND

    def test_unfixable_needs_reprompt(self):
        outcome = validate_and_correct('<mxGraphModel><root><mxCell id="1" id="1" /></root></mxGraphModel>')
        assert outcome.status is CorrectionStatus.NEEDS_REPROMPT
        assert any(not i.repaired for i in outcome.issues)

    def test_no_false_positives_on_valid_corpus(self, rng):
        for _ in range(15):
            outcome = validate_and_correct(serialize(build_random_diagram(rng)))
            assert outcome.status is CorrectionStatus.CLEAN_FIRST_PASS
            assert outcome.issues == ()

    def test_soundness_parse_succeeds(self, rng):
        for _ in range(10):
            good = serialize(build_random_diagram(rng))
            outcome = validate_and_correct(good.replace("</mxfile>", ""))
            assert outcome.ok()
            parse(outcome.xml)


class TestSelfCorrectionPrompt:
    def test_bundle_embeds_bad_text_and_issues(self):
        issues = [Issue(IssueCategory.MISMATCHED_TAG, "dropped orphan </mxCell>", True)]
        bundle = build_self_correction_prompt("<mxfile><bad>", issues)
        user = bundle.turns[-1].text
        assert "<mxfile><bad>" in user
        assert "MismatchedTag" in user and "orphan" in user
        from drawgen.prompts import build_system_prompt

        assert bundle.turns[0].text == build_system_prompt()

    def test_empty_issue_list_rejected(self):
        with pytest.raises(EmptyIssueList):
            build_self_correction_prompt("x", [])

    def test_token_estimate_within_budget(self):
        issues = [Issue(IssueCategory.UNESCAPED_CHAR, "'&' at offset 3", True)]
        bundle = build_self_correction_prompt(sample_xml(), issues)
        assert bundle.token_estimate <= 8000


class TestTruncatedOutput:
    def test_mid_tag_truncation_completed(self):
        good = sample_xml()
        idx = good.rfind('<mxGeometry')
        truncated = good[: idx + len('<mxGeometry x="20')]
        fixed, issues = repair(truncated)
        assert check_wellformed(fixed) == []
        assert any("completed unterminated" in i.detail for i in issues)
        # Both vertices survive the truncation repair.
        assert fixed.count('vertex="1"') == 2

    def test_truncated_comment_dropped(self):
        bad = sample_xml().replace("</mxfile>", "") + "<!-- half a comment"
        fixed, issues = repair(bad)
        assert check_wellformed(fixed) == []
        assert any("unterminated markup" in i.detail for i in issues)

    def test_truncated_inside_quote(self):
        # Truncation eats the vertex flag, which no local pass re-invents;
        # the text must still come back lexically balanced for the re-prompt.
        import xml.etree.ElementTree as ET

        good = sample_xml()
        idx = good.find('value="B')
        truncated = good[: idx + len('value="B')]
        fixed, _ = repair(truncated)
        ET.fromstring(fixed)
        outcome = validate_and_correct(truncated)
        assert outcome.status is CorrectionStatus.NEEDS_REPROMPT
        assert outcome.xml is not None
