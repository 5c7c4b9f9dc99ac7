"""Post-generation validation and correction of raw model output.

Turns a chat response into loadable diagram XML: extract the XML region,
check it, and if needed run the local repair passes in order (escape stray
characters, re-balance tags, inject the 0/1 skeleton, synthesize missing
ids, drop dangling edge references). When residue remains the caller
escalates to a single self-correction re-prompt.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from enum import Enum

from .prompts import ChatTurn, PromptBundle, PromptConfig, Role, build_system_prompt, estimate_tokens
from .xml_codec import ParseIssueKind, check_wellformed


class NoXmlFound(ValueError):
    """Response text contains no mxfile/mxGraphModel start tag."""


class EmptyIssueList(ValueError):
    pass


class IssueCategory(Enum):
    NO_XML_FOUND = "NoXmlFound"
    UNESCAPED_CHAR = "UnescapedChar"
    MISMATCHED_TAG = "MismatchedTag"
    MISSING_REQUIRED_ATTR = "MissingRequiredAttr"
    DANGLING_EDGE_REF = "DanglingEdgeRef"
    MISSING_SKELETON = "MissingSkeleton"


@dataclass(frozen=True)
class Issue:
    category: IssueCategory
    detail: str
    repaired: bool = False


class CorrectionStatus(Enum):
    CLEAN_FIRST_PASS = "CleanFirstPass"
    REPAIRED_LOCALLY = "RepairedLocally"
    NEEDS_REPROMPT = "NeedsReprompt"
    FAILED = "Failed"


# Stable pass identifiers, exposed via the service API and CLI JSON output.
PASS_NAMES = {
    IssueCategory.UNESCAPED_CHAR: "escape",
    IssueCategory.MISMATCHED_TAG: "tag_repair",
    IssueCategory.MISSING_SKELETON: "skeleton",
    IssueCategory.MISSING_REQUIRED_ATTR: "ids",
    IssueCategory.DANGLING_EDGE_REF: "edge_refs",
}
_PASS_ORDER = ("escape", "tag_repair", "skeleton", "ids", "edge_refs")


@dataclass(frozen=True)
class CorrectionOutcome:
    status: CorrectionStatus
    xml: str | None
    issues: tuple[Issue, ...]
    passes_applied: tuple[str, ...]

    def ok(self) -> bool:
        return self.status in (
            CorrectionStatus.CLEAN_FIRST_PASS,
            CorrectionStatus.REPAIRED_LOCALLY,
        )


# ---------------------------------------------------------------------------
# XML region extraction
# ---------------------------------------------------------------------------

_START_TAGS = ("<mxfile", "<mxGraphModel")
_CLOSE_FOR = {"<mxfile": "</mxfile>", "<mxGraphModel": "</mxGraphModel>"}


def _find_start(text: str) -> tuple[int, str] | None:
    best: tuple[int, str] | None = None
    for tag in _START_TAGS:
        pos = 0
        while True:
            idx = text.find(tag, pos)
            if idx == -1:
                break
            after = text[idx + len(tag) : idx + len(tag) + 1]
            if after == "" or not (after.isalnum() or after in "-_"):
                if best is None or idx < best[0]:
                    best = (idx, tag)
                break
            pos = idx + 1
    return best


def extract_xml(response_text: str) -> str:
    """The first maximal region from an mxfile/mxGraphModel start tag to its
    matching close tag (or end of text), with surrounding prose and
    code-fence markers stripped."""
    found = _find_start(response_text)
    if found is None:
        raise NoXmlFound("no <mxfile> or <mxGraphModel> start tag in response")
    start, tag = found
    close = _CLOSE_FOR[tag]
    end = response_text.find(close, start)
    if end != -1:
        return response_text[start : end + len(close)]
    region = response_text[start:]
    fence = region.find("```")
    if fence != -1:
        region = region[:fence]
    return region.rstrip()


# ---------------------------------------------------------------------------
# Pass 1: escape bare & (everywhere) and bare < inside attribute values
# ---------------------------------------------------------------------------

_ENTITY_RE = re.compile(r"&(?:amp|lt|gt|quot|apos|#[0-9]+|#x[0-9A-Fa-f]+);")


def _escape_pass(text: str, issues: list[Issue]) -> str:
    out: list[str] = []
    in_tag = False
    quote: str | None = None
    for i, ch in enumerate(text):
        if quote is not None:
            if ch == quote:
                quote = None
            elif ch == "&" and not _ENTITY_RE.match(text, i):
                out.append("&amp;")
                issues.append(Issue(IssueCategory.UNESCAPED_CHAR, f"'&' at offset {i}", True))
                continue
            elif ch == "<":
                out.append("&lt;")
                issues.append(Issue(IssueCategory.UNESCAPED_CHAR, f"'<' at offset {i}", True))
                continue
            out.append(ch)
        elif in_tag:
            if ch in "\"'":
                quote = ch
            elif ch == ">":
                in_tag = False
            out.append(ch)
        else:
            if ch == "<":
                nxt = text[i + 1] if i + 1 < len(text) else ""
                if nxt.isalpha() or nxt in "/!?_":
                    in_tag = True
                out.append(ch)
            elif ch == "&" and not _ENTITY_RE.match(text, i):
                out.append("&amp;")
                issues.append(Issue(IssueCategory.UNESCAPED_CHAR, f"'&' at offset {i}", True))
            else:
                out.append(ch)
    return "".join(out)


# ---------------------------------------------------------------------------
# Pass 2: tag-stack repair
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][\w.:-]*")
_ATTR_RE = re.compile(r"\s+[\w.:-]+\s*=\s*(\"[^\"]*\"|'[^']*')")
_PARTIAL_ATTR_RE = re.compile(r"\s+[\w.:-]+\s*=\s*(\"[^\"]*|'[^']*)$")


def _complete_partial_tag(inner: str) -> tuple[str, str] | None:
    """Longest lexically valid completion of a tag truncated at end of text:
    tag name plus complete attributes, closing an unterminated quoted value.
    Returns (name, completed raw) or None when nothing usable remains."""
    match = _NAME_RE.match(inner)
    if inner.startswith("/") or match is None:
        return None
    pos = match.end()
    while True:
        attr = _ATTR_RE.match(inner, pos)
        if attr is None:
            break
        pos = attr.end()
    tail = _PARTIAL_ATTR_RE.match(inner, pos)
    if tail is not None:
        return match.group(0), "<" + inner[: tail.end()] + tail.group(1)[0] + ">"
    return match.group(0), "<" + inner[:pos] + ">"


def _tokenize(text: str):
    """Tolerant tag scanner: (kind, name, raw) with kind in
    {text, open, selfclose, close, other, partial}."""
    tokens: list[tuple[str, str, str]] = []
    i, n = 0, len(text)
    while i < n:
        lt = text.find("<", i)
        if lt == -1:
            tokens.append(("text", "", text[i:]))
            break
        if lt > i:
            tokens.append(("text", "", text[i:lt]))
        if text.startswith("<!--", lt):
            end = text.find("-->", lt + 4)
            kind = "other" if end != -1 else "partial_drop"
            end = n if end == -1 else end + 3
            tokens.append((kind, "", text[lt:end]))
            i = end
            continue
        if text.startswith("<?", lt):
            end = text.find("?>", lt + 2)
            kind = "other" if end != -1 else "partial_drop"
            end = n if end == -1 else end + 2
            tokens.append((kind, "", text[lt:end]))
            i = end
            continue
        if text.startswith("<!", lt):
            end = text.find(">", lt + 2)
            kind = "other" if end != -1 else "partial_drop"
            end = n if end == -1 else end + 1
            tokens.append((kind, "", text[lt:end]))
            i = end
            continue
        j = lt + 1
        quote = None
        while j < n:
            c = text[j]
            if quote:
                if c == quote:
                    quote = None
            elif c in "\"'":
                quote = c
            elif c == ">":
                break
            j += 1
        if j >= n:
            # Truncated tag at end of text: complete it rather than lose it.
            completed = _complete_partial_tag(text[lt + 1 :])
            if completed is None:
                tokens.append(("partial_drop", "", text[lt:]))
            else:
                tokens.append(("partial_open", completed[0], completed[1]))
            break
        inner = text[lt + 1 : j]
        raw = text[lt : j + 1]
        if inner.startswith("/"):
            match = _NAME_RE.match(inner[1:])
            tokens.append(("close", match.group(0) if match else "", raw))
        else:
            match = _NAME_RE.match(inner)
            name = match.group(0) if match else ""
            kind = "selfclose" if inner.rstrip().endswith("/") else "open"
            tokens.append((kind, name, raw))
        i = j + 1
    return tokens


def _tag_repair_pass(text: str, issues: list[Issue]) -> str:
    out: list[str] = []
    stack: list[str] = []
    for kind, name, raw in _tokenize(text):
        if kind == "open":
            stack.append(name)
            out.append(raw)
        elif kind == "close":
            if stack and stack[-1] == name:
                stack.pop()
                out.append(raw)
            elif name in stack:
                while stack[-1] != name:
                    top = stack.pop()
                    out.append(f"</{top}>")
                    issues.append(
                        Issue(IssueCategory.MISMATCHED_TAG, f"closed unclosed <{top}>", True)
                    )
                stack.pop()
                out.append(raw)
            else:
                issues.append(
                    Issue(IssueCategory.MISMATCHED_TAG, f"dropped orphan </{name}>", True)
                )
        elif kind == "partial_open":
            out.append(raw)
            stack.append(name)
            issues.append(
                Issue(IssueCategory.MISMATCHED_TAG, f"completed unterminated <{name}>", True)
            )
        elif kind == "partial_drop":
            issues.append(
                Issue(
                    IssueCategory.MISMATCHED_TAG, "dropped unterminated markup at end of text", True
                )
            )
        else:
            out.append(raw)
    for top in reversed(stack):
        out.append(f"</{top}>")
        issues.append(Issue(IssueCategory.MISMATCHED_TAG, f"closed unclosed <{top}>", True))
    return "".join(out)


# ---------------------------------------------------------------------------
# Passes 3-5: skeleton injection, id synthesis, dangling edge references
# ---------------------------------------------------------------------------

def _dom_passes(doc: ET.Element, issues: list[Issue]) -> bool:
    changed = False

    if doc.tag == "mxGraphModel":
        model = doc
        containers: list[ET.Element] = [doc]
    elif doc.tag == "mxfile":
        diagram = doc.find("diagram")
        if diagram is None:
            diagram = ET.SubElement(doc, "diagram", {"name": "Page-1"})
            issues.append(Issue(IssueCategory.MISSING_SKELETON, "injected diagram element", True))
            changed = True
        model = diagram.find("mxGraphModel")
        if model is None:
            model = ET.SubElement(diagram, "mxGraphModel")
            issues.append(
                Issue(IssueCategory.MISSING_SKELETON, "injected mxGraphModel element", True)
            )
            changed = True
        containers = [doc, diagram, model]
    else:
        return False

    root = model.find("root")
    if root is None:
        root = ET.Element("root")
        model.insert(0, root)
        issues.append(Issue(IssueCategory.MISSING_SKELETON, "injected root element", True))
        changed = True

    # Stray cells directly under mxfile/diagram/mxGraphModel belong in root.
    for parent in containers:
        for el in parent.findall("mxCell"):
            parent.remove(el)
            root.append(el)
            issues.append(
                Issue(IssueCategory.MISSING_SKELETON, "moved stray mxCell into root", True)
            )
            changed = True

    cells = root.findall("mxCell")
    ids = [c.get("id") for c in cells]
    if "0" not in ids:
        root.insert(0, ET.Element("mxCell", {"id": "0"}))
        issues.append(Issue(IssueCategory.MISSING_SKELETON, "injected skeleton cell '0'", True))
        changed = True
    if "1" not in ids:
        root.insert(1, ET.Element("mxCell", {"id": "1", "parent": "0"}))
        issues.append(Issue(IssueCategory.MISSING_SKELETON, "injected skeleton cell '1'", True))
        changed = True

    cells = root.findall("mxCell")
    highest = 1
    for cell in cells:
        cid = cell.get("id")
        if cid is not None:
            try:
                highest = max(highest, int(cid))
            except ValueError:
                pass
    for cell in cells:
        if not cell.get("id"):
            highest += 1
            cell.set("id", str(highest))
            issues.append(
                Issue(
                    IssueCategory.MISSING_REQUIRED_ATTR,
                    f"synthesized id '{highest}' for mxCell",
                    True,
                )
            )
            changed = True

    known = {c.get("id") for c in cells}
    for cell in cells:
        if cell.get("edge") != "1":
            continue
        for attr in ("source", "target"):
            ref = cell.get(attr)
            if ref is not None and ref not in known:
                del cell.attrib[attr]
                issues.append(
                    Issue(
                        IssueCategory.DANGLING_EDGE_REF,
                        f"edge '{cell.get('id')}' {attr} '{ref}' removed",
                        True,
                    )
                )
                changed = True
    return changed


_RESIDUAL_CATEGORY = {
    ParseIssueKind.NOT_WELLFORMED: IssueCategory.MISMATCHED_TAG,
    ParseIssueKind.MISSING_ROOT_MODEL: IssueCategory.MISSING_SKELETON,
    ParseIssueKind.MISSING_SKELETON: IssueCategory.MISSING_SKELETON,
    ParseIssueKind.BAD_ATTRIBUTE: IssueCategory.MISSING_REQUIRED_ATTR,
}


def repair(text: str) -> tuple[str, list[Issue]]:
    """Best-effort local repair; residual issues carry repaired=False."""
    issues: list[Issue] = []
    out = _escape_pass(text, issues)
    out = _tag_repair_pass(out, issues)
    try:
        doc = ET.fromstring(out)
    except (ET.ParseError, ValueError):
        doc = None
    if doc is not None and _dom_passes(doc, issues):
        out = ET.tostring(doc, encoding="unicode")
    for residual in check_wellformed(out):
        issues.append(Issue(_RESIDUAL_CATEGORY[residual.kind], str(residual), False))
    return out, issues


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

def validate_and_correct(response_text: str) -> CorrectionOutcome:
    """extract -> wellformed check -> (repair -> re-check) as needed."""
    try:
        extracted = extract_xml(response_text)
    except NoXmlFound as exc:
        return CorrectionOutcome(
            status=CorrectionStatus.FAILED,
            xml=None,
            issues=(Issue(IssueCategory.NO_XML_FOUND, str(exc)),),
            passes_applied=(),
        )
    if not check_wellformed(extracted):
        return CorrectionOutcome(
            status=CorrectionStatus.CLEAN_FIRST_PASS,
            xml=extracted,
            issues=(),
            passes_applied=(),
        )
    repaired_text, issues = repair(extracted)
    applied_set = {PASS_NAMES[i.category] for i in issues if i.repaired}
    passes = tuple(p for p in _PASS_ORDER if p in applied_set)
    repaired_ok = check_wellformed(repaired_text) == []
    status = CorrectionStatus.REPAIRED_LOCALLY if repaired_ok else CorrectionStatus.NEEDS_REPROMPT
    return CorrectionOutcome(
        status=status, xml=repaired_text, issues=tuple(issues), passes_applied=passes
    )


def build_self_correction_prompt(
    bad_text: str, issues: list[Issue] | tuple[Issue, ...], cfg: PromptConfig | None = None
) -> PromptBundle:
    """Re-prompt asking the model to re-emit corrected XML, embedding the
    bad output and the detected problems; same system prompt as generation."""
    if not issues:
        raise EmptyIssueList("self-correction needs at least one issue")
    problem_lines = "\n".join(f"- {i.category.value}: {i.detail}" for i in issues)
    user_text = (
        "The draw.io XML you produced is invalid. Problems found:\n"
        f"{problem_lines}\n\n"
        "Here is the invalid output:\n"
        f"{bad_text}\n\n"
        "Re-emit the corrected diagram as valid draw.io XML. Output only the XML."
    )
    turns = (
        ChatTurn(Role.SYSTEM, build_system_prompt(cfg)),
        ChatTurn(Role.USER, user_text),
    )
    return PromptBundle(turns=turns, token_estimate=estimate_tokens(turns))
