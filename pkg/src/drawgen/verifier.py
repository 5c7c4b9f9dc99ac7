"""Semantic checks: does a diagram cover the requested components and
relations, and are all edge endpoints anchored to real cells.

Label matching is normalized (case-fold, trimmed, collapsed whitespace,
markup stripped) and tolerant of paraphrase via bidirectional substring
containment, with exact matches assigned first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import CellKind, Diagram

_TAG_RE = re.compile(r"<[^>]+>")


@dataclass(frozen=True)
class RequirementSpec:
    """What the user asked for: component labels and directed label pairs."""

    required_components: tuple[str, ...] = ()
    required_edges: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        for label in self.required_components:
            if not label.strip():
                raise ValueError("requirement labels must be non-empty")
        known = set(self.required_components)
        for src, tgt in self.required_edges:
            if src not in known or tgt not in known:
                raise ValueError(f"edge ({src!r}, {tgt!r}) references an unlisted component")

    def is_empty(self) -> bool:
        return not self.required_components and not self.required_edges


@dataclass(frozen=True)
class CoverageReport:
    matched: tuple[tuple[str, str], ...]  # (required label, cell id)
    missing: tuple[str, ...]
    coverage: float
    edge_matched: tuple[tuple[tuple[str, str], str], ...]  # ((src, tgt), edge cell id)
    edge_missing: tuple[tuple[str, str], ...]
    dangling_edges: tuple[tuple[str, str], ...]  # (edge id, bad endpoint ref)
    vacuous: bool = False


def normalize_label(label: str) -> str:
    """Case-folded, markup-stripped, whitespace-collapsed form of a label."""
    text = _TAG_RE.sub(" ", label)
    return " ".join(text.casefold().split())


def _labels_match(required: str, actual: str) -> bool:
    if required == actual:
        return True
    if not required or not actual:
        return False
    return required in actual or actual in required


def check_component_coverage(d: Diagram, spec: RequirementSpec) -> CoverageReport:
    """Match required labels to vertices: exact first, then substring,
    greedily in spec order; each vertex satisfies at most one requirement.

    Ties are broken by (normalized label, cell id), so the result does not
    depend on cell order.
    """
    vertices = [(c.id, normalize_label(c.label)) for c in d.cells if c.kind is CellKind.VERTEX]
    used: set[str] = set()
    assigned: dict[int, str] = {}  # index in required_components -> cell id

    requirements = [(i, normalize_label(label)) for i, label in enumerate(spec.required_components)]
    for exact in (True, False):
        for i, req in requirements:
            if i in assigned:
                continue
            candidates = [
                (norm, cid)
                for cid, norm in vertices
                if cid not in used and (req == norm if exact else _labels_match(req, norm))
            ]
            if candidates:
                _, cid = min(candidates)
                assigned[i] = cid
                used.add(cid)

    matched = tuple(
        (label, assigned[i]) for i, label in enumerate(spec.required_components) if i in assigned
    )
    missing = tuple(
        label for i, label in enumerate(spec.required_components) if i not in assigned
    )
    coverage = (
        len(matched) / len(spec.required_components) if spec.required_components else 1.0
    )

    cell_for_label = {label: cid for label, cid in matched}
    edge_matched: list[tuple[tuple[str, str], str]] = []
    edge_missing: list[tuple[str, str]] = []
    for src_label, tgt_label in spec.required_edges:
        src_id = cell_for_label.get(src_label)
        tgt_id = cell_for_label.get(tgt_label)
        found = None
        if src_id and tgt_id:
            for c in d.cells:
                if c.kind is CellKind.EDGE and c.source_id == src_id and c.target_id == tgt_id:
                    found = c.id
                    break
        if found:
            edge_matched.append(((src_label, tgt_label), found))
        else:
            edge_missing.append((src_label, tgt_label))

    return CoverageReport(
        matched=matched,
        missing=missing,
        coverage=coverage,
        edge_matched=tuple(edge_matched),
        edge_missing=tuple(edge_missing),
        dangling_edges=tuple(check_edge_endpoints(d)),
        vacuous=spec.is_empty(),
    )


def check_edge_endpoints(d: Diagram) -> list[tuple[str, str]]:
    """One entry per edge source/target attribute naming a non-existent cell id."""
    ids = {c.id for c in d.cells}
    dangling: list[tuple[str, str]] = []
    for c in d.cells:
        if c.kind is not CellKind.EDGE:
            continue
        for ref in (c.source_id, c.target_id):
            if ref is not None and ref not in ids:
                dangling.append((c.id, ref))
    return dangling


def semantic_accuracy(d: Diagram, spec: RequirementSpec) -> float:
    """(matched components + matched edges) / (required components + edges).

    1.0 for an empty spec (vacuously covered).
    """
    if spec.is_empty():
        return 1.0
    report = check_component_coverage(d, spec)
    total = len(spec.required_components) + len(spec.required_edges)
    return (len(report.matched) + len(report.edge_matched)) / total
