#!/usr/bin/env python3
"""Regenerate bundled bench data and the test corpus.

Builds every diagram through the public construction ops and the layout
engine, so the files are canonical serializer output. Run from the repo
root after changing the serializer or the suite definition:

    python3 scripts/make_data.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parents[1] / "src"))

from drawgen.layout import LayoutConfig, Orientation, layout
from drawgen.model import Diagram, Geometry, add_edge, add_vertex, new_empty_diagram
from drawgen.xml_codec import serialize

ROOT = Path(__file__).parents[1]
DATA = ROOT / "src" / "drawgen" / "data"
CORPUS = ROOT / "tests" / "data" / "corpus"

VERTEX_STYLE = "rounded=1;whiteSpace=wrap;html=1;"
DECISION_STYLE = "rhombus;whiteSpace=wrap;html=1;"
EDGE_STYLE = "endArrow=classic;html=1;"

# (id, category, prompt-with-distinctive-phrase, components, edges)
TASKS = [
    (
        "t01-webshop",
        "infrastructure",
        "Draw an AWS architecture diagram for a small webshop: a Load Balancer "
        "in front of a Web Server that reads from a Database.",
        ["Load Balancer", "Web Server", "Database"],
        [("Load Balancer", "Web Server"), ("Web Server", "Database")],
    ),
    (
        "t02-api-platform",
        "infrastructure",
        "Create an infrastructure diagram for our api-platform: a CDN in front "
        "of an API Gateway that routes to an Auth Service and a User Service; "
        "the User Service reads from a Database.",
        ["CDN", "API Gateway", "Auth Service", "User Service", "Database"],
        [
            ("CDN", "API Gateway"),
            ("API Gateway", "Auth Service"),
            ("API Gateway", "User Service"),
            ("User Service", "Database"),
        ],
    ),
    (
        "t03-replicated-db",
        "infrastructure",
        "Diagram a hardened deployment with database replication: Client "
        "traffic passes a Firewall to the App Server, which writes to a "
        "Primary DB that replicates to a Replica DB; Monitoring watches the "
        "App Server.",
        ["Client", "Firewall", "App Server", "Primary DB", "Replica DB", "Monitoring"],
        [
            ("Client", "Firewall"),
            ("Firewall", "App Server"),
            ("App Server", "Primary DB"),
            ("Primary DB", "Replica DB"),
            ("Monitoring", "App Server"),
        ],
    ),
    (
        "t04-queue-workers",
        "infrastructure",
        "Draw the queue-workers architecture: an API Gateway calls the "
        "Service, the Service writes to the Database and pushes jobs to a "
        "Queue, a Worker consumes the Queue and writes results to the "
        "Database.",
        ["API Gateway", "Service", "Database", "Queue", "Worker"],
        [
            ("API Gateway", "Service"),
            ("Service", "Database"),
            ("Service", "Queue"),
            ("Queue", "Worker"),
            ("Worker", "Database"),
        ],
    ),
    (
        "t05-order-steps",
        "flowchart",
        "Draw a flowchart of the order-steps process: Start, then Validate "
        "Input, then Process Order, then Send Confirmation, then End.",
        ["Start", "Validate Input", "Process Order", "Send Confirmation", "End"],
        [
            ("Start", "Validate Input"),
            ("Validate Input", "Process Order"),
            ("Process Order", "Send Confirmation"),
            ("Send Confirmation", "End"),
        ],
    ),
    (
        "t06-stock-check",
        "flowchart",
        "Draw the stock-check flow: Start leads to Check Stock, then to the "
        "decision In Stock?, which branches to Ship Order or Backorder, both "
        "ending at End.",
        ["Start", "Check Stock", "In Stock?", "Ship Order", "Backorder", "End"],
        [
            ("Start", "Check Stock"),
            ("Check Stock", "In Stock?"),
            ("In Stock?", "Ship Order"),
            ("In Stock?", "Backorder"),
            ("Ship Order", "End"),
            ("Backorder", "End"),
        ],
    ),
    (
        "t07-retry-loop",
        "flowchart",
        "Draw a flowchart for the retry-loop handler: Receive Request flows "
        "to Parse, Parse flows to the decision Retry?, Retry? loops back to "
        "Parse and also flows on to Respond.",
        ["Receive Request", "Parse", "Retry?", "Respond"],
        [
            ("Receive Request", "Parse"),
            ("Parse", "Retry?"),
            ("Retry?", "Parse"),
            ("Retry?", "Respond"),
        ],
    ),
    (
        "t08-exec-team",
        "orgchart",
        "Draw the exec-team org chart: the CEO has a CTO and a CFO; an "
        "Engineer reports to the CTO and an Accountant reports to the CFO.",
        ["CEO", "CTO", "CFO", "Engineer", "Accountant"],
        [("CEO", "CTO"), ("CEO", "CFO"), ("CTO", "Engineer"), ("CFO", "Accountant")],
    ),
    (
        "t09-two-managers",
        "orgchart",
        "Draw the two-managers org chart: a Director with Manager A and "
        "Manager B underneath.",
        ["Director", "Manager A", "Manager B"],
        [("Director", "Manager A"), ("Director", "Manager B")],
    ),
    (
        "t10-landing-page",
        "wireframe",
        "Create a landing-page wireframe with a Header, a Search Box inside "
        "the header area, a Sidebar, a Content Area and a Footer.",
        ["Header", "Search Box", "Sidebar", "Content Area", "Footer"],
        [],
    ),
]

# t06 ships a deliberately malformed response (missing final close tag);
# t04's response omits the Worker and its two edges.
MALFORMED_TASK = "t06-stock-check"
DEGRADED_TASK = "t04-queue-workers"
DEGRADED_OMIT = "Worker"


def build_diagram(components, edges, orientation=Orientation.HORIZONTAL, name="Page-1"):
    d = new_empty_diagram(name)
    ids: dict[str, str] = {}
    for label in components:
        style = DECISION_STYLE if label.endswith("?") else VERTEX_STYLE
        d, cid = add_vertex(d, label, style, Geometry(0, 0, 120, 60))
        ids[label] = cid
    for src, tgt in edges:
        d, _ = add_edge(d, ids[src], ids[tgt], style=EDGE_STYLE)
    # Drop the placeholder geometry and let the layout engine place boxes.
    from dataclasses import replace

    cells = tuple(
        replace(c, geometry=None) if c.id in ids.values() else c for c in d.cells
    )
    return layout(Diagram(name=name, cells=cells), LayoutConfig(orientation=orientation))


MATCHERS = {
    "t01-webshop": "small webshop",
    "t02-api-platform": "api-platform",
    "t03-replicated-db": "database replication",
    "t04-queue-workers": "queue-workers",
    "t05-order-steps": "order-steps",
    "t06-stock-check": "stock-check",
    "t07-retry-loop": "retry-loop",
    "t08-exec-team": "exec-team",
    "t09-two-managers": "two-managers",
    "t10-landing-page": "landing-page",
}


def write_bench() -> None:
    tasks_dir = DATA / "bench" / "tasks"
    refs_dir = DATA / "bench" / "references"
    tasks_dir.mkdir(parents=True, exist_ok=True)
    refs_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for task_id, category, prompt, components, edges in TASKS:
        orientation = Orientation.VERTICAL if category == "orgchart" else Orientation.HORIZONTAL
        reference = build_diagram(components, edges, orientation)
        (refs_dir / f"{task_id}.drawio.xml").write_text(serialize(reference), encoding="utf-8")
        (tasks_dir / f"{task_id}.json").write_text(
            json.dumps(
                {
                    "id": task_id,
                    "category": category,
                    "prompt": prompt,
                    "requirements": {
                        "components": components,
                        "edges": [list(pair) for pair in edges],
                    },
                    "reference_xml": f"../references/{task_id}.drawio.xml",
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )

        if task_id == DEGRADED_TASK:
            kept = [c for c in components if c != DEGRADED_OMIT]
            kept_edges = [e for e in edges if DEGRADED_OMIT not in e]
            response = serialize(build_diagram(kept, kept_edges, orientation))
        else:
            response = serialize(reference)
        if task_id == MALFORMED_TASK:
            response = response.replace("</mxfile>\n", "")
        entries.append(
            {"match": MATCHERS[task_id], "response": response, "chunk_size": 256}
        )
    (DATA / "bench" / "mock_script.json").write_text(
        json.dumps({"version": 1, "entries": entries}, indent=2) + "\n", encoding="utf-8"
    )


def write_demo_mock() -> None:
    """Coordinate-free A -> B -> C response: exercises the layout engine."""
    d = new_empty_diagram()
    ids = []
    for label in "ABC":
        d, cid = add_vertex(d, label, VERTEX_STYLE, Geometry(0, 0, 120, 60))
        ids.append(cid)
    d, _ = add_edge(d, ids[0], ids[1], style=EDGE_STYLE)
    d, _ = add_edge(d, ids[1], ids[2], style=EDGE_STYLE)
    from dataclasses import replace

    cells = tuple(replace(c, geometry=None) if c.id in ids else c for c in d.cells)
    response = serialize(Diagram(name="Page-1", cells=cells))
    (DATA / "mock").mkdir(parents=True, exist_ok=True)
    (DATA / "mock" / "flowchart.json").write_text(
        json.dumps({"version": 1, "entries": [{"match": "", "response": response}]}, indent=2)
        + "\n",
        encoding="utf-8",
    )


def write_corpus() -> None:
    CORPUS.mkdir(parents=True, exist_ok=True)
    specials = {
        "infra_entities": (
            ["R & D Cluster", 'Cache "hot"', "Store's DB"],
            [("R & D Cluster", 'Cache "hot"'), ('Cache "hot"', "Store's DB")],
        ),
        "flow_unicode": (
            ["開始", "処理 <fast>", "終了"],
            [("開始", "処理 <fast>"), ("処理 <fast>", "終了")],
        ),
        "org_isolated": (["Board", "Advisor", "Auditor"], [("Board", "Advisor")]),
        "wire_grid": (["Nav", "Hero", "Cards", "CTA", "Legal"], []),
    }
    index = 0
    for task_id, category, _prompt, components, edges in TASKS:
        orientation = Orientation.VERTICAL if category == "orgchart" else Orientation.HORIZONTAL
        d = build_diagram(components, edges, orientation, name=f"{category}-{index:02d}")
        (CORPUS / f"{category}_{task_id}.drawio.xml").write_text(
            serialize(d), encoding="utf-8"
        )
        index += 1
    for stem, (components, edges) in specials.items():
        d = build_diagram(components, edges, name=stem)
        (CORPUS / f"{stem}.drawio.xml").write_text(serialize(d), encoding="utf-8")
        index += 1
    # Variants with explicit float geometry and edge labels.
    for n in range(6):
        d = new_empty_diagram(f"variant-{n}")
        d, a = add_vertex(d, f"stage {n}", VERTEX_STYLE, Geometry(40.5 + n, 40, 120, 60))
        d, b = add_vertex(d, f"stage {n + 1}", "", Geometry(220, 160.25, 100, 40))
        d, c = add_vertex(d, "fan-out", "ellipse;", Geometry(400, 40, 80, 80))
        d, _ = add_edge(d, a, b, label="yes", style=EDGE_STYLE)
        d, _ = add_edge(d, a, c, label="no & maybe", style=EDGE_STYLE)
        (CORPUS / f"variant_{n}.drawio.xml").write_text(serialize(d), encoding="utf-8")
        index += 1
    print(f"wrote {index} corpus files")


if __name__ == "__main__":
    write_bench()
    write_demo_mock()
    write_corpus()
    print("bench + mock + corpus data regenerated")
