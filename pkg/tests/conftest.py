from __future__ import annotations

import random
from pathlib import Path

import pytest

from drawgen.model import Diagram, Geometry, add_edge, add_vertex, new_empty_diagram

DATA_DIR = Path(__file__).parent / "data"
CORPUS_DIR = DATA_DIR / "corpus"

LABEL_POOL = [
    "Load Balancer",
    "app-server",
    "R & D",
    "x < y",
    "quote \" double",
    "single ' quote",
    "データベース",
    "Cache (Redis)",
    "  spaced  ",
    "review?",
    "a>b",
    "",
]

STYLE_POOL = [
    "",
    "rounded=1;whiteSpace=wrap;html=1;",
    "ellipse;fillColor=#dae8fc;",
    "rhombus;strokeColor=#b85450;",
    "endArrow=classic;html=1;",
]


def build_random_diagram(rng: random.Random, max_vertices: int = 8) -> Diagram:
    """Random but valid diagram built through the public construction ops."""
    d = new_empty_diagram(rng.choice(["Page-1", "flow", "arch & more"]))
    ids: list[str] = []
    for _ in range(rng.randint(1, max_vertices)):
        g = Geometry(
            x=rng.randint(-20, 600),
            y=rng.randint(0, 400),
            width=rng.choice([80, 120, 160.5]),
            height=rng.choice([40, 60, 80]),
        )
        d, cid = add_vertex(d, rng.choice(LABEL_POOL), rng.choice(STYLE_POOL[:4]), g)
        ids.append(cid)
    for _ in range(rng.randint(0, max(0, len(ids) - 1))):
        src, tgt = rng.choice(ids), rng.choice(ids)
        d, _ = add_edge(d, src, tgt, rng.choice(["", "yes", "no", "A & B"]), STYLE_POOL[4])
    return d


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240811)
