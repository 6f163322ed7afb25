import json
from pathlib import Path

import pytest

from tpldecomp.decomp_graph import DecompositionGraph
from tpldecomp.geometry import Feature, Rect, parse_layout

DATA = Path(__file__).parent / "data"


def layout(features, w_min=24, s_min=16, dis_m=None):
    """LayoutSpec from {id: [[x0, y0, x1, y1], ...]}."""
    doc = {"units": "nm", "w_min": w_min, "s_min": s_min,
           "features": [{"id": k, "rects": v} for k, v in features.items()]}
    if dis_m is not None:
        doc["dis_m"] = dis_m
    return parse_layout(json.dumps(doc))


def feature(fid, *rects):
    return Feature(fid, tuple(Rect(*r) for r in rects))


def graph(n, conflicts=(), stitches=(), densities=None):
    return DecompositionGraph.from_edges(n, conflicts, stitches, densities)


def walkthrough_graph():
    """Decomposition graph of the six-fragment walkthrough: a1 a2 b c d1 d2."""
    a1, a2, b, c, d1, d2 = range(6)
    conf = [(a1, b), (a1, d1), (a1, d2), (a2, b), (a2, c), (b, c), (b, d1), (b, d2), (c, d1), (c, d2)]
    return graph(6, conf, [(a1, a2), (d1, d2)])


@pytest.fixture
def walkthrough_spec():
    return parse_layout((DATA / "walkthrough.json").read_text())
