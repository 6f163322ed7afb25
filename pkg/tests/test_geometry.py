import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import layout
from tpldecomp.geometry import (LayoutError, Rect, build_density_grid, disjoint_pieces, fragment_bin_density,
                                min_coloring_distance, parse_layout, render_layout, rect_dist_sq)


def test_single_feature_area():
    spec = layout({"a": [[0, 0, 100, 40]]})
    assert len(spec.features) == 1
    assert spec.features[0].area == 4000


def test_empty_feature_list_is_valid():
    spec = parse_layout('{"units": "nm", "w_min": 24, "s_min": 16, "features": []}')
    assert spec.features == ()


def test_duplicate_id_rejected():
    doc = {"units": "nm", "w_min": 24, "s_min": 16,
           "features": [{"id": "a", "rects": [[0, 0, 10, 10]]}, {"id": "a", "rects": [[50, 0, 60, 10]]}]}
    with pytest.raises(LayoutError, match="duplicate"):
        parse_layout(json.dumps(doc))


def test_syntax_error_reports_position():
    with pytest.raises(LayoutError) as err:
        parse_layout('{"units": "nm",\n  "w_min": 24,, }')
    assert err.value.position == (2, 15)
    assert "line 2" in str(err.value)


@pytest.mark.parametrize("doc, msg", [
    ({"units": "nm", "features": []}, "missing process parameters"),
    ({"units": "nm", "w_min": 0, "s_min": 16, "features": []}, "positive"),
    ({"units": "nm", "dis_m": 96, "features": [{"id": "a", "rects": [[0, 0, 0, 10]]}]}, "degenerate"),
    ({"units": "nm", "dis_m": 96, "layers": 2, "features": []}, "unknown top-level"),
    ({"units": "um", "dis_m": 96, "features": []}, "units"),
    ({"units": "nm", "dis_m": 96, "features": [{"id": "a", "rects": [[0, 0, 10.5, 10]]}]}, "integer"),
    ({"units": "nm", "dis_m": 96, "features": [{"id": "a", "rects": [[0, 0, 10, 10], [20, 0, 30, 10]]}]},
     "not connected"),
])
def test_invalid_layouts(doc, msg):
    with pytest.raises(LayoutError, match=msg):
        parse_layout(json.dumps(doc))


def test_min_coloring_distance():
    assert min_coloring_distance(layout({}, 24, 16)) == 96
    assert min_coloring_distance(layout({}, 24, 16, dis_m=100)) == 100


def test_grid_bins_without_overlap():
    spec = layout({"a": [[0, 0, 960, 960]]})
    grid = build_density_grid(spec, 10, 0.0)
    assert grid.bin_side == 960
    assert grid.n_bins == 1


def test_grid_bins_half_overlap():
    spec = layout({"a": [[0, 0, 960, 960]]})
    grid = build_density_grid(spec, 10, 0.5)
    assert grid.stride == 480
    assert grid.n_bins == 9


def test_small_feature_density():
    spec = layout({"box": [[0, 0, 960, 960]], "a": [[100, 100, 200, 140]]})
    grid = build_density_grid(spec, 10, 0.0)
    assert grid.den[("a", 0)] == pytest.approx(4000 / 921600)


def test_fragment_density_cases():
    spec = layout({"a": [[0, 0, 960, 960]], "b": [[960, 0, 1920, 960]]})
    grid = build_density_grid(spec, 10, 0.0)
    assert fragment_bin_density([Rect(5000, 5000, 5010, 5010)], grid) == {}
    assert fragment_bin_density([Rect(0, 0, 960, 960)], grid) == {0: 1.0}
    grid2 = build_density_grid(spec, 10, 0.5)
    d = fragment_bin_density([Rect(400, 100, 600, 200)], grid2)
    full = 200 * 100 / grid2.bin_area
    assert len(d) >= 2
    assert all(0 < v <= full for v in d.values())
    assert any(v < full for v in d.values())


def test_empty_layout_has_no_bins():
    grid = build_density_grid(layout({}), 10, 0.5)
    assert grid.n_bins == 0


rects = st.builds(lambda x, y, w, h: [x, y, x + w, y + h],
                  st.integers(0, 3000), st.integers(0, 3000), st.integers(1, 800), st.integers(1, 800))


@settings(max_examples=60, deadline=None)
@given(st.lists(rects, min_size=1, max_size=6))
def test_area_conservation_over_disjoint_bins(rs):
    spec = layout({f"f{i}": [r] for i, r in enumerate(rs)})
    grid = build_density_grid(spec, 10, 0.0)
    for f in spec.features:
        total = sum(v for (fid, _), v in grid.den.items() if fid == f.id) * grid.bin_area
        assert total == pytest.approx(f.area, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(rects, min_size=1, max_size=5))
def test_disjoint_pieces_preserve_union_area(rs):
    pieces = disjoint_pieces([Rect(*r) for r in rs])
    area = sum(p.area for p, _ in pieces)
    xs = sorted({v for r in rs for v in (r[0], r[2])})
    ys = sorted({v for r in rs for v in (r[1], r[3])})
    brute = 0
    for x0, x1 in zip(xs, xs[1:]):
        for y0, y1 in zip(ys, ys[1:]):
            if any(r[0] <= x0 and x1 <= r[2] and r[1] <= y0 and y1 <= r[3] for r in rs):
                brute += (x1 - x0) * (y1 - y0)
    assert area == brute
    for i, (p, _) in enumerate(pieces):
        for q, _ in pieces[i + 1:]:
            assert min(p.x1, q.x1) <= max(p.x0, q.x0) or min(p.y1, q.y1) <= max(p.y0, q.y0)


@given(st.integers(1, 200), st.integers(1, 200), st.integers(0, 50), st.integers(0, 50))
def test_coloring_distance_monotone(w, s, dw, ds):
    assert min_coloring_distance(layout({}, w + dw, s + ds)) >= min_coloring_distance(layout({}, w, s))


@settings(max_examples=50, deadline=None)
@given(st.lists(rects, min_size=0, max_size=5), st.one_of(st.none(), st.integers(1, 500)))
def test_render_parse_roundtrip(rs, dis_m):
    spec = layout({f"f{i}": [r] for i, r in enumerate(rs)}, dis_m=dis_m)
    assert parse_layout(render_layout(spec)) == spec


@given(rects, rects)
def test_distance_symmetric_and_zero_on_overlap(a, b):
    ra, rb = Rect(*a), Rect(*b)
    assert rect_dist_sq(ra, rb) == rect_dist_sq(rb, ra)
    overlap = min(ra.x1, rb.x1) > max(ra.x0, rb.x0) and min(ra.y1, rb.y1) > max(ra.y0, rb.y0)
    if overlap:
        assert rect_dist_sq(ra, rb) == 0
