"""Plain SVG rendering of a decomposed layout."""

from __future__ import annotations

from .geometry import Rect, rect_dist_sq, touching

MASK_FILLS = ("#e4572e", "#29335c", "#f3a712")


def _num(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else f"{v:.3f}".rstrip("0").rstrip(".")


def _closest_points(a: Rect, b: Rect):
    """A closest pair of points between two rectangles."""
    def clamp(v, lo, hi):
        return min(max(v, lo), hi)

    # project the overlap interval midpoint (or nearest ends) on each axis
    def axis(a0, a1, b0, b1):
        lo, hi = max(a0, b0), min(a1, b1)
        if lo <= hi:
            m = 0.5 * (lo + hi)
            return m, m
        return (a1, b0) if a1 < b0 else (a0, b1)

    ax, bx = axis(a.x0, a.x1, b.x0, b.x1)
    ay, by = axis(a.y0, a.y1, b.y0, b.y1)
    return (clamp(ax, a.x0, a.x1), clamp(ay, a.y0, a.y1)), (clamp(bx, b.x0, b.x1), clamp(by, b.y0, b.y1))


def conflict_marker(rs, qs):
    """Midpoint of the closest points between two fragments."""
    best = None
    for a in rs:
        for b in qs:
            d = rect_dist_sq(a, b)
            if best is None or d < best[0]:
                best = (d, a, b)
    (px, py), (qx, qy) = _closest_points(best[1], best[2])
    return 0.5 * (px + qx), 0.5 * (py + qy)


def stitch_lines(rs, qs):
    """Shared boundary segments between two touching fragments."""
    out = []
    for a in rs:
        for b in qs:
            if not touching(a, b):
                continue
            if a.x1 == b.x0 or b.x1 == a.x0:
                x = a.x1 if a.x1 == b.x0 else a.x0
                out.append((x, max(a.y0, b.y0), x, min(a.y1, b.y1)))
            elif a.y1 == b.y0 or b.y1 == a.y0:
                y = a.y1 if a.y1 == b.y0 else a.y0
                out.append((max(a.x0, b.x0), y, min(a.x1, b.x1), y))
    return sorted(set(out))


def render_svg(graph, coloring: dict, margin: int = 20) -> str:
    """SVG text for a colored decomposition graph.

    Fragments are ``<rect>`` elements filled by mask; stitches that were used
    (fragments on different masks) are dashed ``<line>`` elements; every conflict (same mask, too close) gets a
    ``<circle class="conflict-marker">`` between the two fragments. The legend
    uses circles so the rect count equals the fragment rectangle count.
    """
    frags = [graph.fragments[k] for k in sorted(graph.fragments)]
    rects = [r for f in frags for r in f.rects]
    if rects:
        x0 = min(r.x0 for r in rects) - margin
        y0 = min(r.y0 for r in rects) - margin
        x1 = max(r.x1 for r in rects) + margin
        y1 = max(r.y1 for r in rects) + margin
    else:
        x0 = y0 = 0
        x1 = y1 = 2 * margin
    legend_h = 40
    w, h = x1 - x0, y1 - y0
    fy = lambda y: y1 - y  # noqa: E731 - flip to screen coordinates

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_num(x0)} 0 {_num(w)} {_num(h + legend_h)}" '
           f'width="{_num(w)}" height="{_num(h + legend_h)}">']
    out.append('<g class="fragments">')
    for f in frags:
        c = coloring[f.key]
        for r in f.rects:
            out.append(f'<rect x="{_num(r.x0)}" y="{_num(fy(r.y1))}" width="{_num(r.width)}" '
                       f'height="{_num(r.height)}" fill="{MASK_FILLS[c]}" data-feature="{f.feature}" '
                       f'data-fragment="{f.index}" data-mask="{c}"/>')
    out.append("</g>")
    out.append('<g class="stitches">')
    for (u, v) in sorted(graph.stitch):
        if coloring[u] == coloring[v]:
            continue
        for mu in graph.members[u]:
            for mv in graph.members[v]:
                if mu[0] != mv[0]:
                    continue
                for ax, ay, bx, by in stitch_lines(graph.fragments[mu].rects, graph.fragments[mv].rects):
                    out.append(f'<line x1="{_num(ax)}" y1="{_num(fy(ay))}" x2="{_num(bx)}" y2="{_num(fy(by))}" '
                               f'stroke="#000" stroke-width="2" stroke-dasharray="4 2"/>')
    out.append("</g>")
    out.append('<g class="conflicts">')
    for (u, v) in sorted(graph.conflict):
        if coloring[u] != coloring[v]:
            continue
        for mu in graph.members[u]:
            for mv in graph.members[v]:
                mx, my = conflict_marker(graph.fragments[mu].rects, graph.fragments[mv].rects)
                out.append(f'<circle class="conflict-marker" cx="{_num(mx)}" cy="{_num(fy(my))}" r="8" '
                           f'fill="none" stroke="#d00" stroke-width="3"/>')
    out.append("</g>")
    ly = h + legend_h / 2
    out.append('<g class="legend" font-family="sans-serif" font-size="12">')
    for c, fill in enumerate(MASK_FILLS):
        cx = x0 + 15 + 90 * c
        out.append(f'<circle class="legend-swatch" cx="{_num(cx)}" cy="{_num(ly)}" r="6" fill="{fill}"/>')
        out.append(f'<text x="{_num(cx + 10)}" y="{_num(ly + 4)}">mask {c}</text>')
    cx = x0 + 15 + 270
    out.append(f'<circle class="legend-swatch" cx="{_num(cx)}" cy="{_num(ly)}" r="6" fill="none" '
               f'stroke="#d00" stroke-width="2"/>')
    out.append(f'<text x="{_num(cx + 10)}" y="{_num(ly + 4)}">conflict</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
