"""Serialized artifacts: colored fragments, per-bin table, debug dumps."""

from __future__ import annotations

import csv
import io
import json

from .metrics import FORMAT_VERSION, per_bin_densities
from .sdp import dump_sparse


def coloring_document(result) -> dict:
    g = result.graph
    frags = []
    for k in sorted(g.fragments):
        f = g.fragments[k]
        frags.append({
            "feature_id": f.feature,
            "fragment_index": f.index,
            "rects": [list(r) for r in f.rects],
            "color": result.coloring[k],
        })
    return {"format_version": FORMAT_VERSION, "fragments": frags}


def coloring_text(result) -> str:
    doc = coloring_document(result)
    lines = ['{', f'  "format_version": {doc["format_version"]},', '  "fragments": [']
    rows = [json.dumps(fr, separators=(", ", ": ")) for fr in doc["fragments"]]
    lines.append(",\n".join("    " + r for r in rows))
    lines += ["  ]", "}"]
    if not rows:
        lines = ['{', f'  "format_version": {doc["format_version"]},', '  "fragments": []', '}']
    return "\n".join(lines) + "\n"


def load_coloring(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported coloring format_version {doc.get('format_version')!r}")
    return {(fr["feature_id"], fr["fragment_index"]): fr["color"] for fr in doc["fragments"]}


def bins_csv(result) -> str:
    """One row per bin with density: index, window, the three mask densities, DU."""
    d, bins = per_bin_densities(result.graph, result.coloring)
    du = dict(result.report.du_per_bin)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin", "x0", "y0", "x1", "y1", "d0", "d1", "d2", "du"])
    for k, row in zip(bins, d):
        if row.sum() <= 0:
            continue
        b = result.grid.bin(k)
        w.writerow([k, f"{b.x0:g}", f"{b.y0:g}", f"{b.x1:g}", f"{b.y1:g}",
                    *(f"{x:.9g}" for x in row), f"{du[k]:.9g}"])
    return buf.getvalue()


def sdp_dumps(result):
    """(file name, text) pairs for each relaxation that was solved."""
    out = []
    for i, (A, X) in enumerate(result.sdp_matrices):
        out.append((f"block{i}_cost.txt", dump_sparse(A)))
        out.append((f"block{i}_solution.txt", dump_sparse(X)))
    return out
