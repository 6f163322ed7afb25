"""Command-line front end: layout JSON in, colored fragments, report and pictures out."""

from __future__ import annotations

import argparse
import os
import sys

from .geometry import LayoutError, parse_layout
from .layout_graph import dump_edge_list
from .output import bins_csv, coloring_text, sdp_dumps
from .pipeline import DecomposerOptions, StageError, decompose
from .stitch import dump_sequences
from .svg import render_svg

EXIT_READ = 3
EXIT_PARSE = 4
STAGE_EXIT = {
    "density": 5,
    "layout-graph": 5,
    "stitch": 5,
    "decomposition-graph": 5,
    "coloring": 6,
    "merge": 7,
    "recovery": 7,
    "evaluate": 8,
}
EXIT_WRITE = 9


def build_parser():
    d = DecomposerOptions()
    p = argparse.ArgumentParser(prog="tpldecomp",
                                description="Density-balanced triple patterning layout decomposition.")
    p.add_argument("layout", help="input layout (JSON)")
    p.add_argument("--out", metavar="PATH", help="colored fragments (JSON); stdout if omitted")
    p.add_argument("--report", metavar="PATH", help="conflict/stitch/density report (JSON)")
    p.add_argument("--svg", metavar="PATH", help="decomposed layout as SVG")
    p.add_argument("--figure", metavar="PATH", help="PNG with the layout and a per-bin DU map")
    p.add_argument("--bins-csv", metavar="PATH", help="per-bin mask densities and DU (CSV)")
    p.add_argument("--dump-graph", metavar="PATH", help="layout conflict graph as an edge list")
    p.add_argument("--dump-sequences", metavar="PATH", help="projection sequences, one per line")
    p.add_argument("--dump-sdp", metavar="DIR", help="cost and solution matrices of each relaxation")
    p.add_argument("--alpha", type=float, default=d.alpha, help="stitch weight (default %(default)s)")
    p.add_argument("--beta", type=float, default=d.beta, help="density-balance weight (default %(default)s)")
    p.add_argument("--bin-factor", type=float, default=d.bin_factor,
                   help="bin side in units of the coloring distance (default %(default)s)")
    p.add_argument("--bin-overlap", type=float, default=d.overlap,
                   help="fractional overlap of neighboring bins (default %(default)s)")
    p.add_argument("--th-union", type=float, default=d.th_union)
    p.add_argument("--th-separate", type=float, default=d.th_separate)
    p.add_argument("--kappa", type=float, default=d.kappa,
                   help="weight of relaxed-solution affinity in the mapping graph (default %(default)s)")
    p.add_argument("--backtrack-limit", type=int, default=d.backtrack_limit)
    p.add_argument("--max-stitch", type=int, default=d.max_stitch, help="stitch candidates per feature")
    p.add_argument("--sdp-tol", type=float, default=d.sdp_tol)
    p.add_argument("--sdp-max-iter", type=int, default=d.sdp_max_iter)
    p.add_argument("--sdp-gap", type=float, default=d.sdp_gap,
                   help="also stop the relaxation once the certified gap is below this fraction of "
                        "the objective (default %(default)s; 0 = absolute tolerance only)")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--jobs", type=int, default=d.jobs, help="worker processes for block coloring")
    p.add_argument("--no-simplify", action="store_true",
                   help="color the whole decomposition graph at once (no peeling, splitting or clustering)")
    p.add_argument("--oracle", action="store_true",
                   help="add the exhaustive optimum to the report (small inputs only)")
    p.add_argument("--timings", action="store_true", help="include per-stage runtimes in the report")
    return p


def _write(path, text, binary=False):
    mode = "wb" if binary else "w"
    with open(path, mode) as fh:
        fh.write(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.layout) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"tpldecomp: cannot read {args.layout}: {exc.strerror}", file=sys.stderr)
        return EXIT_READ
    try:
        spec = parse_layout(text)
    except LayoutError as exc:
        print(f"tpldecomp: {args.layout}: {exc}", file=sys.stderr)
        return EXIT_PARSE

    opts = DecomposerOptions(
        alpha=args.alpha, beta=args.beta, bin_factor=args.bin_factor, overlap=args.bin_overlap,
        th_union=args.th_union, th_separate=args.th_separate, kappa=args.kappa,
        backtrack_limit=args.backtrack_limit, max_stitch=args.max_stitch, sdp_tol=args.sdp_tol,
        sdp_max_iter=args.sdp_max_iter, sdp_gap=args.sdp_gap, seed=args.seed,
        simplify=not args.no_simplify, jobs=args.jobs, oracle=args.oracle,
    )
    try:
        result = decompose(spec, opts)
    except StageError as exc:
        print(f"tpldecomp: {exc}", file=sys.stderr)
        return STAGE_EXIT.get(exc.stage, 8)

    try:
        if args.out:
            _write(args.out, coloring_text(result))
        else:
            sys.stdout.write(coloring_text(result))
        if args.report:
            _write(args.report, result.report.to_text(timings=args.timings))
        if args.svg:
            _write(args.svg, render_svg(result.graph, result.coloring))
        if args.bins_csv:
            _write(args.bins_csv, bins_csv(result))
        if args.dump_graph:
            _write(args.dump_graph, dump_edge_list(result.layout_graph))
        if args.dump_sequences:
            _write(args.dump_sequences, dump_sequences(result.sequences))
        if args.dump_sdp:
            os.makedirs(args.dump_sdp, exist_ok=True)
            for name, body in sdp_dumps(result):
                _write(os.path.join(args.dump_sdp, name), body)
        if args.figure:
            from .plotting import render_figure

            render_figure(result, args.figure)
    except OSError as exc:
        print(f"tpldecomp: cannot write output: {exc}", file=sys.stderr)
        return EXIT_WRITE
    rep = result.report
    print(f"conflicts={rep.conflicts} stitches={rep.stitches} cost={rep.cost:g} du_sum={rep.du_sum:.6g}",
          file=sys.stderr)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
