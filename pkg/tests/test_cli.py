import csv
import json
import subprocess
import sys

import pytest

from conftest import DATA
from tpldecomp import cli, pipeline
from tpldecomp.output import load_coloring
from tpldecomp.sdp import parse_sparse

WALKTHROUGH = str(DATA / "walkthrough.json")


def write_layout(path, features, **kw):
    doc = {"units": "nm", "w_min": 24, "s_min": 16, **kw,
           "features": [{"id": k, "rects": v} for k, v in features.items()]}
    path.write_text(json.dumps(doc))
    return str(path)


def test_walkthrough_end_to_end(tmp_path):
    out, rep = tmp_path / "out.json", tmp_path / "rep.json"
    code = cli.run([WALKTHROUGH, "--out", str(out), "--report", str(rep), "--oracle"])
    assert code == 0
    report = json.loads(rep.read_text())
    assert report["format_version"] == 1
    assert (report["conflicts"], report["stitches"]) == (0, 1)
    assert report["oracle_cost"] == pytest.approx(report["cost"])
    assert "runtime_ms" not in report
    doc = json.loads(out.read_text())
    assert doc["format_version"] == 1
    assert len(doc["fragments"]) == report["fragments"]
    assert set(doc["fragments"][0]) == {"feature_id", "fragment_index", "rects", "color"}


def test_coloring_round_trip(tmp_path):
    out = tmp_path / "out.json"
    cli.run([WALKTHROUGH, "--out", str(out)])
    col = load_coloring(out.read_text())
    assert col[("a", 0)] in (0, 1, 2)
    assert len(col) == 12


def test_load_coloring_rejects_unknown_version():
    with pytest.raises(ValueError):
        load_coloring('{"format_version": 99, "fragments": []}')


def test_stdout_when_no_out(capsys):
    assert cli.run([WALKTHROUGH]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["format_version"] == 1
    assert "conflicts=0 stitches=1" in captured.err


def test_empty_layout(tmp_path):
    src = write_layout(tmp_path / "empty.json", {})
    out, rep = tmp_path / "o.json", tmp_path / "r.json"
    assert cli.run([src, "--out", str(out), "--report", str(rep)]) == 0
    assert json.loads(out.read_text())["fragments"] == []
    report = json.loads(rep.read_text())
    assert (report["conflicts"], report["stitches"], report["cost"], report["du_sum"]) == (0, 0, 0, 0)


def test_missing_file(tmp_path, capsys):
    assert cli.run([str(tmp_path / "nope.json")]) == cli.EXIT_READ == 3
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "nope.json" in err


def test_bad_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.run([str(p)]) == cli.EXIT_PARSE == 4
    assert capsys.readouterr().err.count("\n") == 1


def test_invalid_layout(tmp_path):
    src = write_layout(tmp_path / "neg.json", {"x": [[10, 0, 0, 24]]})
    assert cli.run([src]) == 4


def test_unwritable_output(tmp_path):
    assert cli.run([WALKTHROUGH, "--out", str(tmp_path / "missing" / "o.json")]) == cli.EXIT_WRITE == 9


@pytest.mark.parametrize("target, code", [
    ("build_layout_graph", 5),
    ("generate_candidates", 5),
    ("solve_sdp", 6),
    ("merge_component_colorings", 7),
    ("evaluate_coloring", 8),
])
def test_stage_exit_codes(monkeypatch, capsys, tmp_path, target, code):
    def boom(*a, **k):
        raise ValueError("injected")

    monkeypatch.setattr(pipeline, target, boom)
    assert cli.run([WALKTHROUGH, "--out", str(tmp_path / "o.json")]) == code
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "injected" in err


def test_figure_and_bins(tmp_path):
    fig, bins, rep = tmp_path / "f.png", tmp_path / "b.csv", tmp_path / "r.json"
    assert cli.run([WALKTHROUGH, "--out", str(tmp_path / "o.json"), "--figure", str(fig), "--bins-csv", str(bins),
                    "--report", str(rep)]) == 0
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    rows = list(csv.DictReader(bins.open()))
    report = json.loads(rep.read_text())
    assert len(rows) == len(report["du_per_bin"])
    for row, (k, du) in zip(rows, report["du_per_bin"]):
        assert int(row["bin"]) == k
        d = [float(row[c]) for c in ("d0", "d1", "d2")]
        assert float(row["du"]) == pytest.approx((max(d) + 1e-6) / (min(d) + 1e-6), rel=1e-6)
        assert float(row["du"]) == pytest.approx(du, rel=1e-8)


def test_dumps(tmp_path):
    g, s, d = tmp_path / "g.txt", tmp_path / "s.txt", tmp_path / "sdp"
    assert cli.run([WALKTHROUGH, "--out", str(tmp_path / "o.json"), "--dump-graph", str(g),
                    "--dump-sequences", str(s), "--dump-sdp", str(d)]) == 0
    edges = [ln.split() for ln in g.read_text().splitlines() if ln and not ln.startswith("#")]
    assert ["a", "b"] in edges or ["b", "a"] in edges
    assert s.read_text().strip()
    A = parse_sparse((d / "block0_cost.txt").read_text())
    X = parse_sparse((d / "block0_solution.txt").read_text())
    assert A.shape == X.shape == (6, 6)
    assert abs(X.diagonal() - 1).max() < 1e-6


def test_timings_flag(tmp_path):
    rep = tmp_path / "r.json"
    cli.run([WALKTHROUGH, "--out", str(tmp_path / "o.json"), "--report", str(rep), "--timings"])
    assert "coloring" in json.loads(rep.read_text())["runtime_ms"]


def test_byte_identical_reruns(tmp_path):
    names = ("o.json", "r.json", "s.svg", "b.csv")
    runs = []
    for i in range(2):
        d = tmp_path / str(i)
        d.mkdir()
        paths = [str(d / n) for n in names]
        assert cli.run([WALKTHROUGH, "--out", paths[0], "--report", paths[1], "--svg", paths[2],
                        "--bins-csv", paths[3], "--seed", "3"]) == 0
        runs.append([open(p, "rb").read() for p in paths])
    assert runs[0] == runs[1]


def test_flags_reach_options(monkeypatch, tmp_path):
    seen = {}
    real = pipeline.decompose

    def spy(spec, opts):
        seen["opts"] = opts
        return real(spec, opts)

    monkeypatch.setattr(cli, "decompose", spy)
    cli.run([WALKTHROUGH, "--out", str(tmp_path / "o.json"), "--alpha", "0.2", "--beta", "0", "--kappa", "0.5",
             "--no-simplify", "--sdp-gap", "0", "--max-stitch", "2", "--jobs", "2"])
    o = seen["opts"]
    assert (o.alpha, o.beta, o.kappa, o.simplify, o.sdp_gap, o.max_stitch, o.jobs) == \
        (0.2, 0.0, 0.5, False, 0.0, 2, 2)


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "tpldecomp", "--help"], capture_output=True, text=True)
    assert p.returncode == 0 and "--beta" in p.stdout
