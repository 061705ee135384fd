import csv
import io
import json
import math

import pytest

from xnet.cli import main
from xnet.deformation import scenario_library, track_types
from xnet.errors import GuardError
from xnet.svg import network_svg, timeline_svg
from xnet.steiner import smt
from xnet.topology import BoundedTree, Network


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def square_file(tmp_path):
    path = tmp_path / "square.json"
    path.write_text(json.dumps({"dimension": 2, "metric": 2, "points": [[0, 0], [1, 0], [1, 1], [0, 1]]}))
    return str(path)


def test_smt_on_square(capsys, square_file):
    rep = report(capsys, "smt", square_file)
    assert rep["length"] == pytest.approx(1 + math.sqrt(3), rel=1e-11)
    assert len(rep["types"]) == 2
    assert rep["tolerances"] == {"tau_tie": 1e-9, "tau_ang": 1e-6, "tau_grad": 1e-10, "eps_deg": 1e-9, "mu_margin": 1e-6}


def test_fill_on_distance_file(capsys, tmp_path):
    path = tmp_path / "d.txt"
    path.write_text("3\n0 3 4\n3 0 5\n4 5 0\n")
    rep = report(capsys, "fill", str(path))
    assert rep["mf"] == 6 and rep["mf_exact"] == "6"
    assert rep["minimax_check"]["results"][0]["status"] == "equal"


def test_mst_and_variation(capsys, square_file):
    rep = report(capsys, "mst", square_file, "--tie", "1e-6")
    assert rep["length"] == 3 and len(rep["types"]) == 4 and rep["tolerances"]["tau_tie"] == 1e-6
    rep = report(capsys, "variation", "--A", "0,0", "--B", "1,0", "--u", "0,0", "--v", "0,1")
    assert rep["dl_dt"] == 0 and rep["d2l_dt2"] == 1
    assert 1.8 <= rep["finite_differences"]["second_order"] <= 2.2


def test_numbers_have_twelve_significant_digits(capsys, square_file):
    _, out, _ = run(capsys, "smt", square_file)
    assert '"length": 2.73205080757,' in out
    assert "-0.0" not in report_text(capsys, "variation", "--A", "0,0", "--B", "1,0", "--u", "0,0", "--v", "0,1")


def report_text(capsys, *argv):
    return run(capsys, *argv)[1]


def test_deform_single_flip_across_t0(capsys):
    _, out, _ = run(capsys, "deform", "scenario:square-transversal", "--family", "smt", "--csv")
    rows = list(csv.reader(io.StringIO(out)))[1:]
    sets = [(float(t), frozenset(ids.split(";"))) for t, _, ids in rows]
    flips, ref = [], sets[0][1]
    for t, cur in sets[1:]:
        if not (cur & ref):
            flips.append(t)
            ref = cur
    assert len(flips) == 1 and 0 < flips[0] < 1e-6
    assert len(dict(sets)[0.0]) == 2
    assert all(len(cur) == 1 for t, cur in sets if abs(t) > 1e-6)


def test_scenario_round_trip_gives_identical_csv(capsys, tmp_path):
    out = tmp_path / "scenes"
    report(capsys, "scenario", "figure1", "--samples", "128", "--out", str(out))
    scene_path = str(out / "figure1.json")
    _, direct, _ = run(capsys, "deform", "scenario:figure1", "--family", "smt", "--samples", "128", "--csv")
    _, again, _ = run(capsys, "deform", scene_path, "--family", "smt", "--csv")
    assert direct == again and direct.startswith("t,L_min,I_min\n")


def test_deform_writes_artifacts(capsys, tmp_path):
    out = tmp_path / "o"
    rep = report(capsys, "deform", "scenario:figure2", "--family", "smt", "--samples", "256", "--out", str(out))
    assert rep["right_set"] == "not constant at resolution" and rep["flip_count_right_window"] >= 10
    assert {p.name for p in out.iterdir()} == {"deform.json", "timeline.csv", "timeline.svg"}
    svg = (out / "timeline.svg").read_text()
    assert svg.count('stroke="red"') == len(rep["flip_locations"])


def test_artifacts_are_deterministic(capsys, tmp_path, square_file):
    texts = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        report(capsys, "smt", square_file, "--out", str(out))
        texts.append(((out / "smt.svg").read_text(), (out / "smt.json").read_text()))
    assert texts[0] == texts[1]


def test_exit_codes(capsys, tmp_path, square_file):
    code, _, err = run(capsys, "smt", str(tmp_path / "missing.json"))
    assert code == 1 and "missing.json" in err
    bad = tmp_path / "bad.json"
    bad.write_text('{"points": [[0, 0],\n [1, 1, 2]]}')
    code, _, err = run(capsys, "mst", str(bad))
    assert code == 1 and "points[1]" in err
    bad.write_text("{\n  oops")
    code, _, err = run(capsys, "mst", str(bad))
    assert code == 1 and ":2:" in err
    code, _, err = run(capsys, "fill", square_file, "--k-max", "4")
    assert code == 2 and "refused" in err
    eight = tmp_path / "eight.json"
    eight.write_text(json.dumps({"points": [[i, i * i] for i in range(8)]}))
    code, _, _ = run(capsys, "smt", str(eight))
    assert code == 2
    dist = tmp_path / "d.txt"
    dist.write_text("2\n0 1\n2 0\n")
    code, _, err = run(capsys, "fill", str(dist))
    assert code == 1 and "symmetric" in err


def test_svg_drawings():
    res = smt([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    svg = network_svg(res.minimizers[0][1], "SMT")
    assert svg.count("<line") == 3 and svg.count("<circle") == 4
    assert svg == network_svg(res.minimizers[0][1], "SMT")
    tree = BoundedTree.from_edges([(0, 1)], range(2))
    with pytest.raises(GuardError):
        network_svg(Network(tree, {0: [0, 0, 0], 1: [1, 0, 0]}))
    tl = track_types(scenario_library("square-transversal", 8), "mst")
    assert timeline_svg(tl, [0.01], "t").count('stroke="red"') == 1


def test_three_dimensional_scene_skips_drawing(capsys, tmp_path):
    scene = tmp_path / "s3.json"
    scene.write_text(json.dumps({"points": [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]}))
    rep = report(capsys, "smt", str(scene), "--out", str(tmp_path / "o3"))
    assert rep["n"] == 4
    assert not (tmp_path / "o3" / "smt.svg").exists()
