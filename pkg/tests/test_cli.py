import json

import pytest

from tuzalab.cli import main
from tuzalab.graph import Graph


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_nu_and_tau_on_a_file(tmp_path, capsys):
    path = tmp_path / "k5.txt"
    Graph.complete(5).write_edgelist(path)
    _, nu = run(capsys, "nu", "--graph", str(path))
    _, tau = run(capsys, "tau", "--graph", str(path), "--bound", "matching")
    assert (nu["nu"], tau["tau"]) == (2, 4)
    assert nu["optimal"] and tau["optimal"]


def test_sampled_graph(capsys):
    _, out = run(capsys, "nu", "--n", "30", "--d", "1.0", "--seed", "3")
    assert out["n"] == 30 and out["nu"] == len(out["triangles"])


def test_missing_graph_arguments():
    with pytest.raises(SystemExit):
        main(["nu", "--n", "30"])


def test_tree_solve(capsys):
    _, out = run(capsys, "tree-solve", "--random", "15", "--seed", "2")
    assert out["nu"] == out["tau"] and out["triangles"] == 15


def test_greedy_cover_fractional(capsys):
    _, g = run(capsys, "greedy", "--n", "200", "--d", "2", "--trials", "2")
    assert len(g["trials"]) == 2
    _, c = run(capsys, "cover", "--n", "200", "--d", "2")
    assert c["trials"][0]["W"] <= c["trials"][0]["edges"]
    _, f = run(capsys, "fractional", "--n", "200", "--d", "5", "--sigma", "0.5")
    assert f["D"] == pytest.approx(7.5)


def test_gw(tmp_path, capsys):
    csv_path = tmp_path / "gw.csv"
    _, out = run(capsys, "gw", "--d", "0.5", "--gamma", "3", "--trials", "200", "--survival",
                 "--csv", str(csv_path))
    assert out["depth_cap"] == 3 and len(out["mean_profile"]) == 3
    assert len(csv_path.read_text().splitlines()) == 201
    assert out["survival"]["target"] == pytest.approx(0.5 ** 0.5)


def test_constants_and_lemma(tmp_path, capsys):
    _, c = run(capsys, "constants", "--d", "4")
    assert c["survival"] == pytest.approx(1 / 3)
    table = tmp_path / "t.csv"
    code, r = run(capsys, "verify-lemma-c", "--grid-step", "0.01", "--table", str(table))
    assert code == 0 and r["verified"]
    assert len(table.read_text().splitlines()) == 1002


def test_experiment_and_sample(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "cover-sweep", "grid": {"n": [60], "d": [1.0]},
                                "trials": 2, "seed": 1,
                                "tolerances": {"valid": {"min": 1}}}))
    code, out = run(capsys, "experiment", "--spec", str(spec), "--out", str(tmp_path / "o"))
    assert code == 0 and out["passed"]
    assert (tmp_path / "o" / "rows.csv").exists()
    g = tmp_path / "g.txt"
    main(["sample", "--n", "20", "--p", "0.3", "--out", str(g)])
    assert Graph.read_edgelist(g).n == 20
