import csv
import json
import math

import pytest

from tuzalab import harness
from tuzalab.harness import ExperimentSpec, emit_report, run_experiment
from tuzalab.rng import derive_seed


def small_spec(kind="greedy-sweep", **kw):
    base = {"kind": kind, "grid": {"n": [80], "d": [1.0, 2.0]}, "trials": 3, "seed": 5}
    base.update(kw)
    return ExperimentSpec.from_dict(base)


@pytest.mark.parametrize("bad", [
    {"kind": "nope", "grid": {"n": [10], "d": [1]}},
    {"kind": "greedy-sweep", "grid": {}},
    {"kind": "greedy-sweep", "grid": {"n": [10], "d": []}},
    {"kind": "greedy-sweep", "grid": {"n": [10], "d": [1], "p": [0.1]}},
    {"kind": "greedy-sweep", "grid": {"d": [1]}},
    {"kind": "greedy-sweep", "grid": {"n": [10], "q": [1]}},
    {"kind": "greedy-sweep", "grid": {"n": [10], "d": [1]}, "trials": 0},
    {"kind": "greedy-sweep", "grid": {"n": [10], "d": [1]}, "colour": "red"},
])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict(bad)


def test_cells_follow_the_key_order():
    spec = ExperimentSpec.from_dict({"kind": "greedy-sweep", "grid": {"d": [1, 2], "n": [10, 20]}})
    assert spec.cells() == [{"n": 10, "d": 1}, {"n": 10, "d": 2}, {"n": 20, "d": 1}, {"n": 20, "d": 2}]
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec


def test_rows_replay_individually():
    spec = small_spec()
    rec = run_experiment(spec)
    assert [(r["cell"], r["trial"]) for r in rec.rows] == [(c, t) for c in range(2) for t in range(3)]
    row = rec.rows[4]
    assert row["seed"] == derive_seed(5, 1, 1)
    again = harness.trial_greedy(spec.cells()[1], row["seed"], {})
    assert all(again[k] == row[k] for k in again)


def test_threads_do_not_change_rows(tmp_path):
    spec = small_spec("cover-sweep")
    a = emit_report([run_experiment(spec)], tmp_path / "a")
    b = emit_report([run_experiment(spec, threads=2)], tmp_path / "b")
    assert a["rows"].read_bytes() == b["rows"].read_bytes()


def test_empty_report_has_a_header(tmp_path):
    paths = emit_report([], tmp_path)
    assert paths["rows"].read_text() == "cell,trial,seed\n"
    assert json.loads(paths["summary"].read_text()) == []
    assert paths["constants"].read_text().startswith("d,xi,psi,")


def test_tuza_rows_and_aggregates(tmp_path):
    spec = ExperimentSpec.from_dict({"kind": "tuza-audit", "grid": {"n": [25], "d": [1.0]},
                                     "trials": 8, "seed": 1,
                                     "tolerances": {"violations": {"max": 0}}})
    rec = harness.run_tuza_audit(spec)
    assert rec.passed
    paths = emit_report([rec], tmp_path)
    with open(paths["rows"]) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == harness.TUZA_COLUMNS
    for r in rows:
        nu, tau = int(r["nu"]), int(r["tau"])
        assert tau <= 2 * nu
        if nu:
            assert float(r["ratio"]) == tau / nu
    # the summary statistics can be recomputed from the CSV alone
    summary = json.loads(paths["summary"].read_text())[0]
    taus = [int(r["tau"]) for r in rows]
    assert summary["aggregates"][0]["stats"]["tau"]["mean"] == pytest.approx(sum(taus) / len(taus))
    assert summary["aggregates"][0]["violations"] == 0


def test_checks_against_references():
    spec = small_spec(tolerances={"matching_frac": {"ref": "xi", "abs": 1.0},
                                  "covered_frac": {"min": 2.0}})
    rec = run_experiment(spec)
    by = {(c["cell"], c["stat"]): c for c in rec.checks}
    assert by[(0, "matching_frac")]["passed"]
    assert by[(0, "matching_frac")]["reference"] == pytest.approx(harness.analytics.xi(1.0))
    assert not by[(0, "covered_frac")]["passed"]
    assert rec.passed is False
    assert run_experiment(small_spec()).passed is None


def test_runner_kind_guards():
    with pytest.raises(ValueError):
        harness.run_tuza_audit(small_spec())
    with pytest.raises(ValueError):
        harness.run_small_d_gap(ExperimentSpec.from_dict(
            {"kind": "small-d-gap", "grid": {"n": [10], "d": [2.0]}}))


def test_gw_and_coupling_trials():
    row = harness.trial_gw({"d": 1.0}, 3, {"samples": 2000})
    assert row["samples"] + 0 <= 2000 and 0 <= row["point"] <= 1
    assert row["target"] == pytest.approx(3 ** -0.5)
    row = harness.trial_coupling({"n": 500, "d": 0.5, "gamma": 1}, 3, {"samples": 200})
    assert 0 <= row["tv"] <= 1


def test_fractional_trial_columns():
    row = harness.trial_fractional({"n": 200, "d": 4.0}, 2, {})
    assert row["ratio"] == pytest.approx(row["total"] / (math.comb(200, 2) * row["p"] / 3))
    assert row["D"] == pytest.approx((1 + row["sigma"]) * row["d"])


def test_report_fails_cleanly_on_a_bad_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_report([], blocker / "sub")
