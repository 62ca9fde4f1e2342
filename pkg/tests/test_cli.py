"""
Command-line tests: each run goes through ``main`` and the JSON it prints.
"""

import json
import math

import pytest

from kmslab import cli
from kmslab.schemas import GoldenReport, GoldenRow, Report

PHI = (1 + math.sqrt(5)) / 2

GOLDEN_GRAPH = {
    "name": "golden",
    "vertices": ["a", "b"],
    "edges": [{"src": "a", "dst": "a"}, {"src": "a", "dst": "b"}, {"src": "b", "dst": "a"}],
}


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "golden.json"
    path.write_text(json.dumps(GOLDEN_GRAPH), encoding="utf-8")
    return path


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_beta0_of_a_rose(capsys) -> None:
    report = run_json(capsys, "beta0", "--family", "rose", "--params", "n=2")
    assert report["schema"] == "kms-graph-lab/1"
    assert report["command"] == "beta0"
    assert report["beta0"]["value"] == pytest.approx(math.log(2), abs=1e-12)
    assert report["graph"]["params"] == {"n": 2}


def test_eigvec_on_a_graph_document(capsys, graph_file) -> None:
    report = run_json(capsys, "eigvec", "--graph", str(graph_file))
    (solution,) = report["eigensolution"]
    assert solution["beta"] == pytest.approx(math.log(PHI), abs=1e-12)
    assert solution["xi"]["b"] == pytest.approx(1 / PHI, rel=1e-11)
    assert report["state"]["status"] == "state"


def test_eigvec_lists_every_extreme_ray(capsys) -> None:
    report = run_json(capsys, "eigvec", "--family", "arms", "--params", "n=3", "--beta", "1.5", "--depth", "8")
    assert [s["label"] for s in report["eigensolution"]] == ["extreme ray a", "extreme ray b", "extreme ray c"]
    assert "state" not in report


def test_measure_of_a_cylinder(capsys, graph_file) -> None:
    report = run_json(capsys, "measure", "--graph", str(graph_file), "--cylinder", "e2")
    measure = report["measure"]
    assert measure["value"] == pytest.approx(1 / PHI**2, rel=1e-11)
    assert measure["additivity"]["passed"]
    assert measure["ruelle"]["passed"]


def test_measure_of_an_empty_cylinder(capsys, graph_file) -> None:
    report = run_json(capsys, "measure", "--graph", str(graph_file), "--start", "a")
    assert report["measure"]["value"] == 1.0
    assert report["measure"]["cylinder"] == []


def test_periods_with_a_factor_type(capsys) -> None:
    report = run_json(capsys, "periods", "--family", "ladder", "--beta", "0.3")
    assert report["periods"]["d_G"] == 1
    assert report["factor_type"]["kind"] == "III_lambda"
    assert report["factor_type"]["lam"] == pytest.approx(0.7408182206817179)


def test_classify_with_chosen_betas(capsys) -> None:
    report = run_json(capsys, "classify", "--family", "ladder", "--beta", "0.3", "--beta", "1.0", "--jobs", "2")
    samples = report["classification"]["samples"]
    assert [s["beta"] for s in samples] == [0.3, 1.0]
    assert [s["state"] for s in samples] == ["state", "weight-only"]


def test_recode_of_a_rose(capsys) -> None:
    report = run_json(capsys, "recode", "--family", "rose", "--k", "2")
    assert report["recode"]["vertices"] == 4
    assert report["recode"]["edges"] == 8
    assert report["recode"]["beta0_recoded"] == pytest.approx(report["recode"]["beta0_original"])


def test_lattice_rays(capsys) -> None:
    report = run_json(capsys, "lattice", "--family", "lattice-walk", "--params", "mu=1:2;-1:1", "--beta", "2")
    assert report["lattice"]["mgf"]["c_min"][0] == pytest.approx(-0.34657359027997264, abs=1e-10)
    assert report["lattice"]["rays"]["kind"] == "sphere"
    assert report["lattice"]["generates"]


def test_text_output(capsys) -> None:
    code, out, _ = run(capsys, "beta0", "--family", "rose", "--output", "text")
    assert code == 0
    assert "beta0" in out
    assert "finite-perron" in out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["beta0"],
        ["beta0", "--family", "rose", "--graph", "g.json"],
        ["beta0", "--family", "rose", "--params", "n"],
        ["eigvec", "--family", "arms"],
        ["classify", "--family", "ladder", "--jobs", "0"],
        ["beta0", "--family", "rose", "--log-level", "chatty"],
        ["beta0", "--family", "rose", "--tol", "0"],
        ["beta0", "--family", "rose", "--depth", "0"],
    ],
)
def test_usage_errors_exit_with_one(capsys, argv) -> None:
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert out == ""
    assert err


def test_unreadable_graph_document(capsys, tmp_path) -> None:
    code, _, err = run(capsys, "beta0", "--graph", str(tmp_path / "missing.json"))
    assert code == 1
    assert "cannot read" in err


def test_domain_errors_map_to_exit_codes(capsys) -> None:
    code, _, err = run(capsys, "recode", "--family", "ladder")
    assert code == 1
    assert "finite graph" in err
    code, _, err = run(capsys, "lattice", "--family", "rose")
    assert code == 1
    code, _, err = run(capsys, "eigvec", "--family", "arms", "--beta", "0.1")
    assert code == 2
    assert "infeasible" in err


def test_reproduce_mismatch_exits_with_three(capsys, monkeypatch) -> None:
    row = GoldenRow(example="rose(2)", quantity="d_G", expected=2, computed=1, tolerance=0.0, ok=False)
    monkeypatch.setattr(cli, "reproduce_examples", lambda: GoldenReport(rows=[row], passed=False))
    code, out, err = run(capsys, "reproduce")
    assert code == 3
    assert json.loads(out)["golden"]["passed"] is False
    assert "golden mismatch" in err


def test_report_round_trips_byte_identical(capsys) -> None:
    code, out, err = run(capsys, "analyze", "--family", "ladder", "--depth", "12")
    assert code == 0, err
    assert Report.from_json(out).to_json() + "\n" == out


@pytest.mark.parametrize(
    "family, beta, message",
    [
        ("ladder", "15", "depth 46 or less fits"),
        ("ladder", "800", "no truncation depth fits"),
        ("arms", "15", "depth 47 or less fits"),
        ("arms", "800", "no truncation depth fits"),
    ],
)
def test_overflowing_eigenvectors_exit_with_two(capsys, family, beta, message) -> None:
    code, out, err = run(capsys, "eigvec", "--family", family, "--beta", beta)
    assert code == 2
    assert out == ""
    assert message in " ".join(err.split())


def test_ladder_far_below_zero(capsys) -> None:
    report = run_json(capsys, "eigvec", "--family", "ladder", "--beta", "-800")
    assert report["eigensolution"][0]["xi"]["1"] == 1.0
    assert report["state"]["status"] == "state"


def test_classify_keeps_going_past_an_overflowing_beta(capsys) -> None:
    report = run_json(capsys, "classify", "--family", "ladder", "--beta", "0.3", "--beta", "15")
    first, second = report["classification"]["samples"]
    assert first["weight"] is True
    assert "weight" not in second
    assert second["state"] == "undetermined"
    assert "overflows" in second["rays_note"]


def test_beta0_reports_the_recurrence_at_the_base(capsys) -> None:
    report = run_json(capsys, "beta0", "--family", "rose", "--params", "n=2")
    recurrence = report["recurrence"]
    assert recurrence["vertex"] == "v"
    assert recurrence["beta"] == pytest.approx(math.log(2), abs=1e-12)
    assert recurrence["status"] == "divergent"


def test_classify_reports_the_recurrence_at_the_base(capsys) -> None:
    report = run_json(capsys, "classify", "--family", "rose", "--params", "n=3", "--beta", "2.0")
    assert report["recurrence"]["status"] == "divergent"
    assert report["recurrence"]["beta"] == pytest.approx(report["classification"]["beta0"]["value"])
