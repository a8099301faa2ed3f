import json

import pytest

from hybrid_sim_cli import EXIT_CONFIG, EXIT_FAILS, EXIT_INCONCLUSIVE, EXIT_OK, main

EX1_PROBLEM = {
    "system": {
        "name": "ex1-file",
        "state_dim": 1,
        "C": {"kind": "output_form", "H": [[1.0]], "inner": {"lower": [-1.5], "upper": [1.5]}},
        "D": {
            "kind": "complement",
            "base": {
                "kind": "output_form",
                "H": [[1.0]],
                "inner": {"lower": [-1.0], "upper": [1.0], "lower_closed": False, "upper_closed": False},
            },
        },
        "W": {"lower": [-0.2], "upper": [0.2]},
        "flow": {"A": [[1.0]], "B": [[0.0]]},
        "jump": {"branches": [{"A": [[0.0]], "B": [[-1.0]], "c": [0.0]}]},
    },
    "signal": {"text": "const:0.2"},
    "sim": {"t_max": 3.0},
}


def run_cli(tmp_path, *argv):
    return main([*argv, "--output-dir", str(tmp_path)])


def test_simulate_writes_report_and_arc(tmp_path, capsys):
    code = run_cli(tmp_path, "simulate", "--scenario", "ex1", "--xi", "1.0", "--w", "const:0.2", "--t-max", "5")
    assert code == EXIT_OK
    assert "Result: BudgetExhausted" in capsys.readouterr().out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["classification"] == "CompleteEvidence"
    assert (tmp_path / "arc.csv").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["exit"] == EXIT_OK
    assert manifest["scenario"] == "ex1"


def test_simulate_dead_state(tmp_path, capsys):
    code = run_cli(tmp_path, "simulate", "--scenario", "remark2", "--xi", "1", "--w", "remark2")
    assert code == EXIT_FAILS
    assert "DeadState" in capsys.readouterr().out


def test_simulate_enumerates_branches(tmp_path):
    code = run_cli(
        tmp_path, "simulate", "--scenario", "ex1", "--xi", "1", "--w", "const:0.2",
        "--priority", "EnumerateBoth", "--t-max", "3", "--format", "json",
    )
    assert code == EXIT_OK
    assert (tmp_path / "report_branch0.json").exists()
    assert (tmp_path / "report_branch1.json").exists()


def test_existence_witness_fails(tmp_path):
    code = run_cli(tmp_path, "check-existence", "--scenario", "ex2c", "--c", "1.0", "--xi", "1.0", "--w", "ex2-witness")
    assert code == EXIT_FAILS
    cert = json.loads((tmp_path / "certificate_nontrivial_existence.json").read_text())
    assert cert["verdict"] == "FailsWithWitness"


def test_existence_over_region(tmp_path):
    code = run_cli(tmp_path, "check-existence", "--scenario", "ex1", "--region=-1.7:1.7", "--resolution", "9")
    assert code == EXIT_OK
    assert (tmp_path / "certificate_existence_over_region.json").exists()


@pytest.mark.parametrize("argv, expected", [
    (["--scenario", "ex1"], EXIT_OK),
    (["--scenario", "ex2c", "--c", "1.0"], EXIT_FAILS),
])
def test_set_condition(tmp_path, argv, expected):
    assert run_cli(tmp_path, "check-setcond", *argv) == expected
    assert (tmp_path / "certificate_output_set_condition.json").exists()


@pytest.mark.parametrize("xi, expected", [("1.0", EXIT_OK), ("1.3", EXIT_INCONCLUSIVE)])
def test_ball_margin(tmp_path, xi, expected):
    assert run_cli(tmp_path, "check-viability", "--check", "ball-margin", "--scenario", "ex1", "--xi", xi) == expected


def test_checker_that_does_not_apply_is_a_usage_error(tmp_path):
    code = run_cli(
        tmp_path, "check-viability", "--check", "tangent-ac", "--scenario", "ex2c", "--c", "1.0",
        "--xi", "0.5", "--w", "ex2-witness",
    )
    assert code == EXIT_CONFIG


def test_empty_tangent_window_is_a_usage_error(tmp_path):
    code = run_cli(
        tmp_path, "check-viability", "--check", "tangent-ac", "--scenario", "ex1",
        "--xi", "0", "--w", "const:0.2", "--eps", "-1",
    )
    assert code == EXIT_CONFIG


def test_scenario_list(capsys):
    assert main(["scenario", "list"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ex1" in out
    assert "remark2" in out


@pytest.mark.parametrize("argv", [
    ["simulate", "--scenario", "nope", "--xi", "0"],
    ["simulate", "--config", "missing.json", "--xi", "0"],
    ["simulate", "--scenario", "ex1", "--xi", "0", "--w", "pulse:1"],
    ["simulate", "--scenario", "ex1", "--xi", "0"],
])
def test_usage_errors(tmp_path, argv):
    assert run_cli(tmp_path, *argv) == EXIT_CONFIG


def test_validate_arc_round_trip(tmp_path):
    sim_dir = tmp_path / "sim"
    assert run_cli(sim_dir, "simulate", "--scenario", "ex1", "--xi", "0.5", "--w", "const:0.2", "--t-max", "4") == 0
    check_dir = tmp_path / "check"
    code = run_cli(
        check_dir, "validate-arc", "--scenario", "ex1", "--arc", str(sim_dir / "report.json"), "--w", "const:0.2"
    )
    assert code == EXIT_OK
    assert json.loads((check_dir / "validation.json").read_text())["valid"]
    code = run_cli(
        check_dir, "validate-arc", "--scenario", "ex1", "--arc", str(sim_dir / "report.json"), "--w", "const:0"
    )
    assert code == EXIT_FAILS


def test_problem_file(tmp_path):
    path = tmp_path / "problem.json"
    path.write_text(json.dumps(EX1_PROBLEM))
    code = run_cli(tmp_path / "out", "simulate", "--config", str(path), "--xi", "1.0")
    assert code == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["termination"]["budget"] == "t"


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HYBRID_SIM_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["check-setcond", "--scenario", "ex1"]) == EXIT_OK
    assert (tmp_path / "env" / "manifest.json").exists()
