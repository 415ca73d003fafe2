import json

import pytest

from chainsynth.cli import main

from conftest import toy_path


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_violated(capsys):
    code, out, _ = run(capsys, "check", "--input", toy_path(),
                       "--assign", "k2=2,k3=2", "--spec", "P>=0.1 [F s=4]")
    assert code == 1
    assert "violated" in out and "value     0" in out


def test_check_satisfied(capsys):
    code, out, _ = run(capsys, "check", "--input", toy_path(),
                       "--assign", "k2=2,k3=4", "--spec", "P>=0.1 [F s=4]")
    assert code == 0
    assert "satisfied" in out


def test_check_partial_assignment_is_error(capsys):
    code, _, err = run(capsys, "check", "--input", toy_path(),
                       "--assign", "k2=2", "--spec", "P>=0.1 [F s=4]")
    assert code == 2
    assert "k3" in err


def test_bad_spec_is_error(capsys):
    code, _, err = run(capsys, "check", "--input", toy_path(),
                       "--assign", "k2=2,k3=4", "--spec", "P=0.1 [F s=4]")
    assert code == 2 and "spec" in err


def test_missing_file_is_error(capsys):
    code, _, err = run(capsys, "check", "--input", "no_such_file.sk",
                       "--assign", "k2=2,k3=4", "--spec", "P>=0.1 [F s=4]")
    assert code == 2


def test_goal_matching_nothing_is_error(capsys):
    code, _, err = run(capsys, "synth", "feasible", "--input", toy_path(),
                       "--spec", "P>=0.1 [F s=77]")
    assert code == 2 and "matches no state" in err


def test_threshold_out_of_range_is_error(capsys):
    code, _, err = run(capsys, "synth", "feasible", "--input", toy_path(),
                       "--spec", "P>=2 [F s=4]")
    assert code == 2


@pytest.mark.parametrize("engine", ["enum", "cegar", "cegis"])
def test_synth_partition_json(capsys, engine):
    code, out, _ = run(capsys, "synth", "partition", "--input", toy_path(),
                       "--spec", "P>=0.1 [F s=4]", "--engine", engine,
                       "--json")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"query", "engine", "outcome", "stats"}
    assert doc["engine"] == engine
    assert doc["outcome"]["kind"] == "partition"
    assert sorted(tuple(sorted(w.items())) for w in doc["outcome"]["T"]) == [
        (("k2", "2"), ("k3", "4")), (("k2", "3"), ("k3", "4"))]
    assert set(doc["stats"]) == {"candidates", "checks", "iterations",
                                 "wall_ms"}


def test_synth_outputs_stable_modulo_timing(capsys):
    docs = []
    for _ in range(2):
        _, out, _ = run(capsys, "synth", "partition", "--input", toy_path(),
                        "--spec", "P>=0.1 [F s=4]", "--engine", "cegis",
                        "--json")
        doc = json.loads(out)
        doc["stats"].pop("wall_ms")
        docs.append(doc)
    assert docs[0] == docs[1]


def test_synth_budgeted_max(capsys):
    code, out, _ = run(capsys, "synth", "max", "--input", toy_path(),
                       "--goal", "s=4", "--cost", "structural",
                       "--budget", "9", "--engine", "enum", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["outcome"]["witness"] == {"k2": "2", "k3": "2"}
    assert doc["outcome"]["value"] == 0.0
    assert doc["outcome"]["cost"] == 8


def test_synth_unsat_exit_code(capsys):
    code, out, _ = run(capsys, "synth", "feasible", "--input", toy_path(),
                       "--spec", "P<=0.1 [F s=1]")
    assert code == 1
    assert "unsatisfiable" in out


def test_synth_feasible_witness(capsys):
    code, out, _ = run(capsys, "synth", "feasible", "--input", toy_path(),
                       "--spec", "P>=0.1 [F s=4]", "--engine", "cegis")
    assert code == 0
    assert "witness" in out


def test_json_family_input(capsys, tmp_path, example_family):
    from chainsynth import jsonio
    path = tmp_path / "fam.json"
    path.write_text(jsonio.dumps(example_family))
    code, out, _ = run(capsys, "synth", "partition", "--input", str(path),
                       "--spec", "P>=0.1 [F s=4]", "--json")
    assert code == 0
    assert len(json.loads(out)["outcome"]["T"]) == 2


def test_max_states_env_override(capsys, monkeypatch):
    monkeypatch.setenv("CHAINSYNTH_MAX_STATES", "2")
    code, _, err = run(capsys, "check", "--input", toy_path(),
                       "--assign", "k2=2,k3=4", "--spec", "P>=0.1 [F s=4]")
    assert code == 2
    assert "exceeds" in err


def test_bench(capsys):
    code, out, _ = run(capsys, "bench", "--seed", "1", "--instances", "5",
                       "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["failures"] == 0
    assert doc["pruning"]["checks"] < 64
    assert doc["bench"]["checks"] < 0.2 * doc["bench"]["family_size"]
