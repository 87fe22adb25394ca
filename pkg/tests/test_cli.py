import json
import subprocess
import sys

import pytest

from maltsevcsp import fixtures as F
from maltsevcsp.cli import main
from maltsevcsp.instance import Instance
from maltsevcsp.maltsev import build_counterexample
from maltsevcsp.serialize import (
    algebra_from_json,
    algebra_to_json,
    dumps,
    instance_from_json,
    instance_to_json,
    raw_from_json,
    raw_to_json,
    term_from_json,
    term_to_json,
)

DOT = json.dumps(term_to_json(F.DOT))
MEET = json.dumps(term_to_json(F.MEET))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_fixtures_list(capsys):
    code, out, _ = run(capsys, "fixtures", "list")
    data = json.loads(out)
    assert code == 0
    assert {"meet2", "chain3", "rps", "counterexample", "block-semilattice"} <= set(data["algebras"])
    assert "counterexample" in data["instances"]


def test_fixtures_show_and_family(capsys):
    code, out, _ = run(capsys, "fixtures", "show", "rps")
    assert code == 0 and algebra_from_json(json.loads(out)["algebra"]) == F.rps()
    code, out, _ = run(capsys, "fixtures", "show", "meet2-full")
    assert code == 0 and "instance" in json.loads(out)
    code, out, _ = run(capsys, "--seed", "3", "fixtures", "family", "--quotient", "rps")
    assert code == 0 and json.loads(out)["algebra"]["size"] == 12


def test_demo_counterexample(capsys):
    code, out, _ = run(capsys, "demo", "counterexample")
    data = json.loads(out)
    assert code == 0
    assert data["oracle"]["solvable"] is True
    assert data["oracle"]["witness"] == {"w": 0, "x": 0, "y": 0, "z": 0}
    assert data["algorithm"]["solvable"] is False
    assert data["algorithm"]["unsound_no_possible"] is True
    assert data["hypotheses_failing"] == ["d"] and data["agree"] is False


def test_solve_singleton(capsys):
    inst = Instance.build(F.rps(), ["x", "y"], {"x": [2], "y": [1]}, {})
    code, out, _ = run(capsys, "solve", json.dumps(instance_to_json(inst, "rps")), "--dot", DOT)
    data = json.loads(out)
    assert code == 0 and data["solvable"] is True and data["witness"] == {"x": 2, "y": 1}


def test_solve_no_exits_one(tmp_path, capsys):
    _, dot, counter = build_counterexample()
    path = tmp_path / "cx.json"
    path.write_text(json.dumps(instance_to_json(counter, "counterexample")))
    code, out, _ = run(capsys, "solve", str(path), "--dot", json.dumps(term_to_json(dot)), "--trace")
    data = json.loads(out)
    assert code == 1 and data["solvable"] is False and data["unsound_no_possible"] is True
    assert "trace" in data


def test_bulatov_command(capsys):
    inst = Instance.full(F.rps(), ["x", "y"])
    code, out, _ = run(capsys, "bulatov", json.dumps(instance_to_json(inst, "rps")), "--dot", DOT, "--trace")
    data = json.loads(out)
    assert code == 0 and data["assignment"] == {"x": 0, "y": 0}
    assert [s["step"] for s in data["trace"]] == [">=2", ">=2"]


def test_consistency_command(capsys):
    raw = {"algebra": "meet2", "variables": ["x", "y"],
           "constraints": [{"scope": ["x", "y"], "relation": [[1, 1]]}]}
    code, out, _ = run(capsys, "consistency", json.dumps(raw))
    data = json.loads(out)
    assert code == 0 and data["potatoes"] == {"x": [1], "y": [1]}
    assert data["report"]["standard"] is True


def test_check_algebra_with_digraph(tmp_path, capsys):
    dot_path = tmp_path / "q.dot"
    code, out, _ = run(capsys, "check-algebra", "counterexample", "--dot",
                       json.dumps({"op": "q", "args": [{"var": 0}, {"var": 1}, {"var": 1}]}),
                       "--digraph-dot", str(dot_path))
    data = json.loads(out)
    assert code == 0 and data["d_twisted_associativity"]["ok"] is False
    text = dot_path.read_text()
    assert text.startswith("digraph") and "n0 -> n1;" in text and "n1 -> n0;" not in text


@pytest.mark.parametrize(
    "argv, code",
    [
        (["solve", "{not json", "--dot", DOT], "malformed_input"),
        (["fixtures", "show", "nope"], "unknown_fixture"),
        (["check-algebra", "nope", "--dot", DOT], "unknown_fixture"),
        (["solve", json.dumps({"algebra": "meet2", "variables": ["x", "y"], "potatoes": {"x": [0, 1]},
                               "relations": {"x,y": [[1, 1]]}}), "--dot", MEET], "not_standard"),
        (["solve", json.dumps({"algebra": "meet2", "variables": ["x"], "potatoes": {"x": [5]}}),
          "--dot", MEET], "invalid_instance"),
        (["solve", json.dumps({"algebra": "meet2", "variables": ["x"]}),
          "--dot", json.dumps({"var": 1})], "hypothesis_failed"),
        (["bulatov", json.dumps({"algebra": "counterexample", "variables": ["x"]}),
          "--dot", json.dumps({"op": "q", "args": [{"var": 0}, {"var": 1}, {"var": 1}]})],
         "not_two_semilattice"),
    ],
)
def test_error_codes(capsys, argv, code):
    status, out, err = run(capsys, *argv)
    assert status == 2 and out == ""
    assert json.loads(err)["error"] == code


def test_fixture_round_trip():
    for name in F.ALGEBRAS:
        alg = F.algebra(name)
        assert algebra_from_json(json.loads(dumps(algebra_to_json(alg)))) == alg
        term = F.ALGEBRAS[name].dot
        assert term_from_json(json.loads(dumps(term_to_json(term)))) == term
    for name, (inst, _) in F.instances().items():
        assert instance_from_json(json.loads(dumps(instance_to_json(inst)))) == inst
    raw = F.random_raw_instance(F.rps(), __import__("numpy").random.default_rng(1), 4, 5)
    back = raw_from_json(json.loads(dumps(raw_to_json(raw))))
    assert set(back.binary) == set(raw.binary) and set(back.unary) == set(raw.unary)


def test_output_is_deterministic():
    cmd = [sys.executable, "-m", "maltsevcsp.cli", "demo", "counterexample"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and first


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "maltsevcsp.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "solve" in out.stdout
