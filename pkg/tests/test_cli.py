import csv
import json

import pytest

import nonoblivious.solvers as solvers
from nonoblivious.cli import main
from nonoblivious.instances import generate, write_instance


@pytest.fixture
def instance(tmp_path):
    p = tmp_path / "inst.json"
    p.write_bytes(write_instance(generate("random-coverage", "uniform-matroid", 3, n=8, rank=3, instance_id="t")))
    return p


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_prints_report(capsys, instance):
    code, out, _ = run(capsys, "solve", "--instance", instance, "--algo", "nonoblivious-sampled",
                       "--epsilon", 0.5, "--seed", 4)
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == "converged" and len(rep["solution"]) == 3
    assert rep["params"]["N"] > 0


def test_solve_error_exit_code_and_retry(capsys, instance, monkeypatch):
    real = solvers.sampled_parameters
    monkeypatch.setattr(solvers, "sampled_parameters", lambda *a: {**real(*a), "I": 0})
    code, out, _ = run(capsys, "solve", "--instance", instance, "--algo", "nonoblivious-sampled", "--epsilon", 0.5)
    assert code == 2 and json.loads(out)["status"] == "error"
    code, out, _ = run(capsys, "solve", "--instance", instance, "--algo", "nonoblivious-sampled",
                       "--epsilon", 0.5, "--retry", 2)
    assert code == 2 and len(json.loads(out)["attempts"]) == 3


def test_usage_and_validation_errors(capsys, tmp_path, instance):
    assert run(capsys, "solve")[0] == 1
    assert run(capsys, "solve", "--instance", tmp_path / "missing.json")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 1}')
    code, _, err = run(capsys, "solve", "--instance", bad)
    assert code == 1 and "ground" in err
    assert run(capsys, "solve", "--instance", instance, "--c", 0)[0] == 1


def test_opt_and_verify(capsys, instance):
    code, out, _ = run(capsys, "opt", "--instance", instance)
    assert code == 0 and len(json.loads(out)["set"]) == 3
    code, out, _ = run(capsys, "verify", "--instance", instance)
    rep = json.loads(out)
    assert code == 0 and rep["monotone_submodular"] and 0 <= rep["exact_curvature"] <= 1


def test_gen_is_byte_stable(capsys):
    _, a, _ = run(capsys, "gen", "--kind", "budget-additive", "--seed", 7, "--n", 6)
    _, b, _ = run(capsys, "gen", "--kind", "budget-additive", "--seed", 7, "--n", 6)
    assert a == b and json.loads(a)["objective"]["kind"] == "explicit"
    code, _, _ = run(capsys, "gen", "--n", 3, "--rank", 5)
    assert code == 1


def test_coeffs_dump(capsys):
    code, out, _ = run(capsys, "coeffs", "--c", 1, "--amax", 3)
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and rows[0] == ["a", "b", "m_ab"] and len(rows) == 1 + 10
    code, out, _ = run(capsys, "coeffs", "--c", 1, "--amax", 3, "--table", "tau")
    assert out.splitlines()[1] == "1,1.0"


def test_bench_round_trip(capsys, tmp_path):
    suite = tmp_path / "suite"
    assert run(capsys, "gen", "--suite", "partial", "--out", suite)[0] == 0
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "bench", "--suite", suite, "--out", out1, "--no-timing")[0] == 0
    assert run(capsys, "bench", "--suite", suite, "--out", out2, "--no-timing", "--workers", 2)[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert len(out1.read_text().splitlines()) == 51


def test_bench_violation_exit_code(capsys, tmp_path):
    suite = tmp_path / "v"
    suite.mkdir()
    inst = generate(seed=4, n=6, rank=2, instance_id="v")
    inst.optimum = {"set": [0, 1], "value": 1e6}
    (suite / "v.json").write_bytes(write_instance(inst))
    (suite / "config.json").write_text('{"runs": [{"algo": "greedy"}]}')
    code, _, err = run(capsys, "bench", "--suite", suite)
    assert code == 3 and "violation" in err
