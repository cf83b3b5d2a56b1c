import json
import subprocess
import sys

import pytest

from qcond import cli
from qcond.errors import UnknownDemo


def run(args, stdin=None, env=None):
    return subprocess.run([sys.executable, "-m", "qcond", *args], capture_output=True, text=True,
                          input=stdin, env=env)


@pytest.fixture()
def files(tmp_path):
    paths = {}
    for name, args in [("state", ["state", "random", "--dim", "3", "--seed", "1"]),
                       ("c1", ["channel", "random", "--dim", "3", "--seed", "2"]),
                       ("c2", ["channel", "random", "--dim", "3", "--seed", "3"]),
                       ("ab", ["state", "random", "--dim", "4", "--seed", "5"])]:
        out = run(args)
        assert out.returncode == 0, out.stderr
        p = tmp_path / f"{name}.json"
        p.write_text(out.stdout)
        paths[name] = str(p)
    return paths


@pytest.mark.parametrize("name", sorted(cli.DEMOS))
def test_demos_pass(name):
    doc = cli.demo(name)
    assert doc["passed"], doc["checks"]


def test_pure_state_and_unitary_demo_relations():
    pure = cli.demo("pure-state")["measures"]
    assert abs(pure["I"]) <= 1e-9 and abs(pure["J"] - pure["S_R"]) <= 1e-9
    uni = cli.demo("unitary")["measures"]
    assert abs(uni["J"]) <= 1e-9 and abs(uni["I"] - uni["S_Q"]) <= 1e-9


def test_unknown_demo():
    with pytest.raises(UnknownDemo):
        cli.demo("nope")
    assert cli.run(["demo", "nope"]) == 2


def test_condprob_and_measures(files):
    out = run(["condprob", "--channel", files["c1"], "--state", files["state"]])
    assert out.returncode == 0
    doc = json.loads(out.stdout)
    assert doc["kind"] == "conditional_table" and doc["residuals"]["total_probability"] < 1e-9
    out = run(["measures", "--channel", files["c1"], "--state", "-"], stdin=open(files["state"]).read())
    m = json.loads(out.stdout)
    assert m["identity_residual"] < 1e-10


def test_chain_with_samples(files):
    out = run(["chain", "--state", files["state"], "--stage1", files["c1"], "--stage2", files["c2"],
               "--seed", "4", "--samples", "20000"])
    assert out.returncode == 0, out.stderr
    doc = json.loads(out.stdout)
    assert doc["passed"] and doc["residuals"]["chain"] < 1e-9
    assert doc["config"]["seed"] == 4


def test_subsys_and_generalized(files):
    out = run(["subsys", "--state", files["ab"], "--dims", "2,2"])
    assert out.returncode == 0 and json.loads(out.stdout)["bound_slack"] >= -1e-8
    out = run(["generalized", "--channel", files["c1"], "--state", files["state"], "--members", "5", "--seed", "1"])
    assert out.returncode == 0 and json.loads(out.stdout)["lambda_relation_residual"] < 1e-9


def test_usage_errors_exit_two(files, tmp_path):
    assert run(["subsys", "--state", files["ab"], "--dims", "3,2"]).returncode == 2
    assert run(["condprob", "--channel", files["state"], "--state", files["state"]]).returncode == 2
    assert run(["measures", "--channel", files["c1"], "--state", "-"], stdin="{bad").returncode == 2
    assert run(["state", "random"]).returncode == 2
    assert run(["condprob", "--channel", str(tmp_path / "missing.json"), "--state", files["state"]]).returncode == 2


def test_inputs_are_not_mutated(files):
    before = open(files["c1"]).read()
    run(["condprob", "--channel", files["c1"], "--state", files["state"]])
    assert open(files["c1"]).read() == before


def test_seed_from_environment():
    import os
    env = dict(os.environ, QCOND_SEED="7")
    assert run(["state", "random", "--dim", "2"], env=env).stdout == run(
        ["state", "random", "--dim", "2", "--seed", "7"]).stdout


def test_verify_is_byte_identical():
    a = run(["verify", "--trials", "10", "--seed", "1"])
    b = run(["verify", "--trials", "10", "--seed", "1"])
    assert a.returncode == 0
    assert a.stdout == b.stdout
    doc = json.loads(a.stdout)
    assert doc["config"]["master_seed"] == 1 and doc["passed"]
    csv_out = run(["verify", "--trials", "3", "--seed", "1", "--format", "csv"])
    assert csv_out.stdout.startswith("name,anchor,tolerance")


def test_reproduce_command():
    doc = json.loads(run(["verify", "--trials", "5", "--seed", "2"]).stdout)
    c = next(c for c in doc["checks"] if c["name"] == "chain_property")
    out = run(["reproduce", "--seed", str(c["worst_seed"]), "--check", "chain_property",
               f"--expected-slack={c['worst_slack']!r}"])
    assert out.returncode == 0
    assert json.loads(out.stdout)["matches"]
