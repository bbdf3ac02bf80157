import json

import pytest

from mmot.cli import main
from mmot.serialize import instance_to_dict
from mmot.suite import gen_instance
from mmot.core import make_instance


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)
    return tmp_path, write


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "--d", "2", "--sizes", "2,2", "--cost", "random", "--seed", "7", "--out", str(a)]) == 0
    assert main(["--seed", "7", "gen", "--d", "2", "--sizes", "2,2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_valid_builtin(tmp_path, capsys):
    out = tmp_path / "i.json"
    assert main(["gen", "--d", "3", "--sizes", "2,2,2", "--cost", "pairwise_quadratic",
                 "--seed", "1", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["cost"] == {"builtin": "pairwise_quadratic", "params": {}}


def test_solve_certify_audit_round_trip(files, capsys):
    tmp, write = files
    inst = write("i.json", instance_to_dict(gen_instance(3, [2, 3, 2], "random", 4)))
    res, cert = str(tmp / "r.json"), str(tmp / "c.json")
    code, out, _ = _run(capsys, "solve", inst, "--out", res, "--json")
    assert code == 0
    body = json.loads(out)
    assert set(body) == {"value", "plan", "potentials", "gap"}
    assert body["gap"] == "0"
    assert _run(capsys, "certify", inst, res, "--out", cert)[0] == 0
    assert json.loads(open(cert).read())["verdict"] == "Optimal"
    code, out, _ = _run(capsys, "audit", inst, res, cert)
    assert code == 0 and "passed" in out
    assert _run(capsys, "check", inst, res)[0] == 0
    code, out, _ = _run(capsys, "tuple", inst, "--support", res, "--json")
    assert code == 0 and json.loads(out)["domain"] == "ambient"


def test_refutation_exit_codes(files, capsys):
    tmp, write = files
    inst = write("sq.json", instance_to_dict(
        make_instance(coords=[[0, 1], [0, 1]], builtin="pairwise_quadratic")))
    plan = write("p.json", {"entries": [{"idx": [0, 1], "mass": "1/2"}, {"idx": [1, 0], "mass": "1/2"}]})
    code, out, _ = _run(capsys, "check", inst, plan, "--json")
    assert code == 3 and json.loads(out)["result"] == "Violated"
    assert _run(capsys, "check", inst, plan, "--method", "brute", "--nmax", "2")[0] == 3
    assert _run(capsys, "certify", inst, plan)[0] == 3
    assert _run(capsys, "tuple", inst, "--support", plan)[0] == 3
    good = write("g.json", {"entries": [{"idx": [0, 0], "mass": "1/2"}, {"idx": [1, 1], "mass": "1/2"}]})
    assert _run(capsys, "check", inst, good, "--method", "brute")[0] == 4


def test_audit_failure_exit(files, capsys):
    tmp, write = files
    inst = write("i.json", instance_to_dict(gen_instance(2, [2, 3], "random", 1)))
    res, cert = str(tmp / "r.json"), str(tmp / "c.json")
    _run(capsys, "solve", inst, "--out", res)
    _run(capsys, "certify", inst, res, "--out", cert)
    data = json.loads(open(cert).read())
    data["potentials"][1][0] = "1000"
    bad = write("bad.json", data)
    code, out, _ = _run(capsys, "audit", inst, res, bad, "--json")
    assert code == 5 and not json.loads(out)["ok"]


def test_input_errors(files, capsys):
    tmp, write = files
    assert _run(capsys, "solve", str(tmp / "missing.json"))[0] == 2
    bad = write("bad.json", {"spaces": [{"points": [{"label": "a"}, {"label": "b"}]}] * 2,
                             "marginals": [[0.5, 0.6], [0.5, 0.5]],
                             "cost": {"tensor": [[0, 1], [1, 0]]}})
    code, _, err = _run(capsys, "solve", bad)
    assert code == 2 and "sums to 1.1" in err
    assert _run(capsys, "gen", "--cost", "nope")[0] == 2
    inst = write("i.json", instance_to_dict(gen_instance(2, [2, 2], "random", 1)))
    plan = write("p.json", {"entries": [{"idx": [0, 0], "mass": 1}]})
    assert _run(capsys, "certify", inst, plan)[0] == 2
    assert _run(capsys, "--grid-cap", "2", "solve", inst)[0] == 2


def test_mode_env_override(files, capsys, monkeypatch):
    tmp, write = files
    inst = write("i.json", instance_to_dict(gen_instance(2, [2, 2], "random", 3)))
    monkeypatch.setenv("MMOT_MODE", "float")
    code, out, _ = _run(capsys, "solve", inst, "--json")
    assert isinstance(json.loads(out)["value"], float)
    code, out, _ = _run(capsys, "solve", inst, "--json", "--mode", "rational")
    assert isinstance(json.loads(out)["value"], str)


def test_suite_command(capsys):
    code, out, _ = _run(capsys, "suite", "--count", "4", "--seed", "2", "--json")
    assert code == 0
    s = json.loads(out)
    assert s["certified"] == 4 and s["failures"] == []
