import json

from critlab.cli import run


def _read(path):
    return json.loads(path.read_text())


def test_classify_writes_report_and_manifest(tmp_path):
    out = tmp_path / "v.json"
    assert run(["classify", "--n", "2", "--q", "3", "--a", "1", "--d", "1", "--out", str(out)]) == 0
    rep = _read(out)
    assert rep["critnull"] != rep["counterex"]
    man = _read(tmp_path / "v.json.manifest.json")
    assert man["commandLine"][:2] == ["critlab", "classify"]


def test_cantor_build_then_eval(tmp_path):
    spec = tmp_path / "cantor.json"
    assert run(["cantor", "build", "--q", "3", "--a", "1", "--d", "1", "--k", "3", "--out", str(spec)]) == 0
    assert _read(spec)["family"] == "cantor"
    out = tmp_path / "e.json"
    assert run(["eval", "--map", str(spec), "--point", "0.3,0.2", "--out", str(out)]) == 0
    assert _read(out)["jac"] > 0


def test_precondition_exit_code(tmp_path):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"family": "nope", "n": 2, "params": {}}))
    assert run(["eval", "--map", str(spec), "--point", "0,0"]) == 2


def test_verify_signs(tmp_path):
    spec = tmp_path / "fold.json"
    spec.write_text(json.dumps({"family": "folding", "n": 2, "params": {"q": 3, "a": 1}}))
    out = tmp_path / "s.json"
    assert run(["verify", "signs", "--map", str(spec), "--res", "64", "--out", str(out)]) == 0
    rep = _read(out)
    assert rep["posFraction"] > 0 and rep["negFraction"] > 0
