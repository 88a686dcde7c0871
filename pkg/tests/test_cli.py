import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from cesaro import cli

SCHEMAS = {p.name.split(".")[0]: json.loads(p.read_text()) for p in resources.files("cesaro").joinpath("schemas").iterdir() if p.name.endswith(".json")}
H = ["--horizon", "20000"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMAS[doc["command"]])
    assert doc["schema_version"] == 1
    return code, doc


def test_schemas_shipped():
    assert set(SCHEMAS) == {"eval", "examples", "nullmod", "chain", "field", "classify", "kp"}
    for s in SCHEMAS.values():
        jsonschema.Draft202012Validator.check_schema(s)


def test_eval_residue(capsys):
    code, doc = run_json(capsys, "eval", "residue(0 mod 7)", *H)
    assert code == 0
    assert doc["profile"]["exact_charge"] == {"provenance": "closed-form", "value": "1/7"}


def test_eval_blocks_heuristic(capsys):
    code, doc = run_json(capsys, "eval", "blocks(2^(n-1))")
    assert code == 0 and doc["profile"]["exact_charge"] is None
    assert "no" in doc["profile"]["verdict"].lower()
    assert abs(doc["profile"]["upper_est_float"] - 2 / 3) < 0.01
    assert abs(doc["profile"]["lower_est_float"] - 1 / 3) < 0.01


def test_parse_error_exit_2_with_caret(capsys):
    code, out, err = run(capsys, "eval", "(")
    assert code == 2 and out == ""
    assert "^" in err


def test_eval_error_exit_3(capsys):
    code, _, err = run(capsys, "eval", "residue(0 mod 2)", "--horizon", "0")
    assert code == 3 and "error" in err


def test_unknown_example_exit_4(capsys):
    code, _, err = run(capsys, "examples", "nope")
    assert code == 4 and "residues" in err


def test_check_failure_exit_5(capsys):
    # no certificate exists for a set without a Cesàro limit
    code, doc = run_json(capsys, "chain", "certify", "blocks(2^(n-1))", "--eps", "1/7")
    assert code == 5 and doc["certificate"]["found"] is False


def test_argparse_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["chain", "explode", "evens"])
    assert info.value.code == 2


@pytest.mark.parametrize("name", ["anomaly", "dk", "classify", "catalog", "nullmod"])
def test_examples_suites(capsys, name):
    code, doc = run_json(capsys, "examples", name)
    assert code == 0 and doc["passed"]
    assert all(c["suite"] == name for c in doc["checks"])


def test_nullmod_odds(capsys):
    code, doc = run_json(capsys, "nullmod", "residue(1 mod 2)", "--target", "1/2", *H)
    assert code == 0 and doc["report"]["passed"]
    code, out, _ = run(capsys, "nullmod", "residue(1 mod 2)", "--target", "1/2", "--format", "csv", "--rows", "5")
    rows = out.splitlines()
    assert rows[0] == "N,in_A,in_Aprime,in_F,nu_N_Aprime"
    assert rows[1] == "1,1,0,1,0"
    assert len(rows) == 6


def test_chain_commands(capsys):
    code, doc = run_json(capsys, "chain", "certify", "--eps", "0.05", "dk-partial-unions", *H)
    assert code == 0 and doc["certificate"]["found"] and doc["certificate"]["scope"] == "VERIFIED-TO-HORIZON"
    code, doc = run_json(capsys, "chain", "densify", "residue(0 mod 4)", "evens", "--eps", "1/8")
    assert [e["charge"] for e in doc["elements"]] == ["0", "1/8", "1/4", "3/8", "1/2", "5/8", "3/4", "7/8", "1"]
    code, doc = run_json(capsys, "chain", "saturate", "{}", "{1,2,3}", "--budget", "2")
    assert len(doc["elements"]) == 2
    code, doc = run_json(capsys, "chain", "closures", "evens", "nat")
    assert len(doc["elements"]) == 2


def test_field_and_classify(capsys):
    code, doc = run_json(capsys, "field", "evens", "residue(0 mod 3)", *H)
    assert code == 0 and doc["field"]["charge_sum"] == "1"
    assert sorted(a["charge"] for a in doc["field"]["atoms"]) == ["1/3", "1/3", "1/6", "1/6"]
    code, doc = run_json(capsys, "classify", "dk", "--K", "8")
    assert doc["classification"]["kind"] == "MeasureSpace" and doc["classification"]["tail_mass"] == "1/256"
    code, doc = run_json(capsys, "classify", "singletons")
    assert doc["classification"]["kind"] == "ChargeOnly" and doc["classification"]["tail_mass"] == "1"


def test_kp_commands(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"terms": [{"coef": "2", "set": "residue(0 mod 3)"}, {"coef": 1, "set": "~residue(0 mod 3)"}]}))
    code, doc = run_json(capsys, "kp", "norm", "--p", "1", str(spec))
    assert code == 0 and doc["norm"]["power"] == "4/3"
    code, doc = run_json(capsys, "kp", "integral", str(spec), *H)
    assert code == 0
    code, doc = run_json(capsys, "kp", "tail", str(spec), *H)
    assert doc["result"]["kind"] == "Satisfied" and doc["result"]["y"] == "4"
    code, doc = run_json(capsys, "kp", "anomaly", "--m-max", "50")
    assert code == 0
    code, out, _ = run(capsys, "kp", "anomaly", "--m-max", "3", "--format", "csv")
    assert out.splitlines() == ["m,nu_m2,nu_before_next_square", "1,1,1/3", "2,3/4,3/8", "3,2/3,2/5"]


def test_missing_spec_file_exit_3(capsys, tmp_path):
    code, _, _ = run(capsys, "kp", "norm", str(tmp_path / "absent.json"))
    assert code == 3


@pytest.mark.parametrize(
    "argv,header",
    [
        (["eval", "evens"], "N,count,nu_N"),
        (["examples", "classify"], "suite,check,passed,detail"),
        (["chain", "densify", "evens", "nat"], "element,N,count,nu_N"),
        (["field", "evens"], "atom,charge"),
        (["classify", "dk", "--K", "3"], "k,tail_mass"),
        (["kp", "tail", "anomaly"], "y,upper_est"),
    ],
)
def test_csv_headers(capsys, argv, header):
    code, out, _ = run(capsys, *argv, "--format", "csv", *H)
    assert out.splitlines()[0] == header


def test_out_flag_and_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["field", "evens", "residue(0 mod 5)", "squares", "--seed", "3", *H]
    assert cli.main([*argv, "--out", str(a)]) == 0
    assert cli.main([*argv, "--out", str(b)]) == 0
    assert capsys.readouterr().out == ""
    assert a.read_bytes() == b.read_bytes()


def test_env_horizon(capsys, monkeypatch):
    monkeypatch.setenv("CESARO_HORIZON", "5000")
    _, doc = run_json(capsys, "eval", "odds")
    assert doc["profile"]["horizon"] == 5000


def test_console_script_byte_identical():
    cmd = [sys.executable, "-m", "cesaro.cli", "eval", "evens | squares", "--horizon", "10000"]
    outs = [subprocess.run(cmd, capture_output=True, check=True).stdout for _ in range(2)]
    assert outs[0] == outs[1] and json.loads(outs[0])["command"] == "eval"
