import json

import pytest

from biasaudit.cli import main

SCHEMA = {"groups": [{"name": "hair_type", "labels": ["bald", "straight", "wavy"]},
                     {"name": "gender", "labels": ["man", "woman"]},
                     {"name": "age", "labels": ["young", "old", "child"]}]}


@pytest.fixture
def files(tmp_path):
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps(SCHEMA))
    paths = {"schema": schema}
    for name, seed, beta in (("a", 1, 0.06), ("b", 2, 0.04)):
        spec = tmp_path / f"spec_{name}.json"
        spec.write_text(json.dumps({"base_mean": 0.6, "base_std": 0.05, "k": 30, "seed": seed,
                                    "effects": [{"group": "hair_type", "label": "bald", "beta": beta}]}))
        out = tmp_path / f"{name}.csv"
        assert main(["simulate", "--schema", str(schema), "--spec", str(spec), "--out", str(out)]) == 0
        paths[name] = out
    return paths


def test_audit_writes_outputs(files, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["audit", "--schema", str(files["schema"]), "--scores", f"{files['a']}:det_a",
               "--scores", f"{files['b']}:det_b", "--alpha", "0.01", "--eod-mode", "threshold=0.6",
               "--out", str(out)])
    assert rc == 0
    assert {p.name for p in out.iterdir()} == {"report.json", "report.csv", "chart_det_a.svg", "chart_det_b.svg"}
    doc = json.loads((out / "report.json").read_text())
    assert doc["n_tests"] == 16
    assert doc["config"]["eod_threshold"] == 0.6
    assert "det_a:hair_type.bald" in capsys.readouterr().out


def test_corr(files, tmp_path):
    out = tmp_path / "out"
    main(["audit", "--schema", str(files["schema"]), "--scores", f"{files['a']}:x",
          "--scores", f"{files['b']}:y", "--out", str(out)])
    props = tmp_path / "props.csv"
    props.write_text("attribute,proportion\nbald,0.2\nstraight,0.5\nwavy,0.3\nman,0.4\nwoman,0.6\n")
    corr = tmp_path / "corr"
    with pytest.warns(UserWarning, match="age.young"):
        assert main(["corr", "--reports", str(out), "--proportions", str(props), "--out", str(corr)]) == 0
    names = {p.name for p in corr.iterdir()}
    assert {"correlation_brisk.csv", "correlation_brisk.json", "correlation_brisk_star.csv",
            "proportions.csv"} <= names
    matrix = json.loads((corr / "correlation_brisk.json").read_text())["matrix"]
    assert matrix[0][0] == 1.0 and matrix[0][1] > 0.9


def test_corr_needs_two_detectors(files, tmp_path):
    out = tmp_path / "out"
    main(["audit", "--schema", str(files["schema"]), "--scores", str(files["a"]), "--out", str(out)])
    assert main(["corr", "--reports", str(out), "--out", str(tmp_path / "c")]) == 2


def test_bad_proportions(files, tmp_path):
    out = tmp_path / "out"
    main(["audit", "--schema", str(files["schema"]), "--scores", str(files["a"]), "--out", str(out)])
    props = tmp_path / "p.csv"
    props.write_text("attribute,proportion\nbald,1.5\n")
    assert main(["corr", "--reports", str(out), "--proportions", str(props), "--out", str(tmp_path / "c")]) == 2


def test_sweep_and_compare(files, tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--schema", str(files["schema"]), "--scores", str(files["a"]),
                 "--fractions", "1,0.5", "--reps", "3", "--out", str(out)]) == 0
    doc = json.loads((out / "sweep.json").read_text())
    assert doc["points"][0]["std_abs_eod"] == 0.0
    out = tmp_path / "cmp"
    assert main(["compare-tests", "--schema", str(files["schema"]), "--scores", str(files["a"]),
                 "--out", str(out)]) == 0
    rows = json.loads((out / "compare_tests.json").read_text())["comparisons"]
    assert len(rows) == 8


def test_exit_codes(files, tmp_path):
    schema = str(files["schema"])
    assert main(["audit", "--schema", schema, "--scores", str(tmp_path / "none.csv"),
                 "--out", str(tmp_path / "o")]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("sample_id,score,class,hair_type,gender,age\na,2,synthetic,bald,man,old\n")
    assert main(["audit", "--schema", schema, "--scores", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["audit", "--schema", schema, "--scores", str(files["a"]), "--alpha", "2",
                 "--out", str(tmp_path / "o")]) == 2
    assert main(["audit", "--schema", schema, "--scores", str(files["a"]), "--eod-mode", "x",
                 "--out", str(tmp_path / "o")]) == 2
    lone = tmp_path / "lone.csv"
    lone.write_text("sample_id,score,class,hair_type,gender,age\n"
                    "a,0.5,synthetic,bald,man,old\nb,0.6,synthetic,straight,woman,young\n")
    out = tmp_path / "lone_out"
    assert main(["audit", "--schema", schema, "--scores", str(lone), "--out", str(out)]) == 4
    assert (out / "report.json").exists()


def test_bad_schema(tmp_path):
    schema = tmp_path / "s.json"
    schema.write_text('{"groups": [{"name": "hair", "labels": ["a"]}, {"name": "hair", "labels": ["b"]}]}')
    assert main(["simulate", "--schema", str(schema), "--spec", str(schema), "--out", str(tmp_path / "x")]) == 2


def test_bad_row_message(files, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("sample_id,score,class,hair_type,gender,age\na,0.5,synthetic,bald,man,old\n"
                   "b,0.5,synthetic,curly,man,old\n")
    main(["audit", "--schema", str(files["schema"]), "--scores", str(bad), "--out", str(tmp_path / "o")])
    err = capsys.readouterr().err
    assert "bad.csv" in err and "row 3" in err and "curly" in err
