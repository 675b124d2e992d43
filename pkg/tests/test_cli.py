import json
import subprocess
import sys

import numpy as np
import pytest

from dsmetric import errors, schema
from dsmetric.cantor import dyadic_cantor
from dsmetric.cli import main
from dsmetric.metric import FiniteMetricSpace
from dsmetric.relation import DsDistanceWitness, check_ds_witness


def put(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


LINE2 = {"kind": "euclidean", "points": [[0], [1]]}


@pytest.fixture
def files(tmp_path):
    return {
        "id0": put(tmp_path, "id0.json", {"space": LINE2, "pairs": [[0, 0]]}),
        "id1": put(tmp_path, "id1.json", {"space": LINE2, "pairs": [[1, 1]]}),
        "bad": put(tmp_path, "bad.json", {"kind": "matrix", "dist": [[0, 1], [2, 0]]}),
        "a": put(tmp_path, "a.json", {"space": {"kind": "euclidean", "points": [[0, 0], [1, 0], [0, 3]]},
                                      "pairs": [[0, 1], [1, 2], [2, 0]]}),
        "b": put(tmp_path, "b.json", {"space": {"kind": "euclidean", "points": [[5, 5], [6, 5], [5, 8]]},
                                      "pairs": [[0, 1], [1, 2], [2, 0]]}),
        "space": put(tmp_path, "space.json", {"kind": "euclidean", "points": [[x] for x in np.linspace(0, 1, 11)]}),
        "tmp": tmp_path,
    }


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ds_prints_one(files, capsys):
    code, out, _ = run(["ds", "--f", files["id0"], "--g", files["id1"]], capsys)
    assert code == 0 and out.strip() == "1.0"


def test_validate_asymmetric(files, capsys):
    code, _, err = run(["validate", "--input", files["bad"]], capsys)
    assert code == 2 and "AsymmetricMatrix" in err


def test_validate_ok(files, capsys):
    code, out, _ = run(["validate", "--input", files["id0"]], capsys)
    assert code == 0 and "BijectionAnalog" in out


def test_dgh_translated(files, capsys):
    out = str(files["tmp"] / "dgh.json")
    code, _, _ = run(["dgh", "--f", files["a"], "--g", files["b"], "--out", out], capsys)
    doc = json.load(open(out))
    assert code == 0
    assert (doc["lower"], doc["upper"], doc["exact"]) == (0, 0, True)
    assert doc["schema"] == "dsmetric/1"
    run(["dgh", "--f", files["a"], "--g", files["b"], "--euclidean", "--out", out], capsys)
    assert json.load(open(out))["upper"] == 0


def test_budget_exit_code(files, capsys, tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, (5, 1)).tolist()
    f = put(tmp_path, "f5.json", {"space": {"kind": "euclidean", "points": pts},
                                  "pairs": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 0], [0, 2]]})
    g = put(tmp_path, "g5.json", {"space": {"kind": "euclidean", "points": pts},
                                  "pairs": [[0, 0], [1, 3], [3, 1], [2, 4], [4, 2]]})
    out = str(tmp_path / "partial.json")
    code, stdout, _ = run(["dgh", "--f", f, "--g", g, "--budget", "3", "--out", out], capsys)
    doc = json.load(open(out))
    assert code == 3 and doc["budget_exhausted"] and doc["lower"] <= doc["upper"]
    assert "budget exhausted" in stdout
    code, _, err = run(["sft", "--input", f, "--depth", "6", "--eps", "0.01", "--budget", "10"], capsys)
    assert code == 3 and "exceed the budget" in err


def test_unknown_command_and_schema_errors(files, capsys, tmp_path):
    assert run(["frobnicate"], capsys)[0] == 2
    missing = put(tmp_path, "m.json", {"space": LINE2})
    code, _, err = run(["validate", "--input", missing], capsys)
    assert code == 2 and "SchemaError" in err and ".pairs" in err
    wrong = put(tmp_path, "w.json", {"schema": "other/9", "kind": "matrix", "dist": [[0]]})
    assert run(["validate", "--input", wrong], capsys)[0] == 2
    code, _, err = run(["ds", "--f", str(tmp_path / "nope.json"), "--g", files["id0"]], capsys)
    assert code == 2


def test_space_file_reference(files, capsys, tmp_path):
    ref = put(tmp_path, "ref.json", {"space": "space.json", "pairs": [[i, i] for i in range(11)]})
    out = str(tmp_path / "g.json")
    cert = str(tmp_path / "cert.json")
    code, _, _ = run(["discretize", "--input", ref, "--eps", "0.25", "--out", out, "--certificate", cert], capsys)
    assert code == 0
    doc = json.load(open(out))
    assert doc["certificate"]["net"] == [0, 5, 10]
    assert json.load(open(cert))["certificate"]["distance"] <= 0.25
    code, out2, _ = run(["ds", "--f", ref, "--g", out], capsys)
    assert float(out2) == doc["certificate"]["distance"]


def test_witness_recomputes(files, capsys, tmp_path):
    out = str(tmp_path / "ds.json")
    run(["ds", "--f", files["id0"], "--g", files["id1"], "--out", out], capsys)
    doc = json.load(open(out))
    f, g = schema.load_relation(files["id0"]), schema.load_relation(files["id1"])
    w = doc["witness"]
    src, dst = (f, g) if w["direction"] == "f→g" else (g, f)
    wit = DsDistanceWitness(w["value"], tuple(w["from"]), tuple(w["to"]), w["direction"])
    assert check_ds_witness(f, g, wit) and w["value"] == doc["value"]
    assert max(src.space.d(w["from"][0], w["to"][0]), src.space.d(w["from"][1], w["to"][1])) == doc["value"]


@pytest.mark.parametrize("argv", [
    ["sft", "--input", "{a}", "--depth", "1", "--eps", "0.1", "--bits", "1"],
    ["am", "--f", "{a}", "--g", "{b}"],
    ["hausdorff", "--f", "{id0}", "--g", "{id1}"],
    ["diagnose", "--input", "{a}", "--eps-list", "0.5,2", "--r-list", "1,4"],
    ["regress-power", "--n", "1,4,20"],
    ["manifold-approx", "--fixture", "circle", "--eps", "0.3"],
])
def test_commands_are_deterministic(files, capsys, argv):
    argv = [a.format(**files) for a in argv]
    outs = []
    for k in range(2):
        path = str(files["tmp"] / f"out{k}.json")
        code, _, err = run(argv + ["--out", path, "--seed", str(k)], capsys)
        assert code == 0, err
        outs.append(open(path, "rb").read())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["schema"] == "dsmetric/1"


def test_tree_commands(files, capsys, tmp_path):
    A = put(tmp_path, "A.json", schema.to_plain(schema.tree_to_json(dyadic_cantor(3))))
    B = put(tmp_path, "B.json", schema.to_plain(schema.tree_to_json(dyadic_cantor(3, origin=0.01))))
    out = str(tmp_path / "m.json")
    code, _, _ = run(["cantor-match", "--f", A, "--g", B, "--delta", "0.05", "--out", out], capsys)
    doc = json.load(open(out))
    assert code == 0 and doc["displacement"] == pytest.approx(0.01) and doc["bijection"]
    pts = [[0.0], [1.0], [0.02], [1.02]]
    space = {"kind": "euclidean", "points": pts}
    g = put(tmp_path, "g.json", {"space": space, "pairs": [[0, 1], [1, 0]]})
    j = put(tmp_path, "j.json", {"space": space, "pairs": [[2, 3], [3, 2]]})
    code, _, err = run(["conjugate-pair", "--f", g, "--g", j, "--delta", "0.1", "--out", out], capsys)
    doc = json.load(open(out))
    assert code == 0, err
    assert doc["h1"] == [[0, 2], [1, 3]] and doc["displacement1"] == pytest.approx(0.02)


def test_torus_space_roundtrip():
    s = FiniteMetricSpace.torus([[0.1, 0.2], [0.9, 0.5]], (1.0, 1.0))
    t = schema.space_from_json(schema.to_plain(schema.space_to_json(s)))
    assert t.kind == "torus" and np.allclose(t.dist, s.dist)


def test_rounding():
    assert schema.fmt(1.0) == "1.0"
    assert schema.round_sig(0.1 + 0.2) == 0.3
    assert schema.round_sig(1 / 3) == 0.333333333333
    assert schema.round_sig(-0.0) == 0.0


def test_module_entry_point(files):
    r = subprocess.run([sys.executable, "-m", "dsmetric", "ds", "--f", files["id0"], "--g", files["id1"]],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "1.0"


def test_schema_error_carries_path():
    with pytest.raises(errors.SchemaError) as info:
        schema.relation_from_json({"space": {"kind": "blob"}, "pairs": []})
    assert info.value.path == "$.space.kind"
