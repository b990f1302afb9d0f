import json

import pytest

from osquant.cli import run


def _run(tmp_path, argv, payload=None):
    args = list(argv)
    if payload is not None:
        src = tmp_path / "in.json"
        src.write_text(json.dumps(payload))
        args += ["--input", str(src)]
    out = tmp_path / "out.json"
    code = run(args + ["--output", str(out), "--no-timestamp"])
    return code, json.loads(out.read_text())


def test_switch_demo(tmp_path):
    code, rep = _run(tmp_path, ["switch", "demo", "--dim", "2", "--n", "2"])
    assert code == 0
    assert abs(rep["result"]["mbLower"] - 2) <= 1e-9 and rep["result"]["verdict"] == "obstructed"


def test_hs_suite_on_identity(tmp_path):
    code, rep = _run(tmp_path, ["channel", "hs-suite"], {"channel": {"preset": "identity", "d": 2}})
    assert code == 0 and all(v["status"] == "holds" for v in rep["verdicts"])


def test_cbnorm_transpose(tmp_path):
    code, rep = _run(tmp_path, ["cbnorm", "--max-level", "2"], {"map": {"preset": "transpose", "k": 2}})
    est = rep["result"]["estimate"]
    assert code == 0 and abs(est["lower"] - 2) <= 1e-9 and est["exact"]
    code, _ = _run(tmp_path, ["cbnorm", "--max-level", "2"], {"map": {"preset": "transpose", "k": 2},
                                                               "claimBound": 1})
    assert code == 1


def test_channel_check_falsifies_transpose(tmp_path):
    code, rep = _run(tmp_path, ["channel", "check"], {"channel": {"preset": "transpose", "d": 2}})
    assert code == 1
    assert rep["result"]["checks"]["completelyPositive"]["status"] == "fails"


def test_jcb_of_switch_is_inconclusive_not_false(tmp_path):
    code, rep = _run(tmp_path, ["jcb", "--max-level", "1", "--restarts", "4"],
                     {"bilinear": {"preset": "switch", "dim": 2}})
    assert code == 2 and rep["result"]["estimate"]["lower"] <= 1 + 1e-6


def test_mb_of_switch_is_falsified(tmp_path):
    code, rep = _run(tmp_path, ["mb", "--max-level", "2", "--restarts", "4"],
                     {"bilinear": {"preset": "switch", "dim": 2}})
    assert code == 1 and rep["result"]["estimate"]["lower"] >= 2 - 1e-6


def test_norm_and_tensor_norm(tmp_path):
    elem = {"level": 1, "coords": [[[[1, 0], [0, 0], [0, 0], [-1, 0]]]]}
    code, rep = _run(tmp_path, ["norm"], {"space": {"kind": "traceClass", "k": 2}, "element": elem})
    assert code == 0 and rep["result"]["estimate"]["lower"] == pytest.approx(2.0)
    vec = [[1, 0]] + [[0, 0]] * 15
    code, rep = _run(tmp_path, ["tensor-norm", "--kind", "haag"],
                     {"left": {"kind": "matrix", "k": 2}, "right": {"kind": "matrix", "k": 2}, "element": vec})
    assert code == 0 and rep["result"]["estimate"]["upper"] == pytest.approx(1.0)


def test_chu_commands(tmp_path):
    code, rep = _run(tmp_path, ["chu", "interpret", "--formula", "N:2 & M:2"])
    assert code == 0 and rep["result"]["row"]["space"] == "B(H_N) ⊕^∞ B(H_M)"
    code, rep = _run(tmp_path, ["chu", "check"], {"d": 2, "channel": {"preset": "random", "d": 2}})
    assert code == 0
    code, rep = _run(tmp_path, ["chu", "check"], {"d": 2, "channel": {"preset": "random", "d": 2},
                                                  "perturb": 1e-3})
    assert code == 1


def test_verify_axioms_on_input_space(tmp_path):
    code, rep = _run(tmp_path, ["verify-axioms", "--samples", "5"], {"space": {"kind": "matrix", "k": 2}})
    assert code == 0 and rep["result"]["spaces"]["input"]["holds"]


def test_input_errors_exit_three(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"space": [1, 2,')
    assert run(["norm", "--input", str(bad)]) == 3
    assert "line 1, column" in capsys.readouterr().err
    assert run(["norm", "--input", str(tmp_path / "missing.json")]) == 3
    assert run(["frobnicate"]) == 3
    assert run(["chu", "interpret", "--formula", "P:2 * N:2"]) == 3
    code, rep = _run(tmp_path, ["norm"], {"space": {"kind": "matrix", "k": 2}})
    assert code == 3 and "missing field 'element'" in rep["error"]


def test_reports_are_reproducible(tmp_path):
    payload = {"map": {"preset": "transpose", "k": 2}}
    _, a = _run(tmp_path, ["cbnorm", "--max-level", "2", "--seed", "9"], payload)
    _, b = _run(tmp_path, ["cbnorm", "--max-level", "2", "--seed", "9"], payload)
    assert a == b and "timestamp" not in a
