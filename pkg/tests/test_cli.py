import csv
import json

import numpy as np
import pytest

from vsro.cli import run
from vsro.harness import gen_series_parallel
from vsro.problems import instance_to_dict

EXAMPLE = {"kind": "assignment", "n": 9, "p": 3, "c_hat": [4, 1, 1, 7, 5, 4, 8, 4, 8]}
X_HAT = "0,5,7"
CAP_PLUS = "0,0,0,0,0,0,0,0,0".split(",")
for i in (0, 5, 7):
    CAP_PLUS[i] = "100"
CAP_MINUS = [str(0 if i in (0, 5, 7) else c) for i, c in enumerate(EXAMPLE["c_hat"])]


@pytest.fixture
def example(tmp_path):
    p = tmp_path / "ex.json"
    p.write_text(json.dumps(EXAMPLE))
    return p


def test_frontier_chart(tmp_path):
    inst, meta = gen_series_parallel(8, seed=5)
    data = instance_to_dict(inst)
    data["d"] = meta["d"].tolist()
    p = tmp_path / "sp.json"
    p.write_text(json.dumps(data))
    out = tmp_path / "chart.csv"
    assert run(["solve-frontier", "--instance", str(p), "--shape", "constant", "--out", str(out),
                "--oracle"]) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0][0] == "lambda_lo" and 1 <= len(rows) - 1 <= meta["N"]
    for shape in ("arbitrary", "manhattan", "euclidean"):
        assert run(["solve-frontier", "--instance", str(p), "--shape", shape, "--out",
                    str(tmp_path / f"{shape}.csv"), "--oracle"]) == 0


def test_inverse_best_example(example, tmp_path):
    out = tmp_path / "st.json"
    code = run(["inverse-best", "--instance", str(example), "--mode", "general", "--x", X_HAT,
                "--cap-plus", ",".join(CAP_PLUS), "--cap-minus", ",".join(CAP_MINUS),
                "--oracle", "--out", str(out)])
    assert code == 0
    res = json.loads(out.read_text())
    assert res["objective"] == pytest.approx(29) and res["status"] == "optimal"


def test_regret_nominal_zero(example, tmp_path):
    out = tmp_path / "r.json"
    assert run(["regret", "--instance", str(example), "--lambda", "0", "--oracle", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["regret"] == 0
    assert run(["regret", "--instance", str(example), "--mode", "general", "--d-plus", "1",
                "--d-minus", "2", "--x", X_HAT, "--oracle", "--out", str(out)]) == 0


def test_infeasible_exits_2_with_status(example, tmp_path):
    out = tmp_path / "w.json"
    assert run(["inverse-worst", "--instance", str(example), "--out", str(out), "--x", "2,3,7"]) == 2
    assert json.loads(out.read_text())["status"] == "infeasible"


def test_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "assignment", "p": 3, "c_hat": [1, "x"]}))
    assert run(["regret", "--instance", str(bad), "--lambda", "0"]) == 1
    assert "c_hat" in capsys.readouterr().err
    assert run(["regret", "--instance", str(tmp_path / "missing.json"), "--lambda", "0"]) == 1
    bad.write_text(json.dumps({"kind": "assignment", "c_hat": [1, 2, 3, 4]}))
    assert run(["regret", "--instance", str(bad), "--lambda", "0"]) == 1
    assert "'p'" in capsys.readouterr().err
    assert run(["regret", "--instance", str(bad), "--lambda", "0", "--out", "/no/such/dir/x.json"]) == 1


def test_outputs_are_byte_identical(example, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}.json"
        run(["inverse-best", "--instance", str(example), "--mode", "general", "--x", X_HAT,
             "--cap-plus", "5", "--cap-minus", "5", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_gen_and_export(tmp_path):
    inst_path = tmp_path / "g.json"
    assert run(["gen", "--kind", "assignment", "--p", "3", "--seed", "4", "--out", str(inst_path)]) == 0
    lp = tmp_path / "m.lp"
    assert run(["export-lp", "--instance", str(inst_path), "--cap-plus", "5", "--cap-minus", "5",
                "--out", str(lp), "--oracle"]) == 0
    assert lp.read_text().startswith("Maximize")
    for kind in ("series-parallel", "layered"):
        assert run(["gen", "--kind", kind, "--out", str(tmp_path / f"{kind}.json")]) == 0


def test_experiment_command(tmp_path):
    out = tmp_path / "exp"
    assert run(["experiment", "--p", "3", "--instances", "3", "--samples", "5", "--no-timings",
                "--oracle", "--out", str(out)]) == 0
    assert (out / "raw.csv").exists() and (out / "stats.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["instances"] == 3
