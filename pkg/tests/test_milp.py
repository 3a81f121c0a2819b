import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from milp_fuzz import enumerate_reference, random_model
from vsro.milp import (LinearProgram, MilpModel, ModelError, branch_and_bound, export_lp_file,
                       lp_text, read_lp_file, simplex_solve, solve)
from vsro.problems import assignment_instance, optimal_value

FROZEN = json.loads((Path(__file__).parent / "data" / "frozen.json").read_text())


def test_small_lps():
    lp = LinearProgram("max")
    lp.add_var("x", obj=1)
    lp.add_var("y", obj=1)
    lp.add_row({"x": 1, "y": 1}, "<=", 1)
    r = simplex_solve(lp)
    assert r.status == "optimal" and r.objective == pytest.approx(1)
    assert r.dual_objective == pytest.approx(1, abs=1e-8)

    bad = LinearProgram()
    bad.add_var("x", obj=1)
    bad.add_row({"x": 1}, ">=", 1)
    bad.add_row({"x": 1}, "<=", 0)
    assert simplex_solve(bad).status == "infeasible"

    unb = LinearProgram("max")
    unb.add_var("x", obj=1)
    assert simplex_solve(unb).status == "unbounded"


def test_degenerate_lp_terminates():
    # a classic cycling example for Dantzig pricing without anti-cycling
    lp = LinearProgram("max")
    for j, c in enumerate([0.75, -150, 0.02, -6]):
        lp.add_var(f"x{j}", obj=c)
    lp.add_row({0: 0.25, 1: -60, 2: -0.04, 3: 9}, "<=", 0)
    lp.add_row({0: 0.5, 1: -90, 2: -0.02, 3: 3}, "<=", 0)
    lp.add_row({2: 1}, "<=", 1)
    r = simplex_solve(lp)
    assert r.status == "optimal" and r.objective == pytest.approx(0.05)


def test_small_milps():
    m = MilpModel("max")
    m.add_binary("x", 3)
    m.add_binary("y", 2)
    m.add_row({"x": 1, "y": 1}, "<=", 1)
    assert branch_and_bound(m).objective == 3
    # all binaries fixed: same as the LP
    f = MilpModel("min")
    f.add_binary("b", 1)
    f.add_var("z", obj=2)
    f.add_row({"b": 1}, "=", 1)
    f.add_row({"z": 1, "b": -1}, ">=", 0.5)
    assert branch_and_bound(f).objective == pytest.approx(simplex_solve(f).objective) == pytest.approx(4)


def test_unbounded_relaxation_of_infeasible_milp():
    # free continuous variable makes the relaxation unbounded; 4b = 2 has no binary solution
    m = MilpModel("min")
    m.add_binary("b", 0)
    m.add_var("z", obj=1, lb=-math.inf)
    m.add_row({"b": 4}, "=", 2)
    assert branch_and_bound(m).status == "infeasible"
    ok = MilpModel("min")
    ok.add_binary("b", 0)
    ok.add_var("z", obj=1, lb=-math.inf)
    ok.add_row({"b": 1}, "=", 1)
    assert branch_and_bound(ok).status == "unbounded"


def test_budget_is_flagged():
    m = random_model(2, 16)
    r = branch_and_bound(m, node_budget=1)
    assert r.status in ("budget", "optimal", "infeasible")
    if r.status == "budget":
        assert r.bound is not None


def test_model_validation():
    m = MilpModel()
    m.add_var("x")
    with pytest.raises(ModelError):
        m.add_var("x")
    with pytest.raises(ModelError):
        m.add_var("bad name")
    with pytest.raises(ModelError):
        m.add_var("y", lb=2, ub=1)
    with pytest.raises(ModelError):
        m.add_row({"x": float("nan")}, "<=", 1)
    with pytest.raises(ModelError):
        LinearProgram("minimise")


def test_assignment_root_is_integral():
    rng = np.random.default_rng(5)
    for _ in range(5):
        c = rng.integers(0, 20, 16).astype(float)
        inst = assignment_instance(c)
        A, b, _ = inst.polyhedron()
        lp = LinearProgram()
        for i in range(16):
            lp.add_var(f"x{i}", 0, 1, c[i])
        for r in range(len(b)):
            lp.add_row({j: A[r, j] for j in range(16) if A[r, j]}, ">=", b[r])
        res = simplex_solve(lp)
        assert np.allclose(res.x, np.round(res.x), atol=1e-9)
        assert res.objective == pytest.approx(optimal_value(inst, c))


def test_frozen_enumeration_values():
    for case in FROZEN["milp"]:
        m = MilpModel("min")
        nb = len(case["binaries"])
        for j, (cj, u) in enumerate(zip(case["c"], case["ub"])):
            if j < nb:
                m.add_binary(f"b{j}", cj)
            else:
                m.add_var(f"x{j}", 0, u, cj)
        for row, rhs in zip(case["A"], case["b"]):
            m.add_row(dict(enumerate(row)), "<=", rhs)
        r = branch_and_bound(m)
        assert r.status == case["status"]
        if r.status == "optimal":
            assert r.objective == pytest.approx(case["value"], abs=1e-9)


@given(st.integers(0, 100_000))
def test_branch_and_bound_matches_enumeration(seed):
    m = random_model(seed, max_binaries=10)
    status, val = enumerate_reference(m)
    r = branch_and_bound(m)
    assert r.status == status
    if status == "optimal":
        assert r.objective == pytest.approx(val, abs=1e-6)
        assert solve(m, "highs").objective == pytest.approx(val, abs=1e-6)


@given(st.integers(0, 100_000))
def test_strong_duality(seed):
    m = random_model(seed, max_binaries=6)
    r = simplex_solve(m)  # relaxation
    if r.status == "optimal":
        assert abs(r.objective - r.dual_objective) <= 1e-8


def test_lp_text_format(tmp_path):
    assert lp_text(MilpModel()) == "Minimize\n obj:\nSubject To\nEnd\n"
    m = MilpModel("max")
    m.add_binary("b0", 3)
    m.add_var("x", -math.inf, 4, 1)
    m.add_var("y", -2, math.inf, 0.1)
    m.add_var("z", 0, math.inf, 1)
    m.add_row({"b0": 1, "x": 1, "y": 1 / 3}, "<=", 5, "cap")
    text = lp_text(m)
    assert text.startswith("Maximize\n") and text.endswith("End\n")
    assert "Binary\n b0\n" in text
    assert "0.333333333333" in text
    assert text.isascii() and "\r" not in text
    p = tmp_path / "m.lp"
    export_lp_file(m, p)
    assert p.read_bytes() == text.encode("ascii")
    back = read_lp_file(p)
    assert lp_text(back) == text
    assert solve(back).objective == pytest.approx(solve(m).objective)


@given(seed=st.integers(0, 100_000))
def test_lp_round_trip(tmp_path_factory, seed):
    m = random_model(seed, max_binaries=6)
    p = tmp_path_factory.mktemp("lp") / "m.lp"
    export_lp_file(m, p)
    back = read_lp_file(p)
    a, b = branch_and_bound(m), branch_and_bound(back)
    assert a.status == b.status
    if a.status == "optimal":
        assert a.objective == pytest.approx(b.objective, abs=1e-9)


def test_lp_file_readable_by_highs(tmp_path):
    highspy = pytest.importorskip("highspy")
    from vsro.inverse_milp import InverseProblemSpec, build
    from vsro.problems import feasible_matrix
    c = np.array([4, 1, 1, 7, 5, 4, 8, 4, 8.0])
    inst = assignment_instance(c)
    xh = np.zeros(9)
    xh[[0, 5, 7]] = 1
    X = feasible_matrix(inst)
    spec = InverseProblemSpec(inst, xh, "best-general", 100 * xh, c * (1 - xh), pool=list(X))
    p = tmp_path / "ex.lp"
    export_lp_file(build(spec).model, p)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(p))
    h.run()
    assert h.getInfo().objective_function_value == pytest.approx(29)
