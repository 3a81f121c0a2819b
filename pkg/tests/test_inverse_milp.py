import numpy as np
import pytest
from hypothesis import given, strategies as st

from vsro import milp
from vsro.inverse_milp import (InverseError, InverseProblemSpec, build, corollary_caps,
                               regrets, row_generation_solve, solve_model,
                               unconstrained_bestcase, witness_oracle)
from vsro.problems import (assignment_instance, feasible_matrix, shortest_path_instance,
                           solve_nominal, unconstrained_instance)
from vsro.regret import best_case_lambda, worst_case_lambda

C = np.array([4, 1, 1, 7, 5, 4, 8, 4, 8.0])
XH = np.zeros(9)
XH[[0, 5, 7]] = 1
# increases only on x_hat, decreases only elsewhere (kept nonnegative)
CAPS = (100 * XH, C * (1 - XH))
TWO = assignment_instance([1, 2, 2, 1])
DIAG, ANTI = [1, 0, 0, 1], [0, 1, 1, 0]


def full(spec):
    X = feasible_matrix(spec.instance)
    s = InverseProblemSpec(spec.instance, spec.x_hat, spec.mode, spec.M_plus, spec.M_minus, spec.eps,
                           pool=list(X), pool_bar=list(X), symmetric=spec.symmetric,
                           duality=spec.duality)
    im = build(s)
    return im, solve_model(im, "bundled")


def test_bestcase_regular_examples():
    s = InverseProblemSpec(TWO, DIAG, "best-regular")
    assert solve_model(build(s)).objective == pytest.approx(1)  # pool {x_hat}
    assert full(s)[1].objective == pytest.approx(1)
    r = row_generation_solve(s)
    assert r.objective == pytest.approx(1) and len(r.trace) <= 2
    inst = assignment_instance(C)
    s = InverseProblemSpec(inst, XH, "best-regular")
    assert full(s)[1].objective == pytest.approx(best_case_lambda(inst, XH)[0])


def test_worstcase_regular_examples():
    assert full(InverseProblemSpec(TWO, DIAG, "worst-regular", eps=1))[1].status == "infeasible"
    assert full(InverseProblemSpec(TWO, ANTI, "worst-regular", eps=1))[1].objective == pytest.approx(0)


def test_bestcase_general_examples():
    inst = assignment_instance(C)
    s = InverseProblemSpec(inst, XH, "best-general", *CAPS)
    im, res = full(s)
    assert res.objective == pytest.approx(29)
    d = im.decode(res)
    r, _ = regrets(s, feasible_matrix(inst), d)
    ih = int(np.flatnonzero(np.all(feasible_matrix(inst) == XH, axis=1))[0])
    assert r[ih] <= r.min() + 1e-9  # x_hat stays regret-optimal under d*
    rg = row_generation_solve(s)
    assert rg.objective == pytest.approx(29) and len(rg.trace) <= 6
    assert rg.value.size == pytest.approx(29)
    assert witness_oracle(s)[0] == pytest.approx(29)
    zero = InverseProblemSpec(inst, XH, "best-general", 0, 0)
    assert full(zero)[1].objective == pytest.approx(0)
    u = unconstrained_instance([-3, 5])
    s = InverseProblemSpec(u, [1, 0], "best-general", [100, 0], [0, 100])
    assert row_generation_solve(s).objective == pytest.approx(16)
    assert witness_oracle(s)[0] == pytest.approx(16)
    with pytest.raises(InverseError, match="finite"):
        build(InverseProblemSpec(u, [1, 0], "best-general", None, 5))


def test_worstcase_general_examples():
    s = InverseProblemSpec(unconstrained_instance([1]), [0], "worst-general", 100, 100, eps=0.5)
    assert row_generation_solve(s).objective == pytest.approx(2.5)
    assert witness_oracle(s)[0] == pytest.approx(2.5)
    one = shortest_path_instance(2, [(0, 1)], 0, 1, [3])
    assert row_generation_solve(InverseProblemSpec(one, [1], "worst-general", 5, 5)).status == "infeasible"
    s = InverseProblemSpec(TWO, DIAG, "worst-general", 20, 20, eps=1)
    assert row_generation_solve(s).objective == pytest.approx(witness_oracle(s)[0])


def test_closed_form_examples():
    d = unconstrained_bestcase([-3, 5], [np.inf, 0], [0, np.inf])
    assert list(d.d_plus) == [6, 0] and list(d.d_minus) == [0, 10] and d.size == 16
    d = unconstrained_bestcase([2], 3, 10)
    assert (d.d_plus[0], d.d_minus[0]) == (3, 7)
    d = unconstrained_bestcase([2, -1], 0, 0)
    assert d.size == 0


def test_spec_validation():
    with pytest.raises(InverseError):
        InverseProblemSpec(TWO, [1, 1, 0, 0], "best-regular")
    with pytest.raises(InverseError):
        InverseProblemSpec(TWO, DIAG, "sideways")
    with pytest.raises(InverseError):
        InverseProblemSpec(TWO, DIAG, "worst-general", 1, 1, eps=0)
    with pytest.raises(InverseError):
        InverseProblemSpec(assignment_instance([1, -2, 2, 1]), DIAG, "best-regular")


def test_lp_export_of_example_round_trips(tmp_path):
    inst = assignment_instance(C)
    im, res = full(InverseProblemSpec(inst, XH, "best-general", *CAPS))
    p = tmp_path / "ex.lp"
    milp.export_lp_file(im.model, p)
    back = milp.read_lp_file(p)
    assert milp.solve(back, "highs").objective == pytest.approx(29)


def _mccormick_exact(im, res):
    m = im.model
    for k, name in enumerate(m.row_names):
        if name.endswith("_a"):
            w = m.index(name[:-2])
            cont = next(j for j in m.rows[k][0] if j != w)
            brow = m.rows[m.row_names.index(name[:-2] + "_b")][0]
            b = next(j for j in brow if j != w)
            assert res.x[w] == pytest.approx(res.x[cont] * res.x[b], abs=1e-9)


# --- properties: formulations against oracles --------------------------------------------------

@given(st.integers(0, 10_000), st.sampled_from(["best-general", "worst-general"]), st.booleans())
def test_general_modes_match_witness_oracle(seed, mode, duality):
    rng = np.random.default_rng(seed)
    inst = assignment_instance(rng.integers(0, 21, 9).astype(float))
    X = feasible_matrix(inst)
    xh = X[int(rng.integers(0, 6))]
    Mp, Mm = rng.integers(0, 21, 9).astype(float), rng.integers(0, 21, 9).astype(float)
    s = InverseProblemSpec(inst, xh, mode, Mp, Mm, eps=1.0, duality=duality)
    ref = witness_oracle(s, X=X)[0]
    r = row_generation_solve(s, X=X)
    if ref is None:
        assert r.status == "infeasible"
    else:
        assert r.status == "optimal" and r.objective == pytest.approx(ref, abs=1e-6)


@given(st.integers(0, 10_000), st.sampled_from(["best-regular", "worst-regular"]), st.booleans())
def test_regular_modes_match_scan(seed, mode, duality):
    rng = np.random.default_rng(seed)
    inst = assignment_instance(rng.integers(0, 21, 9).astype(float))
    X = feasible_matrix(inst)
    xh = X[int(rng.integers(0, 6))]
    s = InverseProblemSpec(inst, xh, mode, eps=1.0, duality=duality)
    ref = best_case_lambda(inst, xh)[0] if mode == "best-regular" else worst_case_lambda(inst, xh, 1.0)
    r = row_generation_solve(s, X=X)
    if ref is None:
        assert r.status == "infeasible"
    else:
        assert r.objective == pytest.approx(ref, abs=1e-6)


@given(st.lists(st.integers(-10, 10), min_size=1, max_size=4))
def test_unconstrained_closed_form_matches_oracle(c):
    Mp, Mm = corollary_caps(c)
    d = unconstrained_bestcase(c, Mp, Mm)
    assert d.size == pytest.approx(sum(2 * abs(v) for v in c))
    xh = solve_nominal(unconstrained_instance(c)).array
    ref = witness_oracle(InverseProblemSpec(unconstrained_instance(c), xh, "best-general", Mp, Mm))[0]
    assert d.size == pytest.approx(ref, abs=1e-6)


@given(st.lists(st.integers(-10, 10), min_size=1, max_size=4),
       st.lists(st.integers(0, 15), min_size=4, max_size=4),
       st.lists(st.integers(0, 15), min_size=4, max_size=4))
def test_closed_form_maximality(c, mp, mm):
    n = len(c)
    c = np.array(c, float)
    Mp, Mm = np.array(mp[:n], float), np.array(mm[:n], float)
    d = unconstrained_bestcase(c, Mp, Mm)
    packed = c <= 0
    g = 2 * c + d.d_plus - d.d_minus
    assert np.all(g[packed] <= 1e-12) and np.all(g[~packed] >= -1e-12)
    for i in range(n):
        if d.d_plus[i] + 1e-3 <= Mp[i] and packed[i]:
            assert 2 * c[i] + d.d_plus[i] + 1e-3 - d.d_minus[i] > 0
        if d.d_minus[i] + 1e-3 <= Mm[i] and not packed[i]:
            assert 2 * c[i] + d.d_plus[i] - d.d_minus[i] - 1e-3 < 0


@given(st.integers(0, 10_000), st.sampled_from(["best-regular", "worst-regular",
                                                "best-general", "worst-general"]))
def test_mccormick_rows_are_exact(seed, mode):
    rng = np.random.default_rng(seed)
    inst = assignment_instance(rng.integers(0, 21, 4).astype(float))
    xh = feasible_matrix(inst)[int(rng.integers(0, 2))]
    s = InverseProblemSpec(inst, xh, mode, 10.0, 10.0, eps=1.0)
    im, res = full(s)
    if res.status == "optimal":
        _mccormick_exact(im, res)


@given(st.integers(0, 10_000))
def test_row_generation_pool_strictly_grows(seed):
    rng = np.random.default_rng(seed)
    inst = assignment_instance(rng.integers(0, 21, 9).astype(float))
    xh = solve_nominal(inst).array
    r = row_generation_solve(InverseProblemSpec(inst, xh, "best-general", 10.0, 10.0))
    sizes = [t[0] for t in r.trace]
    assert all(a < b for a, b in zip(sizes, sizes[1:])) and sizes[-1] <= 6
