"""Random mixed-binary models and an enumeration reference."""
from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from vsro.milp import MilpModel


def random_model(seed: int, max_binaries: int = 16) -> MilpModel:
    rng = np.random.default_rng(seed)
    pure = seed % 2 == 0
    nb = int(rng.integers(1, max_binaries + 1)) if pure else int(rng.integers(0, min(8, max_binaries) + 1))
    nc = 0 if pure else int(rng.integers(1, 4))
    m = int(rng.integers(1, 6))
    mod = MilpModel(str(rng.choice(["min", "max"])))
    for j in range(nb):
        mod.add_binary(f"b{j}", int(rng.integers(-5, 6)))
    for j in range(nc):
        lo = float(rng.choice([0, -3, -np.inf]))
        hi = float(rng.choice([np.inf, 4, 10]))
        mod.add_var(f"x{j}", lo, hi, int(rng.integers(-5, 6)))
    for i in range(m):
        co = {j: int(rng.integers(-4, 5)) for j in range(nb + nc) if rng.random() < 0.7}
        mod.add_row(co, str(rng.choice(["<=", ">=", "="])), int(rng.integers(-5, 10)))
    return mod


def _split(A, senses, b):
    ub = [(A[i], b[i]) if s == "<=" else (-A[i], -b[i]) for i, s in enumerate(senses) if s != "="]
    eq = [(A[i], b[i]) for i, s in enumerate(senses) if s == "="]
    return ([r for r, _ in ub] or None, [v for _, v in ub] or None,
            [r for r, _ in eq] or None, [v for _, v in eq] or None)


def enumerate_reference(mod: MilpModel):
    """(status, objective) by fixing every binary pattern."""
    c, A, senses, b, lb, ub = mod.matrices()
    bins = mod.binaries
    sg = 1.0 if mod.sense == "min" else -1.0
    if len(bins) == mod.n_vars:
        # pure binary: vectorised scan of all 2^n points
        P = np.array(list(itertools.product((0, 1), repeat=len(bins))), dtype=float)
        ok = np.ones(len(P), bool)
        for i, s in enumerate(senses):
            v = P @ A[i]
            ok &= (v <= b[i] + 1e-9) if s == "<=" else (v >= b[i] - 1e-9) if s == ">=" else (
                np.abs(v - b[i]) <= 1e-9)
        if not ok.any():
            return "infeasible", None
        vals = P[ok] @ c
        return "optimal", float(vals.min() if sg > 0 else vals.max())
    A_ub, b_ub, A_eq, b_eq = _split(A, senses, b)
    best, status = None, "infeasible"
    for bits in itertools.product((0.0, 1.0), repeat=len(bins)):
        lo, hi = lb.copy(), ub.copy()
        lo[bins] = bits
        hi[bins] = bits
        r = linprog(sg * c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                    bounds=list(zip(lo, hi)), method="highs")
        if r.status == 3:
            return "unbounded", None
        if r.status == 0:
            v = sg * r.fun
            if best is None or sg * v < sg * best:
                best = v
            status = "optimal"
    return status, best
