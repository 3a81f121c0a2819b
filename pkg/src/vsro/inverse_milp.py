"""Inverse min-max regret problems as mixed-integer programs.

Four problems are covered, regular (``lam``) or general (``d+``, ``d-``)
intervals crossed with best case (largest set keeping ``x_hat``
regret-optimal) and worst case (smallest set making some ``x~`` beat ``x_hat``
by ``eps``).  X is described as ``{x binary : A x >= b}``.  When the LP
relaxation is integral the regret of the solution being bounded from above
is dualised (variables ``u >= 0``); otherwise it is bounded through a pool of
primal solutions.  Products of a continuous bound with a binary are
linearised with McCormick rows whose big-M is the cap of the continuous
variable.

Regret lines used throughout: for solutions ``x, y``

    L(x, y, d) = sum_{i in x\\y} (c_i + d+_i) - sum_{i in y\\x} (c_i - d-_i)

and ``reg(x, d) = max_y L(x, y, d)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import milp
from .problems import Instance, InstanceError, Solution, feasible_matrix
from .uncertainty import GeneralInterval

MODES = ("best-regular", "worst-regular", "best-general", "worst-general")
VIOLATION_TOL = 1e-6
ORACLE_BIG = 1e7


class InverseError(ValueError):
    pass


def _vec(x) -> np.ndarray:
    return (x.array if isinstance(x, Solution) else np.asarray(x, dtype=float)).astype(float)


@dataclass
class InverseProblemSpec:
    instance: Instance
    x_hat: object
    mode: str
    M_plus: object = None
    M_minus: object = None
    eps: float = 1.0
    pool: list = field(default_factory=list)
    pool_bar: list = field(default_factory=list)
    symmetric: bool = False
    duality: bool | None = None  # None: decided from the instance

    def __post_init__(self):
        if self.mode not in MODES:
            raise InverseError(f"unknown mode {self.mode!r}")
        inst = self.instance
        self.x_hat = _vec(self.x_hat)
        if not inst.is_feasible(self.x_hat.astype(int)):
            raise InverseError("x_hat is not feasible")
        n = inst.n
        if self.general:
            caps = []
            for M in (self.M_plus, self.M_minus):
                M = np.full(n, np.inf) if M is None else np.broadcast_to(
                    np.asarray(M, dtype=float), (n,)).copy()
                if np.any(np.isnan(M)) or np.any(M < 0):
                    raise InverseError("caps must be nonnegative")
                caps.append(M)
            self.M_plus, self.M_minus = caps
        elif np.any(inst.c_hat < 0):
            raise InverseError("regular intervals need c_hat >= 0")
        if self.worst and not self.eps > 0:
            raise InverseError("eps must be > 0")
        self.pool = [_vec(p) for p in self.pool]
        self.pool_bar = [_vec(p) for p in self.pool_bar]

    @property
    def general(self) -> bool:
        return self.mode.endswith("general")

    @property
    def worst(self) -> bool:
        return self.mode.startswith("worst")

    @property
    def cap(self) -> np.ndarray:
        """Common cap for symmetric deviations."""
        return np.minimum(self.M_plus, self.M_minus)

    def use_duality(self) -> bool:
        A, b, integral = self.instance.polyhedron()
        auto = integral
        if auto and self.instance.kind == "shortest-path":
            # the flow LP is exact for nonnegative costs, or for any costs on a DAG
            if self.general and _has_cycle(self.instance) and np.any(
                    self.M_minus > self.instance.c_hat):
                auto = False
        if self.duality is None:
            return auto
        if self.duality and not auto:
            raise InverseError("duality-based model requested but the LP relaxation is not exact")
        return self.duality


def _has_cycle(inst: Instance) -> bool:
    out = inst.out_arcs
    state = [0] * inst.n_nodes

    def dfs(u):
        state[u] = 1
        for _, v, _ in out[u]:
            if state[v] == 1 or (state[v] == 0 and dfs(v)):
                return True
        state[u] = 2
        return False

    return any(state[v] == 0 and dfs(v) for v in range(inst.n_nodes))


def _check_sp(spec: InverseProblemSpec):
    inst = spec.instance
    if inst.kind == "shortest-path" and spec.general and _has_cycle(inst) and np.any(
            spec.M_minus > inst.c_hat):
        raise InverseError("shortest path with cycles needs M_minus <= c_hat "
                           "(negative cycles break the path description)")


@dataclass
class InverseModel:
    model: milp.MilpModel
    spec: InverseProblemSpec
    duality: bool

    def decode(self, res: milp.Result):
        """``lam`` for regular modes, a :class:`GeneralInterval` for general modes."""
        m, n = self.model, self.spec.instance.n
        if not self.spec.general:
            return float(res.x[m.index("lam")])
        if self.spec.symmetric:
            d = np.array([res.x[m.index(f"d{i}")] for i in range(n)])
            return GeneralInterval(np.clip(d, 0, None), np.clip(d, 0, None),
                                   self.spec.M_plus, self.spec.M_minus)
        dp = np.array([res.x[m.index(f"dp{i}")] for i in range(n)])
        dm = np.array([res.x[m.index(f"dm{i}")] for i in range(n)])
        return GeneralInterval(np.clip(dp, 0, None), np.clip(dm, 0, None),
                               self.spec.M_plus, self.spec.M_minus)


class _Builder:
    def __init__(self, spec: InverseProblemSpec, sense: str):
        self.spec = spec
        self.inst = spec.instance
        self.c = self.inst.c_hat
        self.n = self.inst.n
        self.xh = spec.x_hat
        self.A, self.b, _ = self.inst.polyhedron()
        self.m = milp.MilpModel(sense, spec.mode)
        self.duality = spec.use_duality()

    # variables
    def deviations(self, obj: float):
        s = self.spec
        if s.general:
            if not (np.all(np.isfinite(s.M_plus)) and np.all(np.isfinite(s.M_minus))):
                raise InverseError("MILP needs finite caps M_plus and M_minus: "
                                   "give a finite big-M for every coordinate")
        if s.symmetric:
            cap = s.cap
            d = [self.m.add_var(f"d{i}", 0.0, cap[i], 2 * obj) for i in range(self.n)]
            self.dp, self.dm, self.Mp, self.Mm = d, d, cap, cap
        else:
            self.dp = [self.m.add_var(f"dp{i}", 0.0, s.M_plus[i], obj) for i in range(self.n)]
            self.dm = [self.m.add_var(f"dm{i}", 0.0, s.M_minus[i], obj) for i in range(self.n)]
            self.Mp, self.Mm = s.M_plus, s.M_minus

    def duals(self):
        self.u = [self.m.add_var(f"u{r}", 0.0) for r in range(self.A.shape[0])]

    def binaries(self, tag: str):
        xs = [self.m.add_binary(f"{tag}{i}") for i in range(self.n)]
        for r in range(self.A.shape[0]):
            row = {xs[i]: self.A[r, i] for i in range(self.n) if self.A[r, i] != 0}
            self.m.add_row(row, ">=", self.b[r], f"{tag}_feas{r}")
        return xs

    def mccormick(self, name: str, cont: int, binary: int, M: float) -> int:
        """``w = cont * binary`` for ``cont`` in [0, M]."""
        w = self.m.add_var(name, 0.0, M)
        self.m.add_row({w: 1, cont: -1}, "<=", 0, f"{name}_a")
        self.m.add_row({w: 1, binary: -M}, "<=", 0, f"{name}_b")
        self.m.add_row({w: 1, cont: -1, binary: -M}, ">=", -M, f"{name}_c")
        return w

    def dual_rows(self, extra):
        """``(A^T u)_i + extra_i <= const_i``; ``extra(i)`` returns (coef dict, const)."""
        for i in range(self.n):
            row = {self.u[r]: self.A[r, i] for r in range(self.A.shape[0]) if self.A[r, i] != 0}
            coefs, rhs = extra(i)
            for k, v in coefs.items():
                row[k] = row.get(k, 0.0) + v
            self.m.add_row(row, "<=", rhs, f"dual{i}")

    def bu(self) -> dict:
        return {self.u[r]: -self.b[r] for r in range(self.A.shape[0]) if self.b[r] != 0}


def _add(row: dict, k, v):
    if v != 0:
        row[k] = row.get(k, 0.0) + v


# --- regular intervals --------------------------------------------------------------------

def build_bestcase_regular(spec: InverseProblemSpec) -> InverseModel:
    """max lam  s.t.  reg(x_hat, lam) <= reg(x~_k, lam) for every pool member."""
    if spec.mode != "best-regular":
        raise InverseError("spec.mode must be best-regular")
    B = _Builder(spec, "max")
    c, xh, m = B.c, B.xh, B.m
    lam = m.add_var("lam", 0.0, 1.0, 1.0)
    if B.duality:
        B.duals()
        B.dual_rows(lambda i: ({lam: c[i] * (1 - 2 * xh[i])}, c[i]))
    pool = spec.pool or [xh]
    bars = spec.pool_bar or [xh]
    for k, xt in enumerate(pool):
        xk = B.binaries(f"x{k}_")
        yk = [B.mccormick(f"y{k}_{i}", lam, xk[i], 1.0) for i in range(B.n)]
        base = {}
        for i in range(B.n):
            _add(base, xk[i], c[i])
            _add(base, yk[i], (2 * xt[i] - 1) * c[i])
        if B.duality:
            row = dict(base)
            _add(row, lam, c @ xh - c @ xt)
            for kk, v in B.bu().items():
                _add(row, kk, v)
            m.add_row(row, "<=", c @ xt - c @ xh, f"pool{k}")
        else:
            for ell, xb in enumerate(bars):
                row = dict(base)
                _add(row, lam, c @ xh + c @ xb - 2 * c @ (xh * xb) - c @ xt)
                m.add_row(row, "<=", c @ xt - c @ xh + c @ xb, f"pool{k}_{ell}")
    return InverseModel(m, spec, B.duality)


def build_worstcase_regular(spec: InverseProblemSpec) -> InverseModel:
    """min lam  s.t.  reg(x_hat, lam) >= reg(x~, lam) + eps, with x' and x~ as variables."""
    if spec.mode != "worst-regular":
        raise InverseError("spec.mode must be worst-regular")
    B = _Builder(spec, "min")
    c, xh, m = B.c, B.xh, B.m
    lam = m.add_var("lam", 0.0, 1.0, 1.0)
    xp = B.binaries("xp")
    xt = B.binaries("xt")
    y = [B.mccormick(f"y{i}", lam, xp[i], 1.0) for i in range(B.n)]
    beta = [B.mccormick(f"beta{i}", lam, xt[i], 1.0) for i in range(B.n)]
    lhs = {}
    _add(lhs, lam, c @ xh)
    for i in range(B.n):
        _add(lhs, xp[i], -c[i])
        _add(lhs, y[i], -(2 * xh[i] - 1) * c[i])
        _add(lhs, xt[i], -c[i])
        _add(lhs, beta[i], -c[i])
    if B.duality:
        B.duals()
        B.dual_rows(lambda i: ({lam: c[i], beta[i]: -2 * c[i]}, c[i]))
        row = dict(lhs)
        for r in range(B.A.shape[0]):
            _add(row, B.u[r], B.b[r])
        m.add_row(row, ">=", spec.eps - c @ xh, "regret")
    else:
        for k, xk in enumerate(spec.pool):
            row = dict(lhs)
            _add(row, lam, -(c @ xk))
            for i in range(B.n):
                _add(row, beta[i], 2 * c[i] * xk[i])
            m.add_row(row, ">=", spec.eps - c @ xh - c @ xk, f"pool{k}")
    return InverseModel(m, spec, B.duality)


# --- general intervals --------------------------------------------------------------------

def build_bestcase_general(spec: InverseProblemSpec) -> InverseModel:
    """max sum(d+ + d-)  s.t.  reg(x_hat, d) <= reg(x~_k, d) for every pool member."""
    if spec.mode != "best-general":
        raise InverseError("spec.mode must be best-general")
    _check_sp(spec)
    B = _Builder(spec, "max")
    c, xh, m, n = B.c, B.xh, B.m, B.n
    B.deviations(1.0)
    dp, dm = B.dp, B.dm
    if B.duality:
        B.duals()

        def extra(i):
            row = {}
            _add(row, dm[i], 1.0)
            _add(row, dp[i], -xh[i])
            _add(row, dm[i], -xh[i])
            return row, c[i]
        B.dual_rows(extra)
    pool = spec.pool or [xh]
    bars = spec.pool_bar or [xh]
    for k, xt in enumerate(pool):
        xk = B.binaries(f"x{k}_")
        base = {}
        for i in range(n):
            _add(base, xk[i], c[i])
            _add(base, dp[i], xh[i] - xt[i])
            if xt[i] > 0.5:
                _add(base, B.mccormick(f"y{k}_{i}", dp[i], xk[i], B.Mp[i]), 1.0)
            else:
                _add(base, B.mccormick(f"z{k}_{i}", dm[i], xk[i], B.Mm[i]), -1.0)
        if B.duality:
            row = dict(base)
            for kk, v in B.bu().items():
                _add(row, kk, v)
            m.add_row(row, "<=", c @ xt - c @ xh, f"pool{k}")
        else:
            for ell, xb in enumerate(bars):
                row = dict(base)
                for i in range(n):
                    if xb[i] > 0.5:
                        _add(row, dp[i], -xh[i])
                        _add(row, dm[i], 1 - xh[i])
                m.add_row(row, "<=", c @ xt - c @ xh + c @ xb, f"pool{k}_{ell}")
    return InverseModel(m, spec, B.duality)


def build_worstcase_general(spec: InverseProblemSpec) -> InverseModel:
    """min sum(d+ + d-)  s.t.  reg(x_hat, d) >= reg(x~, d) + eps."""
    if spec.mode != "worst-general":
        raise InverseError("spec.mode must be worst-general")
    _check_sp(spec)
    B = _Builder(spec, "min")
    c, xh, m, n = B.c, B.xh, B.m, B.n
    B.deviations(1.0)
    dp, dm = B.dp, B.dm
    xp = B.binaries("xp")
    xt = B.binaries("xt")
    lhs = {}
    for i in range(n):
        _add(lhs, dp[i], xh[i])
        _add(lhs, xp[i], -c[i])
        _add(lhs, xt[i], -c[i])
        if xh[i] > 0.5:
            _add(lhs, B.mccormick(f"y{i}", dp[i], xp[i], B.Mp[i]), -1.0)
        else:
            _add(lhs, B.mccormick(f"z{i}", dm[i], xp[i], B.Mm[i]), 1.0)
    beta = [B.mccormick(f"beta{i}", dp[i], xt[i], B.Mp[i]) for i in range(n)]
    gamma = [B.mccormick(f"gamma{i}", dm[i], xt[i], B.Mm[i]) for i in range(n)]
    for i in range(n):
        _add(lhs, beta[i], -1.0)
    if B.duality:
        B.duals()

        def extra(i):
            row = {}
            _add(row, dm[i], 1.0)
            _add(row, beta[i], -1.0)
            _add(row, gamma[i], -1.0)
            return row, c[i]
        B.dual_rows(extra)
        row = dict(lhs)
        for r in range(B.A.shape[0]):
            _add(row, B.u[r], B.b[r])
        m.add_row(row, ">=", spec.eps - c @ xh, "regret")
    else:
        for k, xk in enumerate(spec.pool):
            row = dict(lhs)
            for i in range(n):
                if xk[i] > 0.5:
                    _add(row, dm[i], -1.0)
                    _add(row, beta[i], 1.0)
                    _add(row, gamma[i], 1.0)
            m.add_row(row, ">=", spec.eps - c @ xh - c @ xk, f"pool{k}")
    return InverseModel(m, spec, B.duality)


BUILDERS = {
    "best-regular": build_bestcase_regular,
    "worst-regular": build_worstcase_regular,
    "best-general": build_bestcase_general,
    "worst-general": build_worstcase_general,
}


def build(spec: InverseProblemSpec) -> InverseModel:
    return BUILDERS[spec.mode](spec)


# --- regret evaluation on the enumerated set -------------------------------------------------

def scenario_matrix(spec: InverseProblemSpec, X: np.ndarray, theta) -> np.ndarray:
    """Worst-case scenario of each row of ``X`` under ``theta`` (lam or GeneralInterval)."""
    c = spec.instance.c_hat
    if spec.general:
        return c - theta.d_minus + (theta.d_plus + theta.d_minus) * X
    return c * (1.0 - theta + 2.0 * theta * X)


def regrets(spec: InverseProblemSpec, X: np.ndarray, theta) -> tuple[np.ndarray, np.ndarray]:
    """Regret of every enumerated solution and the index of its inner minimiser."""
    C = scenario_matrix(spec, X, theta)
    vals = C @ X.T
    inner = np.argmin(vals, axis=1)
    own = np.einsum("ij,ij->i", C, X)
    return own - vals[np.arange(len(X)), inner], inner


@dataclass
class InverseResult:
    status: str  # optimal | infeasible | budget
    objective: float | None
    value: object  # lam or GeneralInterval
    trace: list = field(default_factory=list)
    flag: str = ""


def solve_model(im: InverseModel, backend: str = "auto") -> milp.Result:
    if backend == "auto":
        backend = "bundled" if len(im.model.binaries) <= 60 else "highs"
    return milp.solve(im.model, backend)


def _index_of(X: np.ndarray, x: np.ndarray) -> int:
    hits = np.flatnonzero(np.all(np.abs(X - x) < 0.5, axis=1))
    if not hits.size:
        raise InverseError("solution not in the enumerated set")
    return int(hits[0])


def _contains(pool, x) -> bool:
    return any(np.array_equal(p, x) for p in pool)


def row_generation_solve(spec: InverseProblemSpec, budget: int = 100, backend: str = "auto",
                         X: np.ndarray | None = None) -> InverseResult:
    """Solve by growing the solution pool(s) from an enumeration-backed subproblem.

    Best modes add the regret minimiser ``x~`` (and, without duality, the
    inner optimiser for ``x_hat``) whenever ``reg(x_hat)`` exceeds the
    minimum regret by more than 1e-6.  Worst modes with duality are compact
    and solved once; without duality the inner optimiser of the current
    ``x~`` is added until the master's answer is genuinely feasible.
    """
    inst = spec.instance
    X = feasible_matrix(inst) if X is None else X
    ih = _index_of(X, spec.x_hat)
    duality = spec.use_duality()
    spec = InverseProblemSpec(inst, spec.x_hat, spec.mode, spec.M_plus, spec.M_minus, spec.eps,
                              list(spec.pool), list(spec.pool_bar), spec.symmetric, spec.duality)
    if spec.worst and duality:
        im = build(spec)
        res = solve_model(im, backend)
        if res.status == "infeasible":
            return InverseResult("infeasible", None, None, [(0, None)])
        if res.status != "optimal":
            return InverseResult("budget", res.bound, None, [(0, res.bound)], "solver budget exhausted")
        return InverseResult("optimal", res.objective, im.decode(res), [(0, res.objective)])
    if not spec.worst:
        if not spec.pool:
            spec.pool.append(spec.x_hat.copy())
        if not duality and not spec.pool_bar:
            spec.pool_bar.append(spec.x_hat.copy())
    trace = []
    last = None
    for it in range(budget):
        im = build(spec)
        res = solve_model(im, backend)
        if res.status == "infeasible":
            trace.append((len(spec.pool), None))
            return InverseResult("infeasible", None, None, trace)
        if res.status != "optimal":
            return InverseResult("budget", res.bound, None, trace, "solver budget exhausted")
        theta = im.decode(res)
        last = (res.objective, theta)
        trace.append((len(spec.pool), res.objective))
        regs, inner = regrets(spec, X, theta)
        added = False
        if not spec.worst:
            j = int(np.argmin(regs))
            if regs[ih] > regs[j] + VIOLATION_TOL:
                if not _contains(spec.pool, X[j]):
                    spec.pool.append(X[j].copy())
                    added = True
                if not duality and not _contains(spec.pool_bar, X[inner[ih]]):
                    spec.pool_bar.append(X[inner[ih]].copy())
                    added = True
                if not added:
                    return InverseResult("budget", res.objective, theta, trace,
                                         "violation persists with a complete pool")
        else:
            xt = np.array([res.x[im.model.index(f"xt{i}")] for i in range(inst.n)]).round()
            jt = _index_of(X, xt)
            if regs[ih] < regs[jt] + spec.eps - VIOLATION_TOL:
                yk = X[inner[jt]]
                if not _contains(spec.pool, yk):
                    spec.pool.append(yk.copy())
                    added = True
                if not added:
                    return InverseResult("budget", res.objective, theta, trace,
                                         "violation persists with a complete pool")
        if not added:
            return InverseResult("optimal", res.objective, theta, trace)
    return InverseResult("budget", last[0] if last else None, last[1] if last else None, trace,
                         f"pool budget {budget} exhausted; objective is a bound")


# --- closed form and oracle -------------------------------------------------------------------

def unconstrained_bestcase(c_hat, M_plus, M_minus) -> GeneralInterval:
    """Largest ``U(d+, d-)`` keeping the sign-rule solution regret-optimal when X = {0,1}^n."""
    c = np.asarray(c_hat, dtype=float).ravel()
    Mp = np.broadcast_to(np.asarray(M_plus, dtype=float), c.shape)
    Mm = np.broadcast_to(np.asarray(M_minus, dtype=float), c.shape)
    if np.any(Mp < 0) or np.any(Mm < 0):
        raise InverseError("caps must be nonnegative")
    packed = c <= 0
    with np.errstate(invalid="ignore"):
        dp = np.where(packed, np.minimum(Mm - 2 * c, Mp), Mp)
        dm = np.where(packed, Mm, np.minimum(Mp + 2 * c, Mm))
    return GeneralInterval(dp, dm, Mp, Mm)


def corollary_caps(c_hat) -> tuple[np.ndarray, np.ndarray]:
    """Increase-only on packed items, decrease-only elsewhere, unbounded otherwise."""
    c = np.asarray(c_hat, dtype=float)
    packed = c <= 0
    return np.where(packed, np.inf, 0.0), np.where(packed, 0.0, np.inf)


def _lines(X: np.ndarray, x: np.ndarray, c: np.ndarray):
    """Rows (const, gp, gm) of L(x, y, d) for every y in X."""
    only_x = x * (1 - X)
    only_y = X * (1 - x)
    const = only_x @ c - only_y @ c
    return const, only_x, only_y


class _OracleLP:
    def __init__(self, spec: InverseProblemSpec):
        n = spec.instance.n
        self.sym = spec.symmetric
        if self.sym:
            cap = spec.cap
            self.bounds = [(0, min(v, ORACLE_BIG)) for v in cap]
            self.cost = np.full(n, 2.0)
        else:
            self.bounds = [(0, min(v, ORACLE_BIG)) for v in spec.M_plus] + \
                          [(0, min(v, ORACLE_BIG)) for v in spec.M_minus]
            self.cost = np.ones(2 * n)
        self.count = 0

    def coef(self, gp, gm):
        return gp + gm if self.sym else np.hstack([gp, gm])

    def solve(self, A_ub, b_ub, maximize: bool):
        self.count += 1
        c = -self.cost if maximize else self.cost
        r = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=self.bounds, method="highs")
        if r.status == 2:
            return None, None
        if r.status != 0:
            raise InverseError(f"oracle LP failed: {r.message}")
        return float(self.cost @ r.x), r.x

    def split(self, z, n):
        return (z, z) if self.sym else (z[:n], z[n:])


def witness_oracle(spec: InverseProblemSpec, max_lps: int = 10**6, X: np.ndarray | None = None):
    """Exact general-interval inverse optimum from witness linear programs.

    Returns ``(objective, GeneralInterval)`` or ``(None, None)`` when infeasible.
    """
    if not spec.general:
        raise InverseError("the witness oracle covers general interval modes")
    inst = spec.instance
    X = feasible_matrix(inst) if X is None else X
    c = inst.c_hat
    n = inst.n
    ih = _index_of(X, spec.x_hat)
    lp = _OracleLP(spec)
    hat = [_lines(X, X[ih], c)]
    const_h, gp_h, gm_h = hat[0]
    if spec.worst:
        best, arg = None, None
        for jt in range(len(X)):
            if jt == ih:
                continue
            ct, gpt, gmt = _lines(X, X[jt], c)
            for yh in range(len(X)):
                if lp.count >= max_lps:
                    raise InverseError(f"witness oracle refused: more than {max_lps} LPs")
                # L(x~, y) + eps <= L(x_hat, y_hat) for all y
                A = lp.coef(gpt, gmt) - lp.coef(gp_h[yh], gm_h[yh])[None, :]
                bvec = const_h[yh] - ct - spec.eps
                val, z = lp.solve(A, bvec, maximize=False)
                if val is not None and (best is None or val < best - 1e-12):
                    best, arg = val, z
        if best is None:
            return None, None
        dp, dm = lp.split(arg, n)
        return best, GeneralInterval(dp, dm, spec.M_plus, spec.M_minus)

    # best case: branch over witness choices with LP bounds
    others = [j for j in range(len(X)) if j != ih]
    lines = {j: _lines(X, X[j], c) for j in others}
    # reg(x_hat) <= L(x~, w) for every y_hat
    H = lp.coef(gp_h, gm_h)

    def rows_for(j, w):
        ct, gpt, gmt = lines[j]
        return H - lp.coef(gpt[w], gmt[w])[None, :], ct[w] - const_h

    def reg_at(j, z):
        ct, gpt, gmt = lines[j]
        return ct + lp.coef(gpt, gmt) @ z

    def undominated(j):
        # z >= 0, so a witness with larger constant and coefficients covers a smaller one
        ct, gpt, gmt = lines[j]
        G = np.column_stack([ct, lp.coef(gpt, gmt)])
        out = set()
        for w in range(len(G)):
            ge = np.all(G >= G[w], axis=1)
            gt = ge & np.any(G > G[w], axis=1)
            if not gt.any() and not np.any(ge[:w] & ~gt[:w]):
                out.add(w)  # no strict dominator and first of its duplicates
        return out

    keep = {j: undominated(j) for j in others}
    state = {"best": -math.inf, "arg": None}

    def dfs(A_rows, b_rows, assigned, warm=None):
        if warm is not None:
            val, z = warm  # parent optimum still feasible, hence still optimal
        else:
            if lp.count >= max_lps:
                raise InverseError(f"witness oracle refused: more than {max_lps} LPs")
            A = np.vstack(A_rows) if A_rows else None
            bv = np.concatenate(b_rows) if b_rows else None
            val, z = lp.solve(A, bv, maximize=True)
        if val is None or val <= state["best"] + 1e-9:
            return
        reg_hat = float(np.max(const_h + H @ z))
        worst_j, worst_gap = None, -1e-9
        for j in others:
            if j in assigned:
                continue
            gap = float(np.max(reg_at(j, z))) - reg_hat
            if gap < worst_gap:
                worst_j, worst_gap = j, gap
        if worst_j is None:
            state["best"], state["arg"] = val, z
            return
        order = [w for w in np.argsort(-reg_at(worst_j, z), kind="stable") if w in keep[worst_j]]
        for w in order:
            if val <= state["best"] + 1e-9:
                return  # incumbent improved inside an earlier sibling
            Ar, br = rows_for(worst_j, int(w))
            sat = bool(np.all(Ar @ z <= br + 1e-9))
            dfs(A_rows + [Ar], b_rows + [br], assigned | {worst_j}, (val, z) if sat else None)

    dfs([], [], frozenset())
    if state["arg"] is None:
        return None, None
    best, arg = state["best"], state["arg"]
    if best >= ORACLE_BIG / 2:
        return math.inf, None
    dp, dm = lp.split(arg, n)
    return best, GeneralInterval(np.clip(dp, 0, None), np.clip(dm, 0, None),
                                 spec.M_plus, spec.M_minus)
