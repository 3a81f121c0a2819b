"""Small exact LP/MILP solver and LP-file I/O.

The bundled route is a dense bounded-variable two-phase primal simplex with
Dantzig pricing (Bland's rule after a run of degenerate pivots) and a
best-bound branch-and-bound over binary variables.  ``backend="highs"`` hands
the same model to HiGHS through scipy for the larger experiment models.
"""
from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

INF = math.inf
PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
FEAS_TOL = 1e-7
INT_TOL = 1e-6

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\[\]]*$")
_SENSES = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "=", "==": "="}


class ModelError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


class LinearProgram:
    """Variables with bounds, linear rows and a linear objective."""

    def __init__(self, sense: str = "min", name: str = "model"):
        if sense not in ("min", "max"):
            raise ModelError("sense must be 'min' or 'max'")
        self.sense = sense
        self.name = name
        self.names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.obj: list[float] = []
        self.is_binary: list[bool] = []
        self.rows: list[tuple[dict[int, float], str, float]] = []
        self.row_names: list[str] = []
        self._index: dict[str, int] = {}

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def index(self, name: str) -> int:
        return self._index[name]

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, obj: float = 0.0) -> int:
        return self._add(name, lb, ub, obj, False)

    def _add(self, name, lb, ub, obj, binary):
        if not _NAME.match(name):
            raise ModelError(f"invalid variable name {name!r}")
        if name in self._index:
            raise ModelError(f"duplicate variable name {name!r}")
        lb, ub, obj = float(lb), float(ub), float(obj)
        if math.isnan(lb) or math.isnan(ub) or math.isnan(obj) or lb > ub or lb == INF or ub == -INF:
            raise ModelError(f"bad bounds or objective for {name!r}")
        self._index[name] = len(self.names)
        self.names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        self.obj.append(obj)
        self.is_binary.append(binary)
        return len(self.names) - 1

    def add_row(self, coefs: dict, sense: str, rhs: float, name: str | None = None) -> int:
        if sense not in _SENSES:
            raise ModelError(f"unknown row sense {sense!r}")
        row: dict[int, float] = {}
        for k, v in coefs.items():
            j = self._index[k] if isinstance(k, str) else int(k)
            if not 0 <= j < self.n_vars:
                raise ModelError(f"unknown variable index {k!r}")
            v = float(v)
            if math.isnan(v) or math.isinf(v):
                raise ModelError("non-finite coefficient")
            row[j] = row.get(j, 0.0) + v
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ModelError("non-finite right-hand side")
        name = name or f"r{len(self.rows)}"
        if not _NAME.match(name) or name in self.row_names:
            raise ModelError(f"invalid or duplicate row name {name!r}")
        self.rows.append((row, _SENSES[sense], rhs))
        self.row_names.append(name)
        return len(self.rows) - 1

    def set_obj(self, coefs: dict) -> None:
        for k, v in coefs.items():
            j = self._index[k] if isinstance(k, str) else int(k)
            self.obj[j] = float(v)

    def matrices(self):
        """Dense ``(c, A, senses, b, lb, ub)``."""
        A = np.zeros((self.n_rows, self.n_vars))
        for i, (row, _, _) in enumerate(self.rows):
            for j, v in row.items():
                A[i, j] = v
        return (np.array(self.obj), A, [r[1] for r in self.rows],
                np.array([r[2] for r in self.rows]), np.array(self.lb), np.array(self.ub))

    def copy(self):
        other = self.__class__.__new__(self.__class__)
        other.__dict__ = {k: (v.copy() if isinstance(v, (list, dict)) else v)
                          for k, v in self.__dict__.items()}
        return other

    def evaluate(self, x) -> float:
        return float(np.dot(self.obj, x))


class MilpModel(LinearProgram):
    """A :class:`LinearProgram` with binary variables."""

    def add_binary(self, name: str, obj: float = 0.0) -> int:
        return self._add(name, 0.0, 1.0, obj, True)

    @property
    def binaries(self) -> list[int]:
        return [j for j, b in enumerate(self.is_binary) if b]


@dataclass
class Result:
    status: str  # optimal | infeasible | unbounded | budget
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    reduced: np.ndarray | None = None
    bound: float | None = None
    nodes: int = 0
    iterations: int = 0
    dual_objective: float | None = None
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def value(self, model: LinearProgram, name: str) -> float:
        return float(self.x[model.index(name)])


# --- simplex -----------------------------------------------------------------------

def _simplex_core(A, b, c, u, max_iter, slack=None):
    """min c^T x, A x = b, 0 <= x <= u; A has full row rank after artificials.

    ``slack[i]`` is a column that is a unit vector on row ``i`` (or -1); it
    seeds the starting basis when it is feasible there.
    Returns (status, basis, at_upper, iterations, row_signs).
    """
    m, N = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    # tableau over [A | I]; artificial columns N..N+m-1
    T = np.hstack([A, np.eye(m), b[:, None]])
    ub = np.concatenate([u, np.full(m, INF)])
    basis = list(range(N, N + m))
    if slack is not None:
        for i in range(m):
            q = slack[i]
            if q >= 0 and A[i, q] > 0:
                basis[i] = q
                T[i, :] /= A[i, q]
    at_upper = np.zeros(N + m, dtype=bool)
    iters = 0

    def run(cost, allowed):
        nonlocal T, iters
        degenerate = 0
        while True:
            if iters >= max_iter:
                raise NumericalError(f"iteration limit {max_iter} reached (cycling or ill-conditioning)")
            cb = cost[basis]
            d = cost - cb @ T[:, :-1]
            d[basis] = 0.0
            cand = allowed & (((~at_upper) & (d < -OPT_TOL)) | (at_upper & (d > OPT_TOL)))
            if not cand.any():
                return "optimal"
            if degenerate > 50:
                j = int(np.flatnonzero(cand)[0])
            else:
                j = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            inc = 1.0 if not at_upper[j] else -1.0
            xb = _basic_values(T, basis, at_upper, ub)
            col = T[:, j] * inc
            bidx = np.asarray(basis)
            ubB = ub[bidx]
            pos = col > PIVOT_TOL
            neg = (col < -PIVOT_TOL) & (ubB < INF)
            t = np.full(m, INF)
            t[pos] = np.maximum(xb[pos], 0.0) / col[pos]
            t[neg] = np.maximum(ubB[neg] - xb[neg], 0.0) / -col[neg]
            t_best = ub[j]
            r = -1
            to_upper = False
            tmin = t.min()
            if tmin < t_best - 1e-12:
                # ties go to the smallest basic index
                ties = np.flatnonzero(t <= tmin + 1e-12)
                r = int(ties[np.argmin(bidx[ties])])
                t_best = t[r]
                to_upper = bool(neg[r])
            iters += 1
            if t_best == INF:
                return "unbounded"
            degenerate = degenerate + 1 if t_best <= 1e-12 else 0
            if r < 0:
                at_upper[j] = not at_upper[j]
                continue
            leaving = basis[r]
            piv = T[r, j]
            T[r, :] /= piv
            colj = T[:, j].copy()
            colj[r] = 0.0
            T -= np.outer(colj, T[r, :])
            basis[r] = j
            at_upper[j] = False
            at_upper[leaving] = to_upper

    # phase 1
    cost1 = np.concatenate([np.zeros(N), np.ones(m)])
    allowed = np.ones(N + m, dtype=bool)
    if any(q >= N for q in basis):
        run(cost1, allowed)
    xb = _basic_values(T, basis, at_upper, ub)
    infeas = sum(xb[i] for i in range(m) if basis[i] >= N)
    if infeas > FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
        return "infeasible", basis, at_upper, iters, sign
    # phase 2: artificials may stay basic at zero but never re-enter
    ub[N:] = 0.0
    allowed[N:] = False
    cost2 = np.concatenate([c, np.zeros(m)])
    status = run(cost2, allowed)
    return status, basis, at_upper[:N], iters, sign


def _basic_values(T, basis, at_upper, ub):
    rhs = T[:, -1].copy()
    up = np.flatnonzero(at_upper)
    if up.size:
        rhs -= T[:, up] @ ub[up]
    return rhs


def simplex_solve(lp: LinearProgram, max_iter: int | None = None) -> Result:
    """Solve the LP relaxation of ``lp``; returns primal values, row duals and reduced costs."""
    c0, A0, senses, b0, lb0, ub0 = lp.matrices()
    return _solve_arrays(c0, A0, senses, b0, lb0, ub0, lp.sense, max_iter)


def _solve_arrays(c0, A0, senses, b0, lb0, ub0, sense, max_iter=None):
    n = c0.size
    m = A0.shape[0]
    if np.any(lb0 > ub0 + 1e-12):
        return Result("infeasible")
    csign = -1.0 if sense == "max" else 1.0
    c = c0 * csign
    # column map: x_j = off_j + sum_k T_jk z_k, z >= 0 with upper bounds
    cols, mult, off, zub = [], [], np.zeros(n), []
    for j in range(n):
        lo, hi = lb0[j], ub0[j]
        if lo > -INF:
            off[j] = lo
            cols.append(j); mult.append(1.0); zub.append(hi - lo)
        elif hi < INF:
            off[j] = hi
            cols.append(j); mult.append(-1.0); zub.append(INF)
        else:
            cols.append(j); mult.append(1.0); zub.append(INF)
            cols.append(j); mult.append(-1.0); zub.append(INF)
    k = len(cols)
    n_slack = sum(1 for s in senses if s != "=")
    A = np.zeros((m, k + n_slack))
    cz = np.zeros(k + n_slack)
    for q, (j, s) in enumerate(zip(cols, mult)):
        A[:, q] = A0[:, j] * s
        cz[q] = c[j] * s
    b = b0 - A0 @ off
    si = k
    slack = [-1] * m
    for i, s in enumerate(senses):
        if s == "<=":
            A[i, si] = 1.0
            slack[i] = si
            si += 1
        elif s == ">=":
            A[i, si] = -1.0
            slack[i] = si
            si += 1
    u = np.concatenate([np.array(zub, dtype=float), np.full(n_slack, INF)])
    if max_iter is None:
        max_iter = 50 * (m + k + n_slack) + 1000
    if m == 0:
        # bounds only
        z = np.zeros(k)
        for q in range(k):
            if cz[q] < 0:
                if u[q] == INF:
                    return Result("unbounded")
                z[q] = u[q]
        x = off.copy()
        for q, (j, s) in enumerate(zip(cols, mult)):
            x[j] += s * z[q]
        obj = float(c0 @ x)
        red = c0.copy()
        return Result("optimal", x, obj, np.zeros(0), red, obj, dual_objective=obj)
    status, basis, at_upper, iters, rsign = _simplex_core(A, b, cz, u, max_iter, slack)
    if status != "optimal":
        return Result(status, iterations=iters)
    # clean solve from the final basis
    Ntot = A.shape[1]
    nb_up = np.flatnonzero(at_upper)
    z = np.zeros(Ntot)
    z[nb_up] = u[nb_up]
    art_rows = [i for i, q in enumerate(basis) if q >= Ntot]
    B = np.zeros((m, m))
    for i, q in enumerate(basis):
        if q < Ntot:
            B[:, i] = A[:, q]
        else:
            B[:, i] = 0.0
            B[q - Ntot, i] = rsign[q - Ntot]
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(f"final basis is ill-conditioned (cond={cond:.3g}, m={m})")
    rhs = b - A @ z
    zb = np.linalg.solve(B, rhs)
    for i, q in enumerate(basis):
        if q < Ntot:
            z[q] = zb[i]
    cb = np.array([cz[q] if q < Ntot else 0.0 for q in basis])
    y = np.linalg.solve(B.T, cb)
    red_z = cz - A.T @ y
    x = off.copy()
    for q, (j, s) in enumerate(zip(cols, mult)):
        x[j] += s * z[q]
    obj = float(c0 @ x)
    # duals/reduced costs in the user's sense
    duals = y * csign
    reduced = c0 - A0.T @ duals
    dual_obj = float(duals @ b0)
    for j in range(n):
        dj = reduced[j] * csign
        bound = lb0[j] if dj > 0 else ub0[j] if dj < 0 else 0.0
        dual_obj += reduced[j] * (bound if math.isfinite(bound) else x[j])
    res = Result("optimal", x, obj, duals, reduced, obj, iterations=iters, dual_objective=dual_obj)
    _kkt_check(res, A0, senses, b0, lb0, ub0, sense, art_rows, zb)
    return res


def _kkt_check(res, A0, senses, b0, lb0, ub0, sense, art_rows, zb):
    x, y, d = res.x, res.duals, res.reduced
    scale = max(1.0, float(np.abs(b0).max(initial=0.0)), abs(res.objective))
    act = A0 @ x
    viol = 0.0
    for i, s in enumerate(senses):
        r = act[i] - b0[i]
        if s == "<=":
            viol = max(viol, r)
        elif s == ">=":
            viol = max(viol, -r)
        else:
            viol = max(viol, abs(r))
    viol = max(viol, float(np.max(lb0 - x, initial=0.0)), float(np.max(x - ub0, initial=0.0)))
    # complementary slackness on rows and on bounds
    cs = 0.0
    sgn = 1.0 if sense == "min" else -1.0
    for i, s in enumerate(senses):
        if s != "=":
            cs = max(cs, abs(y[i] * (act[i] - b0[i])))
            wrong = -sgn * y[i] if s == ">=" else sgn * y[i]
            cs = max(cs, wrong)
    for j in range(x.size):
        dj = d[j] * sgn
        gap_lo = x[j] - lb0[j] if lb0[j] > -INF else INF
        gap_hi = ub0[j] - x[j] if ub0[j] < INF else INF
        if dj > 0:
            cs = max(cs, dj * gap_lo if gap_lo < INF else dj)
        elif dj < 0:
            cs = max(cs, -dj * gap_hi if gap_hi < INF else -dj)
    res.info["primal_violation"] = viol
    res.info["complementarity"] = cs
    if viol > 1e-6 * scale or cs > 1e-6 * scale:
        raise NumericalError(f"KKT check failed: violation {viol:.3g}, complementarity {cs:.3g}")


# --- branch and bound --------------------------------------------------------------------

def branch_and_bound(model: MilpModel, node_budget: int = 200_000, lp_solver=None) -> Result:
    """Best-bound branch-and-bound over the binary variables.

    On budget exhaustion returns status ``"budget"`` with the incumbent (if
    any) and the best remaining bound.
    """
    c0, A0, senses, b0, lb0, ub0 = model.matrices()
    bins = np.array(model.binaries, dtype=int)
    solve = lp_solver or (lambda lb, ub: _solve_arrays(c0, A0, senses, b0, lb, ub, model.sense))
    res = _bnb(c0, A0, senses, b0, lb0, ub0, bins, model.sense, solve, node_budget)
    if res.status != "unbounded" or not bins.size:
        return res
    # An unbounded relaxation only proves unboundedness if some binary pattern is
    # feasible; binaries are bounded so the recession cone is shared by all patterns.
    z = np.zeros_like(c0)
    feas = _bnb(z, A0, senses, b0, lb0, ub0, bins, model.sense,
                lambda lb, ub: _solve_arrays(z, A0, senses, b0, lb, ub, model.sense), node_budget)
    status = {"optimal": "unbounded", "infeasible": "infeasible"}.get(feas.status, "budget")
    return Result(status, nodes=res.nodes + feas.nodes)


def _bnb(c0, A0, senses, b0, lb0, ub0, bins, sense, solve, node_budget) -> Result:
    sgn = 1.0 if sense == "min" else -1.0
    root = solve(lb0, ub0)
    if root.status != "optimal":
        return Result(root.status, nodes=1)
    best_x, best_val = None, INF  # in min-form
    heap = [(sgn * root.objective, 0, lb0.copy(), ub0.copy(), root)]
    tick = 1
    nodes = 1
    while heap:
        bound, _, lb, ub, res = heapq.heappop(heap)
        if not _improves(bound, best_val):
            continue
        xb = res.x[bins] if bins.size else np.zeros(0)
        frac = np.abs(xb - np.round(xb))
        if not bins.size or frac.max() <= INT_TOL:
            x = _polish(res.x, bins, c0, A0, senses, b0, lb, ub, sense)
            val = sgn * float(c0 @ x)
            if val < best_val:
                best_x, best_val = x, val
            continue
        if nodes >= node_budget:
            heapq.heappush(heap, (bound, tick, lb, ub, res))
            break
        jj = int(np.argmax(np.minimum(frac, 1 - frac) * (frac > INT_TOL)))
        j = int(bins[jj])
        for v in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = v
            nodes += 1
            child = solve(clb, cub)
            if child.status == "optimal":
                cb = sgn * child.objective
                if _improves(cb, best_val):
                    heapq.heappush(heap, (cb, tick, clb, cub, child))
                    tick += 1
            elif child.status == "unbounded":
                return Result("unbounded", nodes=nodes)
    if heap:
        open_bound = min(h[0] for h in heap)
        bound = min(open_bound, best_val)
        obj = None if best_x is None else sgn * best_val
        return Result("budget", best_x, obj, bound=sgn * bound, nodes=nodes)
    if best_x is None:
        return Result("infeasible", nodes=nodes)
    return Result("optimal", best_x, sgn * best_val, bound=sgn * best_val, nodes=nodes)


def _improves(bound, incumbent) -> bool:
    if incumbent == INF:
        return True
    return bound < incumbent - 1e-9 * max(1.0, abs(incumbent))


def _polish(x, bins, c0, A0, senses, b0, lb, ub, sense):
    """Round binaries and re-solve the continuous part."""
    if not bins.size:
        return x
    lb, ub = lb.copy(), ub.copy()
    r = np.round(x[bins])
    lb[bins] = ub[bins] = r
    res = _solve_arrays(c0, A0, senses, b0, lb, ub, sense)
    if res.status != "optimal":
        return x
    out = res.x.copy()
    out[bins] = r
    return out


# --- HiGHS backend ----------------------------------------------------------------------

def highs_solve(model: LinearProgram, time_limit: float | None = None) -> Result:
    """Solve with HiGHS via :func:`scipy.optimize.milp`."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    c0, A0, senses, b0, lb0, ub0 = model.matrices()
    sgn = 1.0 if model.sense == "min" else -1.0
    lo = np.where(np.array(senses) == "<=", -np.inf, b0)
    hi = np.where(np.array(senses) == ">=", np.inf, b0)
    integ = np.array(model.is_binary, dtype=int)
    cons = [LinearConstraint(A0, lo, hi)] if A0.shape[0] else []
    opts = {"mip_rel_gap": 0.0, "presolve": False}  # bundled presolve can misflag implied integers
    if time_limit:
        opts["time_limit"] = time_limit
    res = milp(sgn * c0, integrality=integ, bounds=Bounds(lb0, ub0), constraints=cons, options=opts)
    if res.status == 0:
        x = res.x.copy()
        bins = np.flatnonzero(integ)
        x[bins] = np.round(x[bins])
        obj = float(c0 @ x)
        return Result("optimal", x, obj, bound=obj)
    if res.status == 2:
        return Result("infeasible")
    if res.status == 3:
        return Result("unbounded")
    return Result("budget", info={"message": res.message})


def solve(model: LinearProgram, backend: str = "bundled", **kw) -> Result:
    """Dispatch to the bundled solver or HiGHS."""
    if backend == "highs":
        return highs_solve(model, **kw)
    if backend != "bundled":
        raise ValueError(f"unknown backend {backend!r}")
    if isinstance(model, MilpModel) and model.binaries:
        return branch_and_bound(model, **kw)
    return simplex_solve(model)


# --- LP files -----------------------------------------------------------------------------

def _num(v: float) -> str:
    return format(v, ".12g")


def _terms(coefs) -> str:
    parts = []
    for name, v in coefs:
        if not parts:
            parts.append(f"{'- ' if v < 0 else ''}{_num(abs(v))} {name}")
        else:
            parts.append(f"{'-' if v < 0 else '+'} {_num(abs(v))} {name}")
    return " ".join(parts)


def lp_text(model: LinearProgram) -> str:
    lines = ["Maximize" if model.sense == "max" else "Minimize"]
    obj = [(model.names[j], v) for j, v in enumerate(model.obj) if v != 0.0]
    lines.append(f" obj: {_terms(obj)}".rstrip())
    lines.append("Subject To")
    for name, (row, s, rhs) in zip(model.row_names, model.rows):
        coefs = [(model.names[j], row[j]) for j in sorted(row) if row[j] != 0.0]
        if not coefs:
            if model.n_vars == 0:
                continue
            coefs = [(model.names[0], 0.0)]
        lines.append(f" {name}: {_terms(coefs)} {s} {_num(rhs)}")
    bounds = []
    for j, nm in enumerate(model.names):
        lo, hi = model.lb[j], model.ub[j]
        if model.is_binary[j] and lo == 0.0 and hi == 1.0:
            continue
        if lo == 0.0 and hi == INF:
            continue
        if lo == -INF and hi == INF:
            bounds.append(f" {nm} free")
        elif hi == INF:
            bounds.append(f" {nm} >= {_num(lo)}")
        elif lo == -INF:
            bounds.append(f" -inf <= {nm} <= {_num(hi)}")
        elif lo == hi:
            bounds.append(f" {nm} = {_num(lo)}")
        else:
            bounds.append(f" {_num(lo)} <= {nm} <= {_num(hi)}")
    if bounds:
        lines.append("Bounds")
        lines.extend(bounds)
    bins = [model.names[j] for j in range(model.n_vars) if model.is_binary[j]]
    if bins:
        lines.append("Binary")
        lines.extend(f" {b}" for b in bins)
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp_file(model: LinearProgram, path) -> None:
    """Write ``model`` in LP text format (ASCII, LF line endings)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(lp_text(model))


_TERM = re.compile(r"([+-]?)\s*([0-9.eE+-]*[0-9.])?\s*([A-Za-z_][A-Za-z0-9_.\[\]]*)")


def _parse_expr(text: str) -> list[tuple[str, float]]:
    out = []
    text = text.strip()
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise ModelError(f"cannot parse LP expression near {text[pos:]!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        out.append((m.group(3), sign * coef))
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return out


def read_lp_file(path) -> MilpModel:
    """Read the LP subset written by :func:`export_lp_file`."""
    text = Path(path).read_text(encoding="ascii")
    section = None
    model = None
    obj_terms: list[tuple[str, float]] = []
    rows = []
    bounds = []
    bins = []
    order: list[str] = []

    def see(name):
        if name not in order:
            order.append(name)

    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in ("minimize", "maximize", "minimum", "maximum", "min", "max"):
            model = MilpModel("max" if key.startswith("max") else "min")
            section = "obj"
            continue
        if key in ("subject to", "such that", "st", "s.t."):
            section = "rows"
            continue
        if key in ("bounds", "bound"):
            section = "bounds"
            continue
        if key in ("binary", "binaries", "bin"):
            section = "bin"
            continue
        if key == "end":
            break
        if section == "obj":
            expr = line.split(":", 1)[1] if ":" in line else line
            for nm, v in _parse_expr(expr):
                obj_terms.append((nm, v))
                see(nm)
        elif section == "rows":
            name, expr = (line.split(":", 1) if ":" in line else (None, line))
            m = re.search(r"(<=|>=|=<|=>|=|<|>)", expr)
            if not m:
                raise ModelError(f"row without sense: {line!r}")
            terms = _parse_expr(expr[:m.start()])
            for nm, _ in terms:
                see(nm)
            rows.append((name.strip() if name else None, terms, _SENSES[m.group(1)],
                         float(expr[m.end():])))
        elif section == "bounds":
            bounds.append(line)
        elif section == "bin":
            for nm in line.split():
                bins.append(nm)
                see(nm)
    if model is None:
        raise ModelError("no objective section")
    lbs: dict[str, float] = {}
    ubs: dict[str, float] = {}
    for line in bounds:
        toks = line.replace("<=", " <= ").replace(">=", " >= ").split()
        if len(toks) == 2 and toks[1].lower() == "free":
            lbs[toks[0]], ubs[toks[0]] = -INF, INF
            see(toks[0])
        elif len(toks) == 5:
            lbs[toks[2]], ubs[toks[2]] = float(toks[0]), float(toks[4])
            see(toks[2])
        elif len(toks) == 3 and toks[1] in ("<=", ">=", "="):
            v = float(toks[2])
            see(toks[0])
            if toks[1] == "<=":
                ubs[toks[0]] = v
            elif toks[1] == ">=":
                lbs[toks[0]] = v
            else:
                lbs[toks[0]] = ubs[toks[0]] = v
        else:
            raise ModelError(f"cannot parse bound {line!r}")
    binset = set(bins)
    for nm in order:
        if nm in binset:
            model.add_binary(nm)
            j = model.index(nm)
            model.lb[j] = lbs.get(nm, 0.0)
            model.ub[j] = ubs.get(nm, 1.0)
        else:
            model.add_var(nm, lbs.get(nm, 0.0), ubs.get(nm, INF))
    for nm, v in obj_terms:
        j = model.index(nm)
        model.obj[j] += v
    for name, terms, s, rhs in rows:
        coefs: dict[int, float] = {}
        for nm, v in terms:
            j = model.index(nm)
            coefs[j] = coefs.get(j, 0.0) + v
        model.add_row(coefs, s, rhs, name)
    return model
