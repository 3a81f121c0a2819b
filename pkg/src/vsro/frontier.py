"""Minimal robust solution sets for variable-sized uncertainty.

For ``U(lam) = {c_hat} + lam * B`` the robust objective of ``x`` is
``f1(x) + lam * f2(x)`` with ``f1 = c_hat^T x`` and ``f2(x) = max_{c in B} c^T x``.
A solution set covering every ``lam >= 0`` with as few members as possible is
one representative per vertex of the lower-left convex hull of the image
``{(f1(x), f2(x))}``.  This module computes that set by recursive weighted-sum
splitting, by bicriteria labelling on graphs, or from the enumerated image.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .problems import (TOL, Instance, InstanceError, Solution, TooLargeError,
                       enumerate_feasible, lex_minimize)
from .uncertainty import (ArbitraryBox, ConstantBox, Ellipsoid, EuclideanBall, ManhattanBall,
                          ProportionalBox, Shape)


class FrontierError(RuntimeError):
    pass


@dataclass(frozen=True)
class FrontierPoint:
    solution: Solution
    f1: float
    f2: float
    lam_lo: float = 0.0
    lam_hi: float = math.inf


@dataclass
class Frontier:
    points: list[FrontierPoint]
    n_solves: int = 0

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return [(p.f1, p.f2) for p in self.points]

    @property
    def solutions(self) -> list[Solution]:
        return [p.solution for p in self.points]

    def solution_at(self, lam: float) -> FrontierPoint:
        """The frontier member optimal for ``P(lam)``."""
        for p in self.points:
            if lam <= p.lam_hi + TOL:
                return p
        return self.points[-1]


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(pairs: Sequence[tuple[float, float]], tol: float = TOL) -> list[int]:
    """Indices of the vertices of ``conv(pairs) + R^2_+``, ordered by f1.

    Points on an edge (collinear within ``tol`` on the cross product) are not
    vertices.  Among exact duplicates the first index wins.
    """
    order = sorted(range(len(pairs)), key=lambda i: (pairs[i][0], pairs[i][1], i))
    hull: list[int] = []
    for i in order:
        if hull and pairs[i][1] >= pairs[hull[-1]][1] - tol:
            continue
        while len(hull) >= 2 and _cross(pairs[hull[-2]], pairs[hull[-1]], pairs[i]) <= tol:
            hull.pop()
        hull.append(i)
    return hull


def make_frontier(cands: Sequence[tuple[Solution, float, float]], n_solves: int = 0) -> Frontier:
    """Frontier from candidate ``(solution, f1, f2)`` triples.

    Equivalent solutions (same image) collapse to the lexicographically
    smallest incidence vector; non-vertices are dropped; lambda intervals are
    the crossings of consecutive vertices.
    """
    if not cands:
        raise FrontierError("no candidate solutions")
    best: dict[tuple[float, float], tuple[Solution, float, float]] = {}
    for sol, f1, f2 in cands:
        key = None
        for k in best:
            if abs(k[0] - f1) <= TOL and abs(k[1] - f2) <= TOL:
                key = k
                break
        if key is None:
            best[(f1, f2)] = (sol, f1, f2)
        elif sol < best[key][0]:
            best[key] = (sol, best[key][1], best[key][2])
    uniq = list(best.values())
    idx = lower_hull([(c[1], c[2]) for c in uniq])
    verts = [uniq[i] for i in idx]
    points = []
    lo = 0.0
    for k, (sol, f1, f2) in enumerate(verts):
        if k + 1 < len(verts):
            nf1, nf2 = verts[k + 1][1], verts[k + 1][2]
            hi = (nf1 - f1) / (f2 - nf2)
        else:
            hi = math.inf
        points.append(FrontierPoint(sol, float(f1), float(f2), lo, hi))
        lo = hi
    return Frontier(points, n_solves)


# --- second criteria -----------------------------------------------------------

class LinearCriterion:
    """``f2(x) = w^T x``; weighted sums go to the combinatorial solvers."""

    def __init__(self, weights):
        self.w = np.asarray(weights, dtype=float)

    def value(self, sol: Solution) -> float:
        return float(self.w @ sol.array)

    def minimize(self, inst, f1, lam, mode):
        if mode == "f1":
            stack = [f1, self.w]
        elif mode == "f2":
            stack = [self.w, f1]
        else:
            stack = [f1 + lam * self.w, f1]
        sol = lex_minimize(inst, stack)
        if sol is None:
            raise InstanceError("no feasible solution")
        return sol


class MaxCriterion:
    """``f2(x) = max_i d_i x_i`` (generalised Manhattan ball).

    Not linear, so each weighted sum scans the distinct thresholds ``theta``:
    restrict to elements with ``d_i <= theta``, minimise f1 (then ``d^T x``),
    and score the restricted optimum with its true image.
    """

    def __init__(self, d):
        self.d = np.asarray(d, dtype=float)

    def value(self, sol: Solution) -> float:
        return float(np.max(self.d * sol.array)) if sol.x else 0.0

    def minimize(self, inst, f1, lam, mode):
        cands = []
        for theta in np.unique(self.d):
            sol = lex_minimize(inst, [f1, self.d], allowed=self.d <= theta + TOL)
            if sol is None:
                continue
            a, b = float(f1 @ sol.array), self.value(sol)
            if mode == "f1":
                key = (a, b)
            elif mode == "f2":
                key = (b, a)
            else:
                key = (a + lam * b, a)
            cands.append((key, sol))
        if not cands:
            raise InstanceError("no feasible solution")
        return _lex_pick(cands)


class EnumeratedCriterion:
    """Any ``f2`` evaluated on the enumerated feasible set."""

    def __init__(self, func: Callable[[np.ndarray], float], limit: int = 10_000):
        self.func = func
        self.limit = limit
        self._cache: dict[int, list] = {}

    def value(self, sol: Solution) -> float:
        return float(self.func(sol.array))

    def _table(self, inst):
        key = id(inst)
        if key not in self._cache:
            sols = enumerate_feasible(inst, self.limit)
            self._cache[key] = [(s, self.value(s)) for s in sols]
        return self._cache[key]

    def minimize(self, inst, f1, lam, mode):
        cands = []
        for sol, b in self._table(inst):
            a = float(f1 @ sol.array)
            key = (a, b) if mode == "f1" else (b, a) if mode == "f2" else (a + lam * b, a)
            cands.append((key, sol))
        return _lex_pick(cands)


def _lex_pick(cands):
    best_key, best = cands[0]
    for key, sol in cands[1:]:
        if _key_lt(key, best_key) or (not _key_lt(best_key, key) and sol < best):
            best_key, best = key, sol
    return best


def _key_lt(a, b):
    for x, y in zip(a, b):
        if x < y - TOL:
            return True
        if x > y + TOL:
            return False
    return False


# --- algorithms ------------------------------------------------------------------

def explore(inst: Instance, f1_costs, f2, max_depth: int | None = None) -> Frontier:
    """Extreme efficient solutions of ``min (f1, f2)`` by recursive splitting.

    ``f2`` is a weight vector (linear criterion) or a criterion object.  The
    two ends come from exact lexicographic solves.  Each split solves the
    weighted sum at the crossing weight of its two ends with ties broken
    towards smaller f1, so no edge-interior solutions are produced.
    """
    f1c = np.asarray(f1_costs, dtype=float)
    crit = f2 if hasattr(f2, "minimize") else LinearCriterion(f2)
    cap = max_depth if max_depth is not None else 4 * inst.n
    n_solves = 0

    def solve(lam, mode):
        nonlocal n_solves
        n_solves += 1
        sol = crit.minimize(inst, f1c, lam, mode)
        return sol, float(f1c @ sol.array), crit.value(sol)

    first = solve(0.0, "f1")
    last = solve(0.0, "f2")
    found = [first, last]

    def split(p, q, depth):
        if depth > cap:
            raise FrontierError(f"recursion deeper than {cap}: tolerance failure")
        lam = (q[1] - p[1]) / (p[2] - q[2])
        r = solve(lam, "sum")
        if r[1] + lam * r[2] < p[1] + lam * p[2] - TOL:
            found.append(r)
            split(p, r, depth + 1)
            split(r, q, depth + 1)

    if first[1] < last[1] - TOL:
        split(first, last, 1)
    return make_frontier(found, n_solves)


def _label_paths(inst: Instance, second: np.ndarray, combine) -> Frontier:
    if inst.kind != "shortest-path":
        raise InstanceError("labelling needs a shortest-path instance")
    c = inst.c_hat
    if np.any(c < -TOL):
        raise InstanceError("labelling needs c_hat >= 0")
    n = inst.n
    out = inst.out_arcs
    labels: list[list[list]] = [[] for _ in range(inst.n_nodes)]
    # label: [cost, g, key, nodes, elems, alive]
    start = [0.0, 0.0, 0, (inst.s,), (), True]
    labels[inst.s].append(start)
    heap = [(0.0, 0.0, 0, 0, start)]
    import heapq
    tick = 1
    while heap:
        *_, lab = heapq.heappop(heap)
        if not lab[5]:
            continue
        u = lab[3][-1]
        if u == inst.t:
            continue
        for _, v, e in out[u]:
            if v in lab[3]:
                continue
            new = [lab[0] + c[e], combine(lab[1], second[e]), lab[2] + (1 << (n - 1 - e)),
                   lab[3] + (v,), lab[4] + (e,), True]
            if any(_dominates(old, new) for old in labels[v]):
                continue
            for old in labels[v]:
                if _dominates(new, old):
                    old[5] = False
            labels[v] = [old for old in labels[v] if old[5]] + [new]
            heapq.heappush(heap, (new[0], new[1], new[2], tick, new))
            tick += 1
    cands = []
    for lab in labels[inst.t]:
        x = [0] * n
        for e in lab[4]:
            x[e] = 1
        sol = Solution(tuple(x), float(c @ np.asarray(x, dtype=float)))
        cands.append((sol, float(lab[0]), float(lab[1])))
    return make_frontier(cands)


def _dominates(a, b) -> bool:
    if a[0] > b[0] + TOL or a[1] > b[1] + TOL:
        return False
    if a[0] < b[0] - TOL or a[1] < b[1] - TOL:
        return True
    return a[2] <= b[2]


def label_hops(inst: Instance) -> Frontier:
    """Constant growth on a shortest-path instance: labels (cost, #arcs)."""
    return _label_paths(inst, np.ones(inst.n), lambda g, w: g + w)


def label_maxedge(inst: Instance, d) -> Frontier:
    """Manhattan-ball growth on a shortest-path instance: labels (cost, max d_e)."""
    d = np.asarray(d, dtype=float)
    if d.size != inst.n:
        raise InstanceError("d has the wrong length")
    return _label_paths(inst, d, max)


def concave_filter(frontier: Frontier, transform: Callable[[float], float]) -> Frontier:
    """Re-evaluate f2 through a nondecreasing concave map and keep the new vertices.

    Every extreme solution for ``(f1, g(f2))`` is already extreme for
    ``(f1, f2)``, so filtering the linear-criterion frontier is enough.
    """
    pts = sorted(frontier.points, key=lambda p: p.f2)
    vals = [float(transform(p.f2)) for p in pts]
    for a, b in zip(vals, vals[1:]):
        if b < a - TOL:
            raise FrontierError("transform is not monotone nondecreasing")
    cands = [(p.solution, p.f1, v) for p, v in zip(pts, vals)]
    return make_frontier(cands, frontier.n_solves)


def _nonneg(inst: Instance):
    if np.any(inst.c_hat < -TOL):
        raise InstanceError("variable-sized problems assume c_hat >= 0")


def solve_variable_sized(inst: Instance, shape: Shape, enum_limit: int = 10_000,
                         labeling: bool = True) -> Frontier:
    """Frontier for ``U(lam) = {c_hat} + lam * shape`` over all ``lam >= 0``."""
    _nonneg(inst)
    c = inst.c_hat
    if shape.dim() is not None and shape.dim() != inst.n:
        raise InstanceError("shape dimension does not match the instance")
    if isinstance(shape, ProportionalBox):
        sol = lex_minimize(inst, [c])
        return make_frontier([(sol, sol.cost, sol.cost)], 1)
    if isinstance(shape, ConstantBox):
        return explore(inst, c, LinearCriterion(np.ones(inst.n)))
    if isinstance(shape, ArbitraryBox):
        return explore(inst, c, LinearCriterion(shape.d))
    if isinstance(shape, ManhattanBall):
        if labeling and inst.kind == "shortest-path":
            return label_maxedge(inst, shape.d)
        return explore(inst, c, MaxCriterion(shape.d))
    if isinstance(shape, EuclideanBall):
        return concave_filter(explore(inst, c, LinearCriterion(shape.d)),
                              lambda v: math.sqrt(max(v, 0.0)))
    if isinstance(shape, Ellipsoid):
        try:
            enumerate_feasible(inst, enum_limit)
        except TooLargeError:
            raise FrontierError("ellipsoidal frontier requires enumeration; "
                                f"feasible set exceeds {enum_limit}") from None
        crit = EnumeratedCriterion(shape.quad, enum_limit)
        return concave_filter(explore(inst, c, crit), lambda v: math.sqrt(max(v, 0.0)))
    raise FrontierError(f"unsupported shape {shape!r}")


def brute_force_frontier(inst: Instance, f2: Callable[[np.ndarray], float],
                         limit: int = 10_000) -> Frontier:
    """Hull of the fully enumerated image; the reference for every other route."""
    cands = [(s, s.cost, float(f2(s.array))) for s in enumerate_feasible(inst, limit)]
    return make_frontier(cands, len(cands))


# --- bounds and charts ----------------------------------------------------------------

@dataclass
class BoundCheck:
    name: str
    observed: int
    bound: float
    passed: bool


@dataclass
class BoundReport:
    checks: list[BoundCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


GRAPH_CLASSES = (None, "general", "series-parallel", "layered")


def check_frontier_bounds(frontier: Frontier, meta: dict) -> BoundReport:
    """Compare the frontier size with every size bound that applies.

    ``meta`` keys: ``shape`` (variant name), ``n``; optional ``N`` (nodes),
    ``M`` (arcs), ``graph_class``, ``layers``, ``width``, ``d``.
    """
    gclass = meta.get("graph_class")
    if gclass not in GRAPH_CLASSES:
        raise ValueError(f"unknown graph class {gclass!r}")
    size = len(frontier)
    variant = meta.get("shape")
    checks = []

    def add(name, bound):
        checks.append(BoundCheck(name, size, bound, size <= bound))

    if variant == "proportional":
        add("proportional: |S| = 1", 1)
    if variant == "constant":
        add("constant growth: |S| <= n", meta["n"])
        if "N" in meta:
            add("constant growth path: |S| <= N", meta["N"])
    if variant == "manhattan" and meta.get("d") is not None:
        add("manhattan: |S| <= #distinct d", len(np.unique(np.asarray(meta["d"]))))
    linear_like = variant in ("constant", "arbitrary", "infinity", "euclidean")
    if gclass == "series-parallel" and linear_like:
        add("series-parallel: K <= M - N + 2", meta["M"] - meta["N"] + 2)
    if gclass == "layered" and linear_like:
        ell, w = meta["layers"], meta["width"]
        add("layered: K <= (2w)^ceil(log2(l+1))", (2 * w) ** math.ceil(math.log2(ell + 1)))
    return BoundReport(checks)


@dataclass(frozen=True)
class ChartRow:
    lam_lo: float
    lam_hi: float
    nominal_cost: float
    f2: float
    solution_id: int


def robustness_chart(frontier: Frontier) -> list[ChartRow]:
    if not len(frontier):
        raise FrontierError("empty frontier")
    rows = [ChartRow(p.lam_lo, p.lam_hi, p.solution.cost, p.f2, i)
            for i, p in enumerate(frontier.points)]
    return sorted(rows, key=lambda r: r.lam_lo)


def write_chart(frontier: Frontier, csv_path, sidecar_path=None) -> None:
    """CSV ``lambda_lo,lambda_hi,nominal_cost,f2,solution_id`` plus a JSON sidecar of vectors."""
    rows = robustness_chart(frontier)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda_lo", "lambda_hi", "nominal_cost", "f2", "solution_id"])
        for r in rows:
            w.writerow([repr(float(r.lam_lo)), repr(float(r.lam_hi)), repr(float(r.nominal_cost)),
                        repr(float(r.f2)), r.solution_id])
    if sidecar_path is None:
        sidecar_path = Path(csv_path).with_suffix(".solutions.json")
    vecs = {str(i): list(p.solution.x) for i, p in enumerate(frontier.points)}
    Path(sidecar_path).write_text(json.dumps(vecs, sort_keys=True) + "\n")
