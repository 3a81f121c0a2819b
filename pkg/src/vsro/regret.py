"""Min-max regret under interval uncertainty and the one-dimensional inverse problems.

Regular intervals are ``[(1-lam) c_hat_i, (1+lam) c_hat_i]`` with ``lam`` in
[0, 1].  For fixed ``x`` the regret is the upper envelope over ``y`` in X of
the lines

    L(x, y, lam) = (c_hat x - c_hat y) + lam * (c_hat x + c_hat y - 2 c_hat (x & y))

so it is convex, piecewise linear and nondecreasing in ``lam``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .problems import TOL, Instance, InstanceError, Solution, feasible_matrix, optimal_value
from .uncertainty import GeneralInterval

MERGE_TOL = 1e-12


def _as_x(inst: Instance, x) -> np.ndarray:
    arr = x.array if isinstance(x, Solution) else np.asarray(x, dtype=float)
    if not inst.is_feasible(arr.astype(int)):
        raise InstanceError("x is not a feasible solution")
    return arr.astype(float)


def _check_lam(lam):
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")


def _nonneg(inst: Instance):
    if np.any(inst.c_hat < 0):
        raise InstanceError("regular intervals need c_hat >= 0")


def _opt(inst: Instance, c: np.ndarray) -> float:
    if inst.kind == "shortest-path" and np.any(c < 0):
        # simple-path minimum with negative arcs: enumerate
        return float((feasible_matrix(inst) @ c).min())
    return optimal_value(inst, c)


def regret_regular(inst: Instance, x, lam: float) -> float:
    """``reg(x, lam)``: worst scenario ``c_i = c_hat_i (1 - lam + 2 lam x_i)``."""
    _check_lam(lam)
    _nonneg(inst)
    xa = _as_x(inst, x)
    c = inst.c_hat * (1.0 - lam + 2.0 * lam * xa)
    return max(0.0, (1.0 + lam) * float(inst.c_hat @ xa) - _opt(inst, c))


def worst_scenario(inst: Instance, x, gi: GeneralInterval) -> np.ndarray:
    xa = _as_x(inst, x)
    if gi.d_plus.size != inst.n:
        raise InstanceError("interval dimension does not match the instance")
    return np.where(xa > 0.5, inst.c_hat + gi.d_plus, inst.c_hat - gi.d_minus)


def regret_general(inst: Instance, x, gi: GeneralInterval) -> float:
    """``reg(x, d+, d-)`` with the worst scenario raising x's elements and lowering the rest."""
    c = worst_scenario(inst, x, gi)
    xa = _as_x(inst, x)
    return max(0.0, float(c @ xa) - _opt(inst, c))


@dataclass(frozen=True)
class PwlFunction:
    """Continuous piecewise-linear function on [0, 1].

    ``breakpoints`` has K+1 entries from 0 to 1; piece k on
    ``[breakpoints[k], breakpoints[k+1]]`` is ``intercepts[k] + slopes[k] * lam``.
    """

    breakpoints: tuple[float, ...]
    intercepts: tuple[float, ...]
    slopes: tuple[float, ...]

    def __call__(self, lam: float) -> float:
        k = int(np.searchsorted(self.breakpoints, lam, side="right")) - 1
        k = min(max(k, 0), len(self.slopes) - 1)
        return self.intercepts[k] + self.slopes[k] * lam

    @property
    def pieces(self):
        return [(self.breakpoints[k], self.breakpoints[k + 1], self.intercepts[k], self.slopes[k])
                for k in range(len(self.slopes))]

    @classmethod
    def upper_envelope(cls, lines: Sequence[tuple[float, float]]) -> "PwlFunction":
        """Max of lines ``a + b*lam`` restricted to [0, 1]."""
        if not lines:
            raise ValueError("no lines")
        # by slope, then intercept; keep the top line for each slope
        srt = sorted(((float(a), float(b)) for a, b in lines), key=lambda ab: (ab[1], ab[0]))
        uniq: list[tuple[float, float]] = []
        for a, b in srt:
            if uniq and abs(uniq[-1][1] - b) <= MERGE_TOL:
                uniq[-1] = (a, b)
            else:
                uniq.append((a, b))
        hull: list[tuple[float, float]] = []
        starts: list[float] = []

        def cross(l1, l2):
            return (l1[0] - l2[0]) / (l2[1] - l1[1])

        for ln in uniq:
            while hull:
                x = cross(hull[-1], ln)
                if x <= starts[-1] + MERGE_TOL:
                    hull.pop()
                    starts.pop()
                else:
                    break
            starts.append(cross(hull[-1], ln) if hull else -np.inf)
            hull.append(ln)
        bps, ints, slps = [0.0], [], []
        for k, (a, b) in enumerate(hull):
            lo = float(max(starts[k], 0.0))
            hi = float(min(starts[k + 1], 1.0)) if k + 1 < len(hull) else 1.0
            if hi - lo <= MERGE_TOL:
                continue
            if ints:
                bps.append(lo)
            ints.append(a)
            slps.append(b)
        if not ints:
            # everything collapsed onto one point; take the line on top at 0
            a, b = max(uniq, key=lambda ab: (ab[0], ab[1]))
            ints, slps = [a], [b]
        bps.append(1.0)
        return cls(tuple(bps), tuple(ints), tuple(slps))


def regret_lines(inst: Instance, x, X: np.ndarray | None = None) -> np.ndarray:
    """``(intercept, slope)`` of ``L(x, y, .)`` for every enumerated ``y``; shape (|X|, 2)."""
    xa = _as_x(inst, x)
    X = feasible_matrix(inst) if X is None else X
    c = inst.c_hat
    cx = float(c @ xa)
    cy = X @ c
    cxy = X @ (c * xa)
    return np.column_stack([cx - cy, cx + cy - 2.0 * cxy])


def regret_pwl(inst: Instance, x, X: np.ndarray | None = None) -> PwlFunction:
    """``lam -> reg(x, lam)`` on [0, 1] as an upper envelope of enumerated lines."""
    _nonneg(inst)
    return PwlFunction.upper_envelope([tuple(r) for r in regret_lines(inst, x, X)])


def _grid(funcs: Sequence[PwlFunction], ref: PwlFunction) -> list[float]:
    pts = {0.0, 1.0}
    for f in funcs:
        pts.update(f.breakpoints)
    base = sorted(pts)
    # crossings of ref with each function inside every elementary interval
    extra = set()
    for f in funcs:
        for lo, hi in zip(base, base[1:]):
            if hi - lo <= MERGE_TOL:
                continue
            mid = (lo + hi) / 2
            k1 = _piece(ref, mid)
            k2 = _piece(f, mid)
            da = ref.intercepts[k1] - f.intercepts[k2]
            db = ref.slopes[k1] - f.slopes[k2]
            if abs(db) > MERGE_TOL:
                r = -da / db
                if lo < r < hi:
                    extra.add(r)
    return sorted(pts | extra)


def _piece(f: PwlFunction, lam: float) -> int:
    k = int(np.searchsorted(f.breakpoints, lam, side="right")) - 1
    return min(max(k, 0), len(f.slopes) - 1)


def all_regret_pwls(inst: Instance, X: np.ndarray | None = None) -> tuple[np.ndarray, list[PwlFunction]]:
    X = feasible_matrix(inst) if X is None else X
    return X, [regret_pwl(inst, row.astype(int), X) for row in X]


def best_case_lambda(inst: Instance, x_hat, tol: float = TOL):
    """Largest ``lam`` in [0, 1] at which ``x_hat`` is regret-optimal.

    Returns ``(lam_star, intervals)``; the feasible set may be disconnected, so
    ``intervals`` lists all of it (isolated points appear as ``(a, a)``) and
    ``lam_star`` is its supremum.  ``(None, [])`` when ``x_hat`` is never optimal.
    """
    _nonneg(inst)
    xa = _as_x(inst, x_hat)
    X, funcs = all_regret_pwls(inst)
    ref = regret_pwl(inst, xa, X)
    grid = _grid(funcs, ref)

    def ok(lam):
        r = ref(lam)
        return all(r <= f(lam) + tol for f in funcs)

    intervals: list[list[float]] = []
    open_run = False
    for i, g in enumerate(grid):
        here = ok(g)
        if here:
            if not open_run:
                intervals.append([g, g])
                open_run = True
            else:
                intervals[-1][1] = g
        else:
            open_run = False
        if i + 1 < len(grid):
            if ok((g + grid[i + 1]) / 2):
                if not open_run:
                    intervals.append([g, g])
                    open_run = True
                intervals[-1][1] = grid[i + 1]
            else:
                open_run = False
    intervals = [tuple(iv) for iv in intervals]
    if not intervals:
        return None, []
    return intervals[-1][1], intervals


def worst_case_lambda(inst: Instance, x_hat, eps: float = 1.0, tol: float = TOL):
    """Smallest ``lam`` in [0, 1] with some ``x~`` satisfying ``reg(x~) + eps <= reg(x_hat)``.

    ``None`` when no such ``lam`` exists.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    _nonneg(inst)
    xa = _as_x(inst, x_hat)
    X, funcs = all_regret_pwls(inst)
    ref = regret_pwl(inst, xa, X)
    grid = _grid(funcs, ref)
    best = None
    for f in funcs:
        def h(lam):
            return ref(lam) - f(lam) - eps
        for i, g in enumerate(grid):
            if best is not None and g >= best:
                break
            if h(g) >= -tol:
                best = g
                break
            if i + 1 < len(grid):
                nxt = grid[i + 1]
                hn = h(nxt)
                if hn >= -tol:
                    # h is linear on [g, nxt]
                    hg = h(g)
                    r = g + (nxt - g) * (-hg) / (hn - hg) if hn > hg else nxt
                    r = min(max(r, g), nxt)
                    if best is None or r < best:
                        best = r
                    break
    return best


def write_regret_csv(curves: dict, path) -> None:
    """``lambda,regret,solution_id`` sampled at each curve's breakpoints."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "regret", "solution_id"])
        for sid in sorted(curves, key=str):
            f = curves[sid]
            for lam in f.breakpoints:
                w.writerow([repr(float(lam)), repr(float(f(lam))), sid])
