"""Combinatorial problem instances and their exact solvers.

Three problem kinds are supported: s-t shortest path on a directed graph,
p x p assignment (perfect bipartite matching, cells in row-major order) and
the unconstrained problem X = {0,1}^n.

All solvers minimise a *lexicographic* objective: a stack of cost vectors
compared in order, followed by the incidence vector itself (smaller binary
string wins).  Ties are therefore broken deterministically and identically
across solver kinds.
"""
from __future__ import annotations

import heapq
import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

TOL = 1e-9

KINDS = ("shortest-path", "assignment", "unconstrained")


class InstanceError(ValueError):
    """Malformed instance data or an unsolvable request."""


class TooLargeError(InstanceError):
    """The feasible set is larger than the enumeration limit."""


@dataclass(frozen=True, order=True)
class Solution:
    """A feasible incidence vector plus its cached nominal cost."""

    x: tuple[int, ...]
    cost: float = field(default=0.0, compare=False)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.x, dtype=float)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.x) if v)

    def __len__(self) -> int:
        return len(self.x)


@dataclass(frozen=True, eq=False)
class Instance:
    kind: str
    c_hat: np.ndarray
    n_nodes: int = 0
    arcs: tuple[tuple[int, int, int], ...] = ()
    s: int = -1
    t: int = -1
    p: int = 0
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    integral_relaxation: bool = False
    node_labels: tuple = ()

    def __post_init__(self):
        c = np.array(self.c_hat, dtype=float).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "c_hat", c)
        if self.kind not in KINDS:
            raise InstanceError(f"unknown kind {self.kind!r}")
        if c.size < 1:
            raise InstanceError("n must be >= 1")
        if not np.all(np.isfinite(c)):
            raise InstanceError("c_hat: non-finite entries")
        if self.kind == "shortest-path":
            self._check_graph()
        elif self.kind == "assignment":
            if self.p < 1 or self.p * self.p != c.size:
                raise InstanceError(f"assignment: n={c.size} is not p^2 for p={self.p}")
        if (self.A is None) != (self.b is None):
            raise InstanceError("A and b must be given together")
        if self.A is not None:
            A = np.array(self.A, dtype=float)
            b = np.array(self.b, dtype=float).ravel()
            if A.ndim != 2 or A.shape != (b.size, c.size):
                raise InstanceError(f"A must be {b.size}x{c.size}, got {A.shape}")
            A.setflags(write=False)
            b.setflags(write=False)
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "b", b)

    def _check_graph(self):
        n = self.c_hat.size
        if self.n_nodes < 2:
            raise InstanceError("shortest-path: need at least 2 nodes")
        if self.s == self.t:
            raise InstanceError("shortest-path: s == t")
        for v in (self.s, self.t):
            if not 0 <= v < self.n_nodes:
                raise InstanceError(f"shortest-path: node {v} out of range")
        seen = set()
        for u, v, e in self.arcs:
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise InstanceError(f"arc ({u},{v}) has an endpoint out of range")
            if not 0 <= e < n or e in seen:
                raise InstanceError(f"arc ({u},{v}): bad or repeated element index {e}")
            seen.add(e)
        if len(seen) != n:
            raise InstanceError("every element index must belong to exactly one arc")
        reach = {self.s}
        todo = [self.s]
        out = self.out_arcs
        while todo:
            u = todo.pop()
            for _, v, _ in out[u]:
                if v not in reach:
                    reach.add(v)
                    todo.append(v)
        if self.t not in reach:
            raise InstanceError("shortest-path: no s-t path")

    @property
    def n(self) -> int:
        return self.c_hat.size

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    @property
    def out_arcs(self) -> list[list[tuple[int, int, int]]]:
        out: list[list[tuple[int, int, int]]] = [[] for _ in range(self.n_nodes)]
        for arc in sorted(self.arcs, key=lambda a: a[2]):
            out[arc[0]].append(arc)
        return out

    def with_costs(self, c_hat) -> "Instance":
        """Same feasible set, different nominal costs."""
        return Instance(self.kind, np.asarray(c_hat, dtype=float), self.n_nodes, self.arcs,
                        self.s, self.t, self.p, self.A, self.b, self.integral_relaxation,
                        self.node_labels)

    def polyhedron(self) -> tuple[np.ndarray, np.ndarray, bool]:
        """Return ``(A, b, integral)`` describing X = {x binary : Ax >= b}.

        Uses the stored description when present, otherwise the standard one
        for the kind (equalities as pairs of opposite inequalities).
        """
        if self.A is not None:
            return self.A, self.b, self.integral_relaxation
        A, b = default_polyhedron(self)
        return A, b, True

    def is_feasible(self, x: Sequence[int]) -> bool:
        x = np.asarray(x)
        if x.shape != (self.n,) or not np.all((x == 0) | (x == 1)):
            return False
        if self.kind == "unconstrained":
            return True
        if self.kind == "assignment":
            m = x.reshape(self.p, self.p)
            return bool(np.all(m.sum(0) == 1) and np.all(m.sum(1) == 1))
        return _is_simple_path(self, x)


def default_polyhedron(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    n = inst.n
    if inst.kind == "unconstrained":
        return -np.eye(n), -np.ones(n)
    if inst.kind == "assignment":
        p = inst.p
        rows = []
        for i in range(p):
            r = np.zeros(n)
            r[i * p:(i + 1) * p] = 1
            rows.append(r)
        for j in range(p):
            r = np.zeros(n)
            r[j::p] = 1
            rows.append(r)
        E = np.array(rows)
        return np.vstack([E, -E]), np.concatenate([np.ones(2 * p), -np.ones(2 * p)])
    E = np.zeros((inst.n_nodes, n))
    rhs = np.zeros(inst.n_nodes)
    for u, v, e in inst.arcs:
        E[u, e] += 1
        E[v, e] -= 1
    rhs[inst.s] = 1
    rhs[inst.t] = -1
    return np.vstack([E, -E]), np.concatenate([rhs, -rhs])


def _is_simple_path(inst: Instance, x) -> bool:
    used = [a for a in inst.arcs if x[a[2]]]
    nxt = {}
    for u, v, _ in used:
        if u in nxt:
            return False
        nxt[u] = v
    node, seen = inst.s, {inst.s}
    while node != inst.t:
        if node not in nxt:
            return False
        node = nxt[node]
        if node in seen:
            return False
        seen.add(node)
    return len(seen) - 1 == len(used)


# --- constructors -----------------------------------------------------------

def shortest_path_instance(n_nodes: int, arcs: Iterable[Sequence[int]], s: int, t: int,
                           c_hat, polyhedron: bool = False) -> Instance:
    """Build a shortest-path instance.

    ``arcs`` holds ``(u, v)`` pairs (element index = position) or explicit
    ``(u, v, element_index)`` triples.
    """
    triples = []
    for k, a in enumerate(arcs):
        triples.append((int(a[0]), int(a[1]), int(a[2]) if len(a) > 2 else k))
    inst = Instance("shortest-path", np.asarray(c_hat, dtype=float), n_nodes=int(n_nodes),
                    arcs=tuple(triples), s=int(s), t=int(t))
    return _attach(inst) if polyhedron else inst


def assignment_instance(c_hat, p: int | None = None, polyhedron: bool = False) -> Instance:
    c = np.asarray(c_hat, dtype=float)
    if p is None:
        p = c.shape[0] if c.ndim == 2 else int(round(math.sqrt(c.size)))
    inst = Instance("assignment", c.ravel(), p=int(p))
    return _attach(inst) if polyhedron else inst


def unconstrained_instance(c_hat, polyhedron: bool = False) -> Instance:
    inst = Instance("unconstrained", np.asarray(c_hat, dtype=float))
    return _attach(inst) if polyhedron else inst


def _attach(inst: Instance) -> Instance:
    A, b = default_polyhedron(inst)
    return Instance(inst.kind, inst.c_hat, inst.n_nodes, inst.arcs, inst.s, inst.t, inst.p,
                    A, b, True, inst.node_labels)


# --- lexicographic minimisation ----------------------------------------------

def _lt(a, b, tol=TOL) -> bool:
    for x, y in zip(a, b):
        if x < y - tol:
            return True
        if x > y + tol:
            return False
    return False


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _keys(objectives: np.ndarray, n: int) -> list[tuple]:
    # trailing integer component makes every incidence vector's key distinct
    # and orders equal-cost solutions by their binary string
    return [tuple(float(v) for v in objectives[:, i]) + (1 << (n - 1 - i),) for i in range(n)]


def lex_minimize(inst: Instance, objectives: Sequence, allowed=None) -> Solution | None:
    """Minimise a stack of cost vectors lexicographically.

    Returns the lexicographically smallest incidence vector among the
    lexicographic optima, or ``None`` if no feasible solution uses only
    ``allowed`` elements.  Unconstrained instances follow the sign rule and
    pack every element whose cost stack is lexicographically <= 0.
    """
    obj = np.atleast_2d(np.asarray(objectives, dtype=float))
    if obj.shape[1] != inst.n:
        raise InstanceError(f"cost vector length {obj.shape[1]} != n={inst.n}")
    if not np.all(np.isfinite(obj)):
        raise InstanceError("non-finite costs")
    mask = np.ones(inst.n, dtype=bool) if allowed is None else np.asarray(allowed, dtype=bool)
    if inst.kind == "unconstrained":
        zero = (0.0,) * obj.shape[0]
        x = tuple(int(mask[i] and not _lt(zero, tuple(obj[:, i]))) for i in range(inst.n))
    elif inst.kind == "assignment":
        x = _hungarian_lex(inst.p, _keys(obj, inst.n), mask, obj.shape[0])
    else:
        x = _path_lex(inst, _keys(obj, inst.n), mask, obj.shape[0])
    if x is None:
        return None
    return Solution(x, float(inst.c_hat @ np.asarray(x, dtype=float)))


def _hungarian_lex(p: int, keys, mask, k: int):
    inf = (math.inf,) * k + (0,)
    zero = (0.0,) * k + (0,)
    a = [[keys[i * p + j] if mask[i * p + j] else inf for j in range(p)] for i in range(p)]
    u = [zero] * (p + 1)
    v = [zero] * (p + 1)
    match = [0] * (p + 1)
    way = [0] * (p + 1)
    for i in range(1, p + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (p + 1)
        used = [False] * (p + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta, j1 = inf, -1
            for j in range(1, p + 1):
                if used[j]:
                    continue
                cur = _sub(_sub(a[i0 - 1][j - 1], u[i0]), v[j])
                if _lt(cur, minv[j]):
                    minv[j] = cur
                    way[j] = j0
                if j1 < 0 or _lt(minv[j], delta):
                    delta, j1 = minv[j], j
            if j1 < 0 or math.isinf(delta[0]):
                return None
            for j in range(p + 1):
                if used[j]:
                    u[match[j]] = _add(u[match[j]], delta)
                    v[j] = _sub(v[j], delta)
                else:
                    minv[j] = _sub(minv[j], delta)
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    x = [0] * (p * p)
    for j in range(1, p + 1):
        x[(match[j] - 1) * p + (j - 1)] = 1
    return tuple(x)


def _path_lex(inst: Instance, keys, mask, k: int):
    for (u, v, e) in inst.arcs:
        if mask[e] and _lt(keys[e][:k], (0.0,) * k):
            raise InstanceError(f"shortest-path: negative cost on arc ({u},{v})")
    out = inst.out_arcs
    zero = (0.0,) * k + (0,)
    dist = {inst.s: zero}
    pred: dict[int, tuple[int, int, int]] = {}
    queue, queued = deque([inst.s]), {inst.s}
    while queue:
        u = queue.popleft()
        queued.discard(u)
        for arc in out[u]:
            _, v, e = arc
            if not mask[e] or v == inst.s:
                continue
            nd = _add(dist[u], keys[e])
            if v not in dist or _lt(nd, dist[v]):
                dist[v] = nd
                pred[v] = arc
                if v != inst.t and v not in queued:
                    queue.append(v)
                    queued.add(v)
    if inst.t not in dist:
        return None
    x = [0] * inst.n
    node, steps = inst.t, 0
    while node != inst.s:
        u, _, e = pred[node]
        x[e] = 1
        node = u
        steps += 1
        if steps > inst.n_nodes:
            raise InstanceError("label cycle while extracting path (tolerance failure)")
    return tuple(x)


# --- public solvers ----------------------------------------------------------

def _check_costs(inst: Instance, costs) -> np.ndarray:
    c = np.asarray(costs, dtype=float).ravel()
    if c.size != inst.n:
        raise InstanceError(f"cost vector length {c.size} != n={inst.n}")
    if inst.kind == "shortest-path" and np.any(c < -TOL):
        raise InstanceError("shortest-path costs must be nonnegative")
    return c


def solve_nominal(inst: Instance, costs=None, prefer: Solution | None = None) -> Solution:
    """Minimise ``costs^T x`` over the feasible set (costs default to c_hat).

    Ties go to the lexicographically smallest incidence vector unless
    ``prefer`` is itself optimal, in which case it is returned.
    """
    c = inst.c_hat if costs is None else _check_costs(inst, costs)
    sol = lex_minimize(inst, [c])
    if sol is None:
        raise InstanceError("no feasible solution")
    if prefer is not None:
        px = np.asarray(prefer.x, dtype=float)
        if inst.is_feasible(prefer.x) and c @ px <= c @ sol.array + TOL:
            return Solution(tuple(prefer.x), float(inst.c_hat @ px))
    return sol


def solve_weighted_sum(inst: Instance, f1_costs, f2_costs, lam: float,
                       mode: str = "plain") -> Solution:
    f1 = _check_costs(inst, f1_costs)
    f2 = _check_costs(inst, f2_costs)
    if lam < 0:
        raise InstanceError("lambda must be >= 0")
    if mode == "plain":
        stack = [f1 + lam * f2]
    elif mode == "lexicographic-f1":
        stack = [f1, f2]
    elif mode == "lexicographic-f2":
        stack = [f2, f1]
    else:
        raise InstanceError(f"unknown mode {mode!r}")
    if inst.kind == "shortest-path" and np.any(stack[0] < -TOL):
        raise InstanceError("shortest-path: weighted costs must be nonnegative")
    sol = lex_minimize(inst, stack)
    if sol is None:
        raise InstanceError("no feasible solution")
    return sol


def optimal_value(inst: Instance, costs) -> float:
    """Optimal objective value only; faster than :func:`solve_nominal`."""
    c = _check_costs(inst, costs)
    if inst.kind == "unconstrained":
        return float(np.minimum(c, 0.0).sum())
    if inst.kind == "assignment":
        m = c.reshape(inst.p, inst.p)
        r, cidx = linear_sum_assignment(m)
        return float(m[r, cidx].sum())
    return _dijkstra_value(inst, c)


def _dijkstra_value(inst: Instance, c: np.ndarray) -> float:
    out = inst.out_arcs
    dist = {inst.s: 0.0}
    heap = [(0.0, inst.s)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        if u == inst.t:
            return d
        done.add(u)
        for _, v, e in out[u]:
            nd = d + c[e]
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    raise InstanceError("no s-t path")


def count_feasible(inst: Instance, limit: int) -> int:
    """Size of the feasible set, raising :class:`TooLargeError` above ``limit``."""
    if inst.kind == "unconstrained":
        size = 2 ** inst.n
    elif inst.kind == "assignment":
        size = math.factorial(inst.p)
    else:
        size = sum(1 for _ in itertools.islice(_simple_paths(inst), limit + 1))
    if size > limit:
        raise TooLargeError(f"feasible set has more than {limit} solutions")
    return size


def enumerate_feasible(inst: Instance, limit: int = 10_000) -> list[Solution]:
    """Every feasible solution once, sorted lexicographically by incidence vector."""
    count_feasible(inst, limit)
    if inst.kind == "unconstrained":
        xs = itertools.product((0, 1), repeat=inst.n)
    elif inst.kind == "assignment":
        p = inst.p
        xs = []
        for perm in itertools.permutations(range(p)):
            x = [0] * (p * p)
            for i, j in enumerate(perm):
                x[i * p + j] = 1
            xs.append(tuple(x))
    else:
        xs = _simple_paths(inst)
    sols = [Solution(tuple(x), float(inst.c_hat @ np.asarray(x, dtype=float))) for x in xs]
    sols.sort()
    return sols


def feasible_matrix(inst: Instance, limit: int = 10_000) -> np.ndarray:
    """Enumerated feasible set as a (|X|, n) 0/1 float matrix."""
    return np.array([s.x for s in enumerate_feasible(inst, limit)], dtype=float)


def _simple_paths(inst: Instance):
    out = inst.out_arcs
    x = [0] * inst.n
    on_path = {inst.s}

    def dfs(u):
        if u == inst.t:
            yield tuple(x)
            return
        for _, v, e in out[u]:
            if v in on_path:
                continue
            on_path.add(v)
            x[e] = 1
            yield from dfs(v)
            x[e] = 0
            on_path.discard(v)

    yield from dfs(inst.s)


# --- JSON --------------------------------------------------------------------

def instance_from_dict(data: dict) -> Instance:
    """Parse the JSON instance schema; errors name the offending field."""
    def need(key):
        if key not in data:
            raise InstanceError(f"missing field {key!r}")
        return data[key]

    kind = need("kind")
    if kind not in KINDS:
        raise InstanceError(f"field 'kind': unknown value {kind!r}")
    try:
        c_hat = np.asarray(need("c_hat"), dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"field 'c_hat': {exc}") from None
    if "n" in data and int(data["n"]) != c_hat.size:
        raise InstanceError(f"field 'n': {data['n']} != len(c_hat)={c_hat.size}")
    A = data.get("A")
    b = data.get("b")
    extra = dict(A=None if A is None else np.asarray(A, dtype=float),
                 b=None if b is None else np.asarray(b, dtype=float),
                 integral_relaxation=bool(data.get("integral_relaxation", False)))
    if kind == "shortest-path":
        nodes = need("nodes")
        labels = tuple(nodes) if isinstance(nodes, list) else tuple(range(int(nodes)))
        index = {lab: i for i, lab in enumerate(labels)}
        try:
            arcs = tuple((index[a[0]], index[a[1]], int(a[2])) for a in need("arcs"))
            s, t = index[need("s")], index[need("t")]
        except KeyError as exc:
            raise InstanceError(f"field 'arcs'/'s'/'t': unknown node {exc}") from None
        except (IndexError, TypeError):
            raise InstanceError("field 'arcs': expected [u, v, element_index] triples") from None
        inst = Instance(kind, c_hat, n_nodes=len(labels), arcs=arcs, s=s, t=t,
                        node_labels=labels, **extra)
    elif kind == "assignment":
        inst = Instance(kind, c_hat, p=int(need("p")), **extra)
    else:
        inst = Instance(kind, c_hat, **extra)
    if inst.A is not None:
        try:
            sols = enumerate_feasible(inst, 10_000)
        except TooLargeError:
            sols = []
        for sol in sols:
            if np.any(inst.A @ sol.array < inst.b - TOL):
                raise InstanceError(f"field 'A': feasible vector {sol.x} violates Ax >= b")
    return inst


def instance_to_dict(inst: Instance) -> dict:
    d: dict = {"kind": inst.kind, "n": inst.n, "c_hat": inst.c_hat.tolist()}
    if inst.kind == "shortest-path":
        labels = inst.node_labels or tuple(range(inst.n_nodes))
        d["nodes"] = list(labels)
        d["arcs"] = [[labels[u], labels[v], e] for u, v, e in inst.arcs]
        d["s"], d["t"] = labels[inst.s], labels[inst.t]
    elif inst.kind == "assignment":
        d["p"] = inst.p
    if inst.A is not None:
        d["A"] = inst.A.tolist()
        d["b"] = inst.b.tolist()
        d["integral_relaxation"] = inst.integral_relaxation
    return d


def load_instance(path) -> Instance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InstanceError("instance JSON must be an object")
    return instance_from_dict(data)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")
