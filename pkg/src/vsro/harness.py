"""Instance generators, bound campaigns and the worst-case/best-case statistics experiment."""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .frontier import check_frontier_bounds, solve_variable_sized
from .inverse_milp import InverseProblemSpec, regrets, row_generation_solve
from .problems import Instance, assignment_instance, feasible_matrix, shortest_path_instance, solve_nominal
from .uncertainty import ArbitraryBox, ConstantBox, GeneralInterval, ManhattanBall

log = logging.getLogger(__name__)


def gen_assignment(p: int, c_max: int = 20, seed: int = 0) -> Instance:
    """p x p assignment with i.i.d. integer costs in {0, ..., c_max}."""
    if p < 2:
        raise ValueError("p must be >= 2")
    rng = np.random.default_rng(seed)
    return assignment_instance(rng.integers(0, c_max + 1, p * p).astype(float), p)


# --- series-parallel graphs ----------------------------------------------------------------

def gen_series_parallel(edge_ops: int, seed: int = 0, c_max: int = 20, d_max: int = 10):
    """Random two-terminal series-parallel graph from ``edge_ops`` compositions.

    Returns ``(instance, meta)``; ``meta`` holds ``M``, ``N``, ``d`` and the
    graph class tag for :func:`check_frontier_bounds`.
    """
    if edge_ops < 0:
        raise ValueError("edge_ops must be >= 0")
    rng = np.random.default_rng(seed)
    # component: (n_nodes, arcs, s, t) with local node ids
    comps = [(2, [(0, 1)], 0, 1) for _ in range(edge_ops + 1)]
    while len(comps) > 1:
        i, j = sorted(rng.choice(len(comps), 2, replace=False))
        b = comps.pop(j)
        a = comps.pop(i)
        comps.append(_series(a, b) if rng.random() < 0.5 else _parallel(a, b))
    n_nodes, arcs, s, t = comps[0]
    n_nodes, arcs, s, t = _relabel(n_nodes, arcs, s, t)
    M = len(arcs)
    c = rng.integers(1, c_max + 1, M).astype(float)
    d = rng.integers(1, d_max + 1, M).astype(float)
    inst = shortest_path_instance(n_nodes, arcs, s, t, c)
    if not is_series_parallel(n_nodes, arcs, s, t):
        raise RuntimeError("generator produced a graph that does not reduce")
    return inst, {"graph_class": "series-parallel", "M": M, "N": n_nodes, "n": M, "d": d}


def _series(a, b):
    na, arcs_a, sa, ta = a
    nb, arcs_b, sb, tb = b
    # b's source is glued onto a's sink
    mp = {}
    nxt = na
    for v in range(nb):
        if v == sb:
            mp[v] = ta
        else:
            mp[v] = nxt
            nxt += 1
    return nxt, arcs_a + [(mp[u], mp[v]) for u, v in arcs_b], sa, mp[tb]


def _parallel(a, b):
    na, arcs_a, sa, ta = a
    nb, arcs_b, sb, tb = b
    mp = {}
    nxt = na
    for v in range(nb):
        if v == sb:
            mp[v] = sa
        elif v == tb:
            mp[v] = ta
        else:
            mp[v] = nxt
            nxt += 1
    return nxt, arcs_a + [(mp[u], mp[v]) for u, v in arcs_b], sa, ta


def _relabel(n_nodes, arcs, s, t):
    """Source first, sink last, others in first-appearance order."""
    order = [s]
    for u, v in arcs:
        for x in (u, v):
            if x not in order and x != t:
                order.append(x)
    order.append(t)
    mp = {v: k for k, v in enumerate(order)}
    return len(order), [(mp[u], mp[v]) for u, v in arcs], 0, len(order) - 1


def is_series_parallel(n_nodes: int, arcs, s: int, t: int) -> bool:
    """Reduce by parallel merges and series contractions; True iff one s-t edge remains."""
    edges = [tuple(a[:2]) for a in arcs]
    changed = True
    while changed and len(edges) > 1:
        changed = False
        # parallel
        uniq = list(dict.fromkeys(edges))
        if len(uniq) < len(edges):
            edges = uniq
            changed = True
        # series: inner node with exactly one in-arc and one out-arc
        ins: dict[int, list[int]] = {}
        outs: dict[int, list[int]] = {}
        for k, (u, v) in enumerate(edges):
            outs.setdefault(u, []).append(k)
            ins.setdefault(v, []).append(k)
        for v in range(n_nodes):
            if v in (s, t):
                continue
            if len(ins.get(v, [])) == 1 and len(outs.get(v, [])) == 1:
                a, b = ins[v][0], outs[v][0]
                new = (edges[a][0], edges[b][1])
                edges = [e for k, e in enumerate(edges) if k not in (a, b)] + [new]
                changed = True
                break
    return edges == [(s, t)]


def gen_layered(ell: int, w: int, seed: int = 0, c_max: int = 20, d_max: int = 10):
    """s, ``ell`` layers of ``w`` nodes with complete bipartite links, t."""
    if ell < 1 or w < 1:
        raise ValueError("ell and w must be >= 1")
    rng = np.random.default_rng(seed)
    layer = [[1 + k * w + j for j in range(w)] for k in range(ell)]
    t = 1 + ell * w
    arcs = [(0, v) for v in layer[0]]
    for k in range(ell - 1):
        arcs += [(u, v) for u in layer[k] for v in layer[k + 1]]
    arcs += [(u, t) for u in layer[-1]]
    M = len(arcs)
    c = rng.integers(1, c_max + 1, M).astype(float)
    d = rng.integers(1, d_max + 1, M).astype(float)
    inst = shortest_path_instance(t + 1, arcs, 0, t, c)
    return inst, {"graph_class": "layered", "layers": ell, "width": w, "M": M, "N": t + 1,
                  "n": M, "d": d}


def bound_campaign(kind: str, count: int = 100, seed: int = 0):
    """Frontier size against its bound on ``count`` seeded graphs of one class.

    ``kind`` is ``series-parallel`` or ``layered`` (variable growth), or
    ``constant`` / ``manhattan`` (on series-parallel graphs).
    """
    reports = []
    for k in range(count):
        rng = np.random.default_rng([seed, k])
        if kind == "layered":
            inst, meta = gen_layered(int(rng.integers(1, 8)), int(rng.integers(1, 5)), seed=[seed, k])
        else:
            inst, meta = gen_series_parallel(int(rng.integers(0, 15)), seed=[seed, k])
        if kind == "constant":
            fr = solve_variable_sized(inst, ConstantBox())
            meta = dict(meta, shape="constant")
        elif kind == "manhattan":
            fr = solve_variable_sized(inst, ManhattanBall(meta["d"]))
            meta = dict(meta, shape="manhattan")
        else:
            fr = solve_variable_sized(inst, ArbitraryBox(meta["d"]))
            meta = dict(meta, shape="arbitrary")
        reports.append(check_frontier_bounds(fr, meta))
    return reports


# --- experiment ----------------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    p: int = 5
    n_instances: int = 200
    c_max: int = 20
    n_samples: int = 100
    cap: float = 20.0
    seed: int = 0
    eps: float = 1.0
    workers: int = 1
    backend: str = "highs"
    timings: bool = True

    def __post_init__(self):
        if min(self.p, self.n_instances, self.n_samples) < 1 or self.c_max < 0 or self.cap < 0:
            raise ValueError("counts must be >= 1 and ranges nonnegative")
        if not self.eps > 0:
            raise ValueError("eps must be > 0")


@dataclass
class InstanceRecord:
    instance_id: int
    wc: float
    bc: float
    reg_mean: float
    nomreg_mean: float
    wc_time: float
    bc_time: float
    reg_time: float


@dataclass
class StatsRow:
    wc: float
    freq: int
    reg: float
    nomreg: float
    ratio: float
    bc: float  # minus the mean gap to the largest possible BC value
    wct: float
    bct: float
    regt: float


def _clock(cfg):
    return time.perf_counter() if cfg.timings else 0.0


def run_instance(cfg: ExperimentConfig, idx: int) -> InstanceRecord | None:
    """One seeded instance of the experiment; ``None`` (with a log line) if any solve fails."""
    inst = gen_assignment(cfg.p, cfg.c_max, seed=[cfg.seed, idx, 0])
    return evaluate_instance(cfg, inst, idx)


def evaluate_instance(cfg: ExperimentConfig, inst: Instance, idx: int = 0, x_hat=None,
                      M_plus=None, M_minus=None, symmetric: bool = True) -> InstanceRecord | None:
    """Worst case, best case and sampled regrets for one instance.

    Caps default to ``cfg.cap`` on every element.  Sampled regret problems
    always use symmetric integer deviations in ``{0, ..., cap}``.
    """
    rng = np.random.default_rng([cfg.seed, idx])
    x_hat = solve_nominal(inst).array if x_hat is None else np.asarray(x_hat, dtype=float)
    mp = cfg.cap if M_plus is None else M_plus
    mm = cfg.cap if M_minus is None else M_minus
    X = feasible_matrix(inst, limit=10**6)
    try:
        t0 = _clock(cfg)
        wc = row_generation_solve(InverseProblemSpec(inst, x_hat, "worst-general", mp, mm, cfg.eps,
                                                     symmetric=symmetric),
                                  backend=cfg.backend, X=X)
        t1 = _clock(cfg)
        bc = row_generation_solve(InverseProblemSpec(inst, x_hat, "best-general", mp, mm,
                                                     symmetric=symmetric),
                                  backend=cfg.backend, X=X)
        t2 = _clock(cfg)
    except Exception as exc:  # noqa: BLE001 - any failure drops the whole instance
        log.warning("instance %d skipped: %s", idx, exc)
        return None
    if wc.status != "optimal" or bc.status != "optimal":
        log.warning("instance %d skipped: worst case %s, best case %s", idx, wc.status, bc.status)
        return None
    ih = int(np.flatnonzero(np.all(X == x_hat, axis=1))[0])
    regs, noms = [], []
    spec = InverseProblemSpec(inst, x_hat, "best-general")
    for _ in range(cfg.n_samples):
        d = rng.integers(0, int(cfg.cap) + 1, inst.n).astype(float)
        r, _ = regrets(spec, X, GeneralInterval(d, d))
        regs.append(float(r.min()))
        noms.append(float(r[ih]))
    t3 = _clock(cfg)
    return InstanceRecord(idx, float(wc.objective), float(bc.objective), float(np.mean(regs)),
                          float(np.mean(noms)), t1 - t0, t2 - t1, t3 - t2)


def _run_one(args):
    return run_instance(*args)


def run_wc_experiment(cfg: ExperimentConfig, raw_csv=None, stats_csv=None):
    """Run every instance, aggregate by worst-case class, optionally write both CSV files.

    Returns ``(stats_rows, records)``.
    """
    jobs = [(cfg, i) for i in range(cfg.n_instances)]
    if cfg.workers > 1:
        from multiprocessing import Pool
        with Pool(cfg.workers) as pool:
            out = pool.map(_run_one, jobs)
    else:
        out = [_run_one(j) for j in jobs]
    records = sorted((r for r in out if r is not None), key=lambda r: r.instance_id)
    rows = aggregate(records, max_bc=2 * cfg.p * cfg.p * cfg.cap)
    if raw_csv:
        write_records(records, raw_csv)
    if stats_csv:
        write_stats(rows, stats_csv)
    return rows, records


def wc_class(v: float) -> float:
    return round(v, 4)  # absorbs solver noise such as 25.999999


def aggregate(records, max_bc: float) -> list[StatsRow]:
    groups: dict[float, list[InstanceRecord]] = {}
    for r in records:
        groups.setdefault(wc_class(r.wc), []).append(r)
    rows = []
    for wc in sorted(groups):
        g = groups[wc]
        reg = float(np.mean([r.reg_mean for r in g]))
        nom = float(np.mean([r.nomreg_mean for r in g]))
        rows.append(StatsRow(wc, len(g), reg, nom, nom / reg if reg > 0 else math.inf,
                             -float(np.mean([max_bc - r.bc for r in g])),
                             float(np.mean([r.wc_time for r in g])),
                             float(np.mean([r.bc_time for r in g])),
                             float(np.mean([r.reg_time for r in g]))))
    return rows


def trend_summary(rows: list[StatsRow], records: list[InstanceRecord], max_bc: float) -> dict:
    """Adjacent Ratio increases across WC classes and Spearman(WC, BC gap).

    The correlation is ``None`` when either series is constant.
    """
    ratios = [r.ratio for r in rows]
    violations = sum(1 for a, b in zip(ratios, ratios[1:]) if b > a + 1e-12)
    gaps = [max_bc - r.bc for r in records]
    wcs = [r.wc for r in records]
    rho = None
    if len(records) > 1 and np.ptp(wcs) > 0 and np.ptp(gaps) > 0:
        rho = float(spearmanr(wcs, gaps).statistic)
    return {"ratio_violations": violations, "spearman_wc_bcgap": rho, "classes": len(rows)}


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_records(records, path) -> None:
    cols = ["instance_id", "wc", "bc", "reg_mean", "nomreg_mean", "wc_time", "bc_time", "reg_time"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in cols])


def write_stats(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["WC", "Freq", "Reg", "NomReg", "Ratio", "BC", "WCT", "BCT", "RegT"])
        for r in rows:
            w.writerow([_fmt(r.wc), r.freq, _fmt(r.reg), _fmt(r.nomreg), _fmt(r.ratio), _fmt(r.bc),
                        _fmt(r.wct), _fmt(r.bct), _fmt(r.regt)])
