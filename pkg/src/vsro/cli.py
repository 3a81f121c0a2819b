"""Command-line front end.

Exit codes: 0 success, 2 infeasible or no answer (a status JSON is still
written), 1 error (message on stderr).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import milp
from .frontier import FrontierError, brute_force_frontier, solve_variable_sized, write_chart
from .harness import (ExperimentConfig, gen_assignment, gen_layered, gen_series_parallel,
                      run_wc_experiment, trend_summary)
from .inverse_milp import (InverseError, InverseProblemSpec, build, row_generation_solve,
                           solve_model, witness_oracle)
from .problems import InstanceError, feasible_matrix, instance_to_dict, load_instance, solve_nominal
from .regret import best_case_lambda, regret_general, regret_lines, regret_regular, worst_case_lambda
from .uncertainty import GeneralInterval, ShapeError, shape_from_dict

ORACLE_TOL = 1e-6


class CliError(Exception):
    pass


class OracleMismatch(CliError):
    pass


# --- argument helpers ---------------------------------------------------------------------------

def _vector(text: str | None, n: int, name: str) -> np.ndarray | None:
    """Scalar or comma list of length n."""
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError(f"{name}: expected a number or comma-separated numbers") from None
    if len(vals) == 1:
        return np.full(n, vals[0])
    if len(vals) != n:
        raise CliError(f"{name}: expected {n} values, got {len(vals)}")
    return np.array(vals)


def _readable(path: str, name: str) -> Path:
    p = Path(path)
    if not p.is_file() or not os.access(p, os.R_OK):
        raise CliError(f"{name}: cannot read {path}")
    return p


def _writable(path: str | None, name: str) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise CliError(f"{name}: directory {parent} does not exist")
    return p


def _raw_instance(path: Path) -> dict:
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON: {exc}") from None
    return data if isinstance(data, dict) else {}


def _x_hat(inst, text: str | None) -> np.ndarray:
    """``--x`` lists the chosen element indices; default is the nominal optimum."""
    if text is None:
        return solve_nominal(inst).array
    try:
        idx = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError("--x: expected comma-separated element indices") from None
    x = np.zeros(inst.n)
    if any(i < 0 or i >= inst.n for i in idx):
        raise CliError(f"--x: indices must lie in [0, {inst.n - 1}]")
    x[idx] = 1.0
    if not inst.is_feasible(x.astype(int)):
        raise CliError("--x: not a feasible solution")
    return x


def _shape(args, inst, raw: dict):
    spec = args.shape
    if spec.endswith(".json"):
        try:
            data = json.loads(_readable(spec, "--shape").read_text())
        except json.JSONDecodeError as exc:
            raise ShapeError(f"malformed shape JSON: {exc}") from None
        return shape_from_dict(data)
    data: dict = {"variant": spec}
    if spec == "ellipsoid":
        if "Q" not in raw:
            raise ShapeError("field 'Q' required in the instance JSON for ellipsoid")
        data["Q"] = raw["Q"]
    elif spec not in ("proportional", "constant"):
        d = _vector(args.d, inst.n, "--d") if args.d else raw.get("d")
        if d is None:
            raise ShapeError(f"field 'd' required for {spec} (pass --d or put it in the instance)")
        data["d"] = d
    return shape_from_dict(data)


def _dump(obj, path: Path | None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _num(v):
    return None if v is None else float(v)


# --- subcommands --------------------------------------------------------------------------------

def cmd_solve_frontier(args) -> int:
    path = _readable(args.instance, "--instance")
    out = _writable(args.out, "--out")
    inst = load_instance(path)
    shape = _shape(args, inst, _raw_instance(path))
    fr = solve_variable_sized(inst, shape)
    if args.oracle:
        ref = brute_force_frontier(inst, lambda x: shape.f2(x, inst.c_hat))
        got, want = fr.pairs, ref.pairs
        if len(got) != len(want) or any(abs(a - b) > ORACLE_TOL for p, q in zip(got, want)
                                        for a, b in zip(p, q)):
            raise OracleMismatch(f"frontier {got} differs from enumeration {want}")
    if out is None:
        out = Path("frontier.csv")
    write_chart(fr, out)
    print(f"{len(fr.points)} frontier solutions written to {out}")
    return 0


def cmd_regret(args) -> int:
    path = _readable(args.instance, "--instance")
    out = _writable(args.out, "--out")
    inst = load_instance(path)
    x = _x_hat(inst, args.x)
    if args.mode == "regular":
        if args.lam is None:
            raise CliError("--lambda is required with --mode regular")
        val = regret_regular(inst, x, args.lam)
        res = {"mode": "regular", "lambda": args.lam, "regret": val}
        if args.oracle:
            ref = max(0.0, float((regret_lines(inst, x) @ [1.0, args.lam]).max()))
            _compare(val, ref, "regret")
    else:
        dp = _vector(args.d_plus, inst.n, "--d-plus")
        dm = _vector(args.d_minus, inst.n, "--d-minus")
        if dp is None or dm is None:
            raise CliError("--d-plus and --d-minus are required with --mode general")
        gi = GeneralInterval(dp, dm)
        val = regret_general(inst, x, gi)
        res = {"mode": "general", "regret": val}
        if args.oracle:
            X = feasible_matrix(inst)
            c = np.where(x > 0.5, inst.c_hat + dp, inst.c_hat - dm)
            _compare(val, max(0.0, float(c @ x - (X @ c).min())), "regret")
    res.update(status="ok", x=np.flatnonzero(x).tolist())
    _dump(res, out)
    return 0


def _compare(got, ref, what):
    if got is None or ref is None:
        if got is not ref and not (got is None and ref is None):
            raise OracleMismatch(f"{what}: solver {got} vs oracle {ref}")
        return
    if abs(got - ref) > ORACLE_TOL * max(1.0, abs(ref)):
        raise OracleMismatch(f"{what}: solver {got} vs oracle {ref}")


def _inverse(args, worst: bool) -> int:
    path = _readable(args.instance, "--instance")
    out = _writable(args.out, "--out")
    inst = load_instance(path)
    x = _x_hat(inst, args.x)
    mode = ("worst-" if worst else "best-") + args.mode
    Mp = _vector(args.cap_plus, inst.n, "--cap-plus")
    Mm = _vector(args.cap_minus, inst.n, "--cap-minus")
    spec = InverseProblemSpec(inst, x, mode, Mp, Mm, args.eps, symmetric=args.symmetric)
    if args.method == "full":
        X = feasible_matrix(inst)
        full = InverseProblemSpec(inst, x, mode, Mp, Mm, args.eps, pool=list(X),
                                  pool_bar=list(X), symmetric=args.symmetric)
        res = solve_model(build(full), args.backend)
        status = {"optimal": "optimal", "infeasible": "infeasible"}.get(res.status, "budget")
        obj = res.objective if status == "optimal" else None
        value = build(full).decode(res) if status == "optimal" else None
    else:
        r = row_generation_solve(spec, budget=args.budget, backend=args.backend)
        status, obj, value = r.status, r.objective, r.value
    result = {"mode": mode, "status": status, "objective": _num(obj) if status == "optimal" else None}
    if status == "optimal":
        if isinstance(value, GeneralInterval):
            result["d_plus"] = value.d_plus.tolist()
            result["d_minus"] = value.d_minus.tolist()
        else:
            result["lambda"] = float(value)
    if args.oracle:
        if args.mode == "general":
            ref = witness_oracle(spec)[0]
        elif worst:
            ref = worst_case_lambda(inst, x, args.eps)
        else:
            ref = best_case_lambda(inst, x)[0]
        _compare(result["objective"], ref, mode)
        result["oracle"] = _num(ref)
    _dump(result, out)
    return 0 if status == "optimal" else 2


def cmd_inverse_best(args) -> int:
    return _inverse(args, worst=False)


def cmd_inverse_worst(args) -> int:
    return _inverse(args, worst=True)


def cmd_experiment(args) -> int:
    out = Path(args.out or "experiment")
    if not out.parent.is_dir():
        raise CliError(f"--out: directory {out.parent} does not exist")
    out.mkdir(exist_ok=True)
    cfg = ExperimentConfig(p=args.p, n_instances=args.instances, n_samples=args.samples,
                           c_max=args.c_max, cap=args.cap, seed=args.seed, eps=args.eps,
                           workers=args.workers, backend=args.backend, timings=not args.no_timings)
    rows, records = run_wc_experiment(cfg, out / "raw.csv", out / "stats.csv")
    summary = trend_summary(rows, records, 2 * cfg.p * cfg.p * cfg.cap)
    if args.oracle:
        bad = [r.instance_id for r in records if r.nomreg_mean < r.reg_mean - ORACLE_TOL]
        if bad:
            raise OracleMismatch(f"nominal regret below optimal regret on instances {bad}")
        if cfg.p <= 3:
            for r in records:
                inst = gen_assignment(cfg.p, cfg.c_max, seed=[cfg.seed, r.instance_id, 0])
                xh = solve_nominal(inst).array
                for mode, got in (("worst-general", r.wc), ("best-general", r.bc)):
                    ref = witness_oracle(InverseProblemSpec(inst, xh, mode, cfg.cap, cfg.cap,
                                                            cfg.eps, symmetric=True))[0]
                    _compare(got, ref, f"instance {r.instance_id} {mode}")
    summary.update(instances=len(records), requested=cfg.n_instances)
    _dump(summary, out / "summary.json")
    print(f"{len(records)} instances, {len(rows)} classes written to {out}")
    return 0 if records else 2


def cmd_gen(args) -> int:
    out = _writable(args.out, "--out")
    if args.kind == "assignment":
        inst = gen_assignment(args.p, args.c_max, args.seed)
        data = instance_to_dict(inst)
    else:
        if args.kind == "series-parallel":
            inst, meta = gen_series_parallel(args.edge_ops, args.seed, args.c_max)
        else:
            inst, meta = gen_layered(args.layers, args.width, args.seed, args.c_max)
        data = instance_to_dict(inst)
        data["d"] = meta["d"].tolist()
    _dump(data, out)
    return 0


def cmd_export_lp(args) -> int:
    path = _readable(args.instance, "--instance")
    out = _writable(args.out, "--out") or Path("model.lp")
    inst = load_instance(path)
    x = _x_hat(inst, args.x)
    Mp = _vector(args.cap_plus, inst.n, "--cap-plus")
    Mm = _vector(args.cap_minus, inst.n, "--cap-minus")
    X = feasible_matrix(inst)
    spec = InverseProblemSpec(inst, x, args.model, Mp, Mm, args.eps, pool=list(X),
                              pool_bar=list(X), symmetric=args.symmetric)
    model = build(spec).model
    milp.export_lp_file(model, out)
    if args.oracle:
        back = milp.read_lp_file(out)
        a, b = milp.solve(model, "bundled"), milp.solve(back, "bundled")
        if a.status != b.status or (a.status == "optimal" and abs(a.objective - b.objective) > ORACLE_TOL):
            raise OracleMismatch(f"LP round trip: {a.status} {a.objective} vs {b.status} {b.objective}")
    print(f"model with {len(model.names)} variables written to {out}")
    return 0


# --- parser -----------------------------------------------------------------------------------

def _common(p, instance=True):
    if instance:
        p.add_argument("--instance", required=True, help="instance JSON file")
    p.add_argument("--out", help="output path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true", help="re-verify by enumeration")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vsro", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-frontier", help="variable-sized robust frontier and chart CSV")
    _common(p)
    p.add_argument("--shape", required=True,
                   help="proportional|constant|arbitrary|infinity|manhattan|euclidean|ellipsoid or a JSON file")
    p.add_argument("--d", help="shape vector (comma list); defaults to the instance's 'd'")
    p.set_defaults(func=cmd_solve_frontier)

    p = sub.add_parser("regret", help="regret of a solution")
    _common(p)
    p.add_argument("--x", help="element indices of the solution (default: nominal optimum)")
    p.add_argument("--mode", choices=["regular", "general"], default="regular")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--d-plus")
    p.add_argument("--d-minus")
    p.set_defaults(func=cmd_regret)

    for name, func in (("inverse-best", cmd_inverse_best), ("inverse-worst", cmd_inverse_worst)):
        p = sub.add_parser(name, help=f"{name.split('-')[1]}-case inverse problem")
        _common(p)
        p.add_argument("--x", help="element indices of x_hat (default: nominal optimum)")
        p.add_argument("--mode", choices=["regular", "general"], default="regular")
        p.add_argument("--cap-plus", help="cap on increases (number or comma list)")
        p.add_argument("--cap-minus", help="cap on decreases (number or comma list)")
        p.add_argument("--eps", type=float, default=1.0)
        p.add_argument("--symmetric", action="store_true", help="force d+ = d-")
        p.add_argument("--method", choices=["rowgen", "full"], default="rowgen")
        p.add_argument("--budget", type=int, default=100, help="row generation iterations")
        p.add_argument("--backend", choices=["auto", "bundled", "highs"], default="auto")
        p.set_defaults(func=func)

    p = sub.add_parser("experiment", help="worst-case/best-case statistics experiment")
    _common(p, instance=False)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--c-max", type=int, default=20)
    p.add_argument("--cap", type=float, default=20.0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=["bundled", "highs", "auto"], default="highs")
    p.add_argument("--no-timings", action="store_true", help="write zero timings (byte-stable CSV)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gen", help="generate an instance JSON")
    _common(p, instance=False)
    p.add_argument("--kind", choices=["assignment", "series-parallel", "layered"], required=True)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--c-max", type=int, default=20)
    p.add_argument("--edge-ops", type=int, default=6)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--width", type=int, default=3)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("export-lp", help="write an inverse model (full pool) as an LP file")
    _common(p)
    p.add_argument("--model", choices=["best-regular", "worst-regular", "best-general", "worst-general"],
                   default="best-general")
    p.add_argument("--x")
    p.add_argument("--cap-plus")
    p.add_argument("--cap-minus")
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--symmetric", action="store_true")
    p.set_defaults(func=cmd_export_lp)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OracleMismatch as exc:
        print(f"oracle mismatch: {exc}", file=sys.stderr)
        return 1
    except (CliError, InstanceError, ShapeError, InverseError, FrontierError, milp.ModelError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
