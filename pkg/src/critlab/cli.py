"""Command-line entry point: ``critlab <subcommand> ...``.

Exit codes: 0 success, 2 precondition violation, 3 budget exhausted (partial
output is still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import calculus, dimension, energy, regimes, spec_io, verify
from .cantor import CantorMap, build_schedule, cantor_set_points
from .regimes import RegimeParams

EXIT_OK, EXIT_PRECONDITION, EXIT_BUDGET = 0, 2, 3


class BudgetExhausted(Exception):
    """Raised after partial output has been written."""


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _threads(args) -> int:
    env = os.environ.get("CRITLAB_THREADS")
    if env:
        return max(1, int(env))
    return max(1, args.threads or os.cpu_count() or 1)


def _point(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def _emit(args, payload: dict, spec: dict | None = None, constants: dict | None = None):
    out = getattr(args, "out", None)
    if out:
        spec_io.write_json(out, payload)
        manifest = {
            "commandLine": ["critlab", *args._argv],
            "mapSpecDigest": spec_io.digest(spec) if spec else None,
            "tolerances": {k: getattr(args, k) for k in ("tol", "step", "max_cells") if hasattr(args, k)},
            "threads": _threads(args),
            "fittedConstants": constants or {},
            "wallTime": time.perf_counter() - args._t0,
            "artifactVersion": _version(),
            "output": str(out),
        }
        spec_io.write_json(str(out) + ".manifest.json", manifest)
    else:
        print(spec_io.dumps(payload))


# -- subcommands ---------------------------------------------------------------------


def cmd_classify(args):
    p = RegimeParams(args.n, regimes.exact(args.q), regimes.exact(args.a), regimes.exact(args.d))
    v = regimes.classify(p)
    row = {k: (float(x) if hasattr(x, "denominator") and not isinstance(x, int) else x) for k, x in v.row().items()}
    row["counterexampleExists"] = v.counterexample_exists
    row["criticalSetNull"] = v.critical_set_null
    row["notes"] = v.notes
    _emit(args, row)


def cmd_sweep(args):
    rows = regimes.sweep(args.n, regimes.parse_range(args.q), regimes.parse_range(args.a),
                         regimes.parse_range(args.d), workers=_threads(args))
    out = Path(args.out) if args.out else None
    handle = out.open("w", newline="") if out else sys.stdout
    w = csv.DictWriter(handle, fieldnames=regimes.CSV_COLUMNS)
    w.writeheader()
    for v in rows:
        w.writerow({k: (float(x) if hasattr(x, "denominator") and not isinstance(x, int) else x)
                    for k, x in v.row().items()})
    if out:
        handle.close()
        manifest = {"commandLine": ["critlab", *args._argv], "threads": _threads(args), "rows": len(rows),
                    "wallTime": time.perf_counter() - args._t0, "artifactVersion": _version(), "output": str(out)}
        spec_io.write_json(str(out) + ".manifest.json", manifest)


def _eval_payload(m, x):
    X = x[None, :]
    D = m._gradient(X)[0]
    return {"point": x.tolist(), "value": m._value(X)[0].tolist(), "jac": float(m._jac(X)[0]),
            "dfNorm": float(np.linalg.norm(D, 2)), "d2fNorm": float(np.max(np.abs(m._hessian(X)[0])))}


def cmd_eval(args):
    m = spec_io.load_map(args.map)
    x = _point(args.point)
    if not m.contains(x[None, :])[0]:
        raise ValueError("point outside the map's domain")
    _emit(args, _eval_payload(m, x), m.to_spec())


def cmd_diffcheck(args):
    m = spec_io.load_map(args.map)
    x = _point(args.point)
    cfg = calculus.DiffConfig(step=args.step, singular_standoff=max(args.standoff, 10 * args.step))
    X = x[None, :]
    G, H = m._gradient(X)[0], m._hessian(X)[0]
    fg, fh = calculus.fd_gradient(m, x, cfg), calculus.fd_hessian(m, x, cfg)
    payload = {
        "point": x.tolist(),
        "gradientRelErr": float(np.max(np.abs(fg - G)) / max(1.0, np.max(np.abs(G)))),
        "hessianRelErr": float(np.max(np.abs(fh - H)) / max(1.0, np.max(np.abs(H)))),
        "gradient": G.tolist(), "fdGradient": fg.tolist(),
    }
    _emit(args, payload, m.to_spec())


def cmd_cantor_build(args):
    s = build_schedule(RegimeParams(args.n, regimes.exact(args.q), regimes.exact(args.a), regimes.exact(args.d)), args.k)
    spec = spec_io.map_to_spec(CantorMap(s))
    _emit(args, spec, spec)


def cmd_cantor_eval(args):
    m = spec_io.load_map(args.map)
    if not isinstance(m, CantorMap):
        raise ValueError("cantor eval needs a cantor map spec")
    x = _point(args.point)
    payload = _eval_payload(m, x)
    payload["generation"] = int(m.locate(x[None, :])[0][0])
    _emit(args, payload, m.to_spec())


def cmd_cantor_cells(args):
    m = spec_io.load_map(args.map)
    if not isinstance(m, CantorMap):
        raise ValueError("cantor cells needs a cantor map spec")
    cells = cantor_set_points(m.s, args.gen)
    out = Path(args.out) if args.out else None
    handle = out.open("w", newline="") if out else sys.stdout
    w = csv.writer(handle)
    n = m.s.n
    w.writerow(["word"] + [f"z{j}" for j in range(n)] + [f"zt{j}" for j in range(n)] + ["q_half", "r_half_last"])
    for c in cells:
        w.writerow(["".join(str(v) for v in c.word)] + [repr(float(v)) for v in c.zv] +
                   [repr(float(v)) for v in c.ztv] + [repr(c.q_half), repr(c.r_half[-1])])
    if out:
        handle.close()


def cmd_energy(args):
    m = spec_io.load_map(args.map)
    ep = energy.EnergyParams(args.q, args.a, args.tol, args.max_cells)
    rep = energy.energy(m, ep)
    payload = rep.to_dict()
    constants = {}
    if isinstance(m, CantorMap) and m.s.k >= 1:
        series = energy.cantor_series(m.s, ep, numeric_generations=min(args.numeric_generations, m.s.k))
        payload["perGeneration"] = series.per_generation
        payload["analyticD2Sum"], payload["analyticJacSum"] = series.d2_integral, series.jac_neg_integral
        for ch in ("D2", "Jac"):
            constants[f"band{ch}"] = energy.fitted_band_ratios(series.per_generation, ch)["fittedConstant"]
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=["i", "analyticD2Term", "analyticJacTerm", "numericD2", "numericJac"])
                w.writeheader()
                w.writerows(series.per_generation)
    _emit(args, payload, m.to_spec(), constants)
    budget = [r for r in (rep.d2, rep.jac) if r is not None and "budget" in r.note]
    if budget:
        raise BudgetExhausted("cell budget exhausted; partial report written")


def cmd_dimension(args):
    m = spec_io.load_map(args.map)
    rule = None
    text = ""
    if not isinstance(m, CantorMap):
        c, th = args.eps_c, args.eps_theta
        rule = lambda j, side: c * side**th  # noqa: E731
        text = f"eps(side) = {c} * side^{th}"
    rep = dimension.near_critical_dimension(m, args.depth, rule, rule_text=text)
    _emit(args, rep.to_dict(), m.to_spec(), rep.fitted_constants)


def cmd_verify(args):
    m = spec_io.load_map(args.map)
    op = args.op
    if op == "injectivity":
        payload = verify.injectivity_scan(m, args.res).to_dict()
    elif op == "degree":
        payload = {"degree": verify.degree_2d(m, _point(args.point))}
    elif op == "signs":
        payload = verify.sign_constancy_scan(m, args.res).to_dict()
    elif op == "mollify":
        cfg = verify.ApproxCheckConfig(args.delta, args.eta, args.kernel_radius)
        min_jac, inj = verify.mollify_and_check(m, cfg, _point(args.lo), _point(args.hi), args.res)
        payload = {"minJac": min_jac, "injective": inj}
    else:
        payload = {"distortion": verify.distortion(m, _point(args.point))}
    _emit(args, payload, m.to_spec())


# -- parser ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="critlab", description="Critical-set experiments for second-gradient maps.")
    ap.add_argument("--threads", type=int, default=0, help="worker count (default: machine parallelism)")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, parent=sub, **kw):
        p = parent.add_parser(name, **kw)
        p.set_defaults(func=fn)
        return p

    p = add("classify", cmd_classify)
    for k in ("q", "a", "d"):
        p.add_argument(f"--{k}", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")

    p = add("sweep", cmd_sweep)
    p.add_argument("--n", type=int, required=True)
    for k in ("q", "a", "d"):
        p.add_argument(f"--{k}", required=True, help="value or lo:hi:step")
    p.add_argument("--out")

    for name, fn in (("eval", cmd_eval), ("diffcheck", cmd_diffcheck)):
        p = add(name, fn)
        p.add_argument("--map", required=True)
        p.add_argument("--point", required=True, help="comma-separated coordinates")
        p.add_argument("--out")
        if name == "diffcheck":
            p.add_argument("--step", type=float, default=1e-5)
            p.add_argument("--standoff", type=float, default=1e-4)

    cantor = sub.add_parser("cantor").add_subparsers(dest="cantor_command", required=True)
    p = add("build", cmd_cantor_build, cantor)
    p.add_argument("--n", type=int, default=2)
    for k in ("q", "a", "d"):
        p.add_argument(f"--{k}", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p = add("eval", cmd_cantor_eval, cantor)
    p.add_argument("--map", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--out")
    p = add("cells", cmd_cantor_cells, cantor)
    p.add_argument("--map", required=True)
    p.add_argument("--gen", type=int, required=True)
    p.add_argument("--out")

    p = add("energy", cmd_energy)
    p.add_argument("--map", required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-cells", dest="max_cells", type=int, default=2_000_000)
    p.add_argument("--numeric-generations", dest="numeric_generations", type=int, default=4)
    p.add_argument("--csv", help="per-generation table for the Cantor series")
    p.add_argument("--out")

    p = add("dimension", cmd_dimension)
    p.add_argument("--map", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--eps-c", dest="eps_c", type=float, default=1.0)
    p.add_argument("--eps-theta", dest="eps_theta", type=float, default=1.0)
    p.add_argument("--out")

    p = add("verify", cmd_verify)
    p.add_argument("op", choices=("injectivity", "degree", "signs", "mollify", "distortion"))
    p.add_argument("--map", required=True)
    p.add_argument("--res", type=int, default=256)
    p.add_argument("--point")
    p.add_argument("--lo")
    p.add_argument("--hi")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--kernel-radius", dest="kernel_radius", type=float, default=0.02)
    p.add_argument("--out")
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    args._argv = list(argv) if argv is not None else sys.argv[1:]
    args._t0 = time.perf_counter()
    if args.command == "verify" and args.op in ("degree", "distortion") and not args.point:
        ap.error(f"verify {args.op} needs --point")
    if args.command == "verify" and args.op == "mollify" and not (args.lo and args.hi):
        ap.error("verify mollify needs --lo and --hi")
    try:
        args.func(args)
    except BudgetExhausted as exc:
        print(f"critlab: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, ArithmeticError, json.JSONDecodeError, KeyError, FileNotFoundError) as exc:
        print(f"critlab: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
