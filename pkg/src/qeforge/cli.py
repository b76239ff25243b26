"""Command-line front door: scenario verification, curvature tables,
eigenspace-dimension scans and the scenario ODE integrator.

Exit codes: 0 success, 1 verification failure, 2 parse/configuration error,
3 evaluation singularity.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import affine, duality
from .errors import ParseError, QeforgeError, SingularityError
from .extensions import extension_from_json
from .sampling import Box
from .tensors import CurvaturePack, MetricField
from .verifier import TolProfile, build_scenario, scenario_registry

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_SINGULAR = 3


# -- deterministic JSON ----------------------------------------------------------


def format_float(x: float, sig: int = 17) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        return f'"{x!r}"'
    text = f"{float(x):.{sig}g}"
    return text


def json_dumps(obj, sig: int = 17) -> str:
    """JSON with sorted keys and fixed-significand floats, so identical
    inputs produce byte-identical reports."""
    out = []

    def emit(o):
        if o is None:
            out.append("null")
        elif isinstance(o, bool):
            out.append("true" if o else "false")
        elif isinstance(o, (int, np.integer)):
            out.append(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            out.append(format_float(float(o), sig))
        elif isinstance(o, str):
            out.append(json.dumps(o))
        elif isinstance(o, dict):
            out.append("{")
            for i, key in enumerate(sorted(o)):
                if i:
                    out.append(",")
                out.append(json.dumps(str(key)))
                out.append(":")
                emit(o[key])
            out.append("}")
        elif isinstance(o, (list, tuple, np.ndarray)):
            seq = o.tolist() if isinstance(o, np.ndarray) else o
            out.append("[")
            for i, item in enumerate(seq):
                if i:
                    out.append(",")
                emit(item)
            out.append("]")
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(obj)
    return "".join(out)


def _write_output(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


# -- verify ----------------------------------------------------------------------


def _report_text(report) -> str:
    lines = [f"scenario {report.scenario}: "
             f"{'PASS' if report.aggregate else 'FAIL'}"]
    cfg = report.config
    lines.append(f"  points={cfg['points']} seed={cfg['seed']} "
                 f"order={cfg['order']} tol={cfg['tol']}")
    if report.notes:
        lines.append(f"  notes: {report.notes}")
    names = sorted({k for rec in report.points for k in rec.residuals})
    for name in names:
        values = [rec.residuals[name] for rec in report.points
                  if name in rec.residuals]
        ok = all(rec.verdicts.get(name, True) for rec in report.points)
        lines.append(f"  {name:24s} max {max(values):.6g}   "
                     f"{'pass' if ok else 'FAIL'}")
    return "\n".join(lines)


def cmd_verify(args) -> int:
    params: dict = {}
    points, seed, order = args.points, args.seed, args.order
    scenario_id = args.scenario
    tol = TolProfile()
    if args.scenario_file:
        with open(args.scenario_file, encoding="utf-8") as fh:
            spec = json.load(fh)
        scenario_id = spec.get("scenario", scenario_id)
        params.update(spec.get("params", {}))
        if "box" in spec:
            params["box"] = spec["box"]
        points = spec.get("points", points)
        seed = spec.get("seed", seed)
        for key, value in spec.get("tol", {}).items():
            setattr(tol, key, float(value))
    if scenario_id is None:
        print("error: provide --scenario or --scenario-file", file=sys.stderr)
        return EXIT_CONFIG
    if args.kappa is not None:
        params["kappa"] = args.kappa
    if args.mu is not None:
        params["mu"] = args.mu
    if args.tol_residual is not None:
        tol.residual = args.tol_residual
    if args.tol_identity is not None:
        tol.identity = args.tol_identity
    scenario = build_scenario(scenario_id, params)
    report = scenario.run(points=points, seed=seed, order=order, tol=tol)
    if args.json is not None:
        _write_output(json_dumps(report.to_dict()), args.json)
        if args.format == "text":
            print(_report_text(report))
    elif args.format == "json":
        _write_output(json_dumps(report.to_dict()), None)
    else:
        print(_report_text(report))
    return EXIT_OK if report.aggregate else EXIT_VERIFICATION


# -- curvature -------------------------------------------------------------------


def _load_metric(path: str) -> MetricField:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("kind", "explicit") == "explicit":
        coords = obj.get("coords", ["x1", "x2", "x1p", "x2p"])
        box = (Box.from_dict(obj["domain"], coords)
               if "domain" in obj else None)
        return MetricField.from_exprs(
            coords, obj["components"], params=obj.get("params"),
            orientation=obj.get("orientation", 1), box=box,
            name=obj.get("name", "metric"))
    return extension_from_json(obj)


def _metric_points(metric: MetricField, args):
    if args.point:
        pts = []
        for text in args.point:
            p = np.array([float(tok) for tok in text.split(",")])
            if p.shape[0] != metric.dim:
                raise ValueError(
                    f"point {text!r} has {p.shape[0]} components, "
                    f"metric dimension is {metric.dim}")
            pts.append(p)
        return pts
    box = metric.box or Box([(0.5, 1.5)] * metric.dim)
    return box.sample(args.points, seed=args.seed)


def cmd_curvature(args) -> int:
    metric = _load_metric(args.metric)
    pts = _metric_points(metric, args)
    rows = []
    for p in pts:
        pack = CurvaturePack(metric, p, order=args.order)
        row = {
            "point": [float(x) for x in p],
            "tau": pack.tau,
            "gamma": pack.gamma,
            "riemann": pack.riemann,
            "ricci": pack.ricci,
            "weyl": pack.weyl,
        }
        if metric.dim == 4:
            wb = duality.weyl_blocks(pack, p)
            row["w_plus"] = wb["W_plus_norm"]
            row["w_minus"] = wb["W_minus_norm"]
        if args.order >= 3 and metric.dim >= 3:
            row["cotton"] = pack.cotton
        rows.append(row)
    if args.json is not None or args.format == "json":
        _write_output(json_dumps({"metric": metric.name, "points": rows}),
                      args.json)
    else:
        print(f"metric {metric.name}  ({len(rows)} points)")
        header = f"{'point':40s} {'tau':>12s} {'W+':>12s} {'W-':>12s}"
        print(header)
        for row in rows:
            pt = ",".join(f"{x:.4g}" for x in row["point"])
            wp = row.get("w_plus", float("nan"))
            wm = row.get("w_minus", float("nan"))
            print(f"{pt:40s} {row['tau']:12.6g} {wp:12.6g} {wm:12.6g}")
    return EXIT_OK


# -- eigdim ----------------------------------------------------------------------


def _parse_mu_range(text: str):
    try:
        lo, hi, step = (float(tok) for tok in text.split(":"))
    except ValueError:
        raise ValueError(f"--mu-range expects lo:hi:step, got {text!r}") from None
    if step <= 0:
        raise ValueError("--mu-range step must be positive")
    values = []
    mu = lo
    while mu <= hi + 1e-12:
        values.append(round(mu, 12))
        mu += step
    return values


def cmd_eigdim(args) -> int:
    with open(args.surface, encoding="utf-8") as fh:
        obj = json.load(fh)
    surface = affine.surface_from_json(obj)
    if args.point:
        point = np.array([float(tok) for tok in args.point.split(",")])
    else:
        point = np.array([0.5 * (lo + hi) for lo, hi in surface.box.bounds])
    if args.mu_range:
        mus = _parse_mu_range(args.mu_range)
    elif args.mu is not None:
        mus = [args.mu]
    else:
        raise ValueError("provide --mu or --mu-range")
    rows = []
    prev_dim = None
    for mu in mus:
        res = affine.dim_E(surface, point, mu, prolong_order=args.prolong_order)
        jump = prev_dim is not None and res.dim_E != prev_dim
        prev_dim = res.dim_E
        rows.append({
            "mu": mu, "dim_E": res.dim_E, "rank": res.rank,
            "singular_values": [float(s) for s in res.singular_values],
            "indeterminate": res.indeterminate, "jump": bool(jump),
        })
    if args.json is not None or args.format == "json":
        _write_output(json_dumps({
            "surface": surface.name,
            "point": [float(x) for x in point],
            "rows": rows,
        }), args.json)
    else:
        print(f"surface {surface.name} at point "
              f"({', '.join(f'{x:.4g}' for x in point)})")
        print(f"{'mu':>10s} {'dim':>4s} {'rank':>5s}  singular values")
        for row in rows:
            mark = " <-- dim jump" if row["jump"] else ""
            flag = " (indeterminate)" if row["indeterminate"] else ""
            svals = ", ".join(f"{s:.3e}" for s in row["singular_values"])
            print(f"{row['mu']:10.4g} {row['dim_E']:4d} {row['rank']:5d}  "
                  f"[{svals}]{flag}{mark}")
    return EXIT_OK


# -- ode -------------------------------------------------------------------------


def cmd_ode(args) -> int:
    init = tuple(float(tok) for tok in args.init.split(","))
    if args.ode == "e26":
        if len(init) != 3:
            raise ValueError("e26 needs --init gamma,gamma',gamma''")
        rhs = affine.e26_rhs(args.mu)
    else:
        if len(init) != 2:
            raise ValueError("fhat needs --init f,f'")
        v_field = affine.ScalarField(args.v, ("x1",))
        rhs = affine.fhat_rhs(args.mu, v_field)
    traj = affine.ode_rk4(rhs, args.t0, init, args.t1, args.steps)
    header = "t," + ",".join(f"y{k}" for k in range(traj.y.shape[1]))
    lines = [header]
    for t, y in zip(traj.t, traj.y):
        lines.append(",".join([format_float(t, 17)]
                              + [format_float(v, 17) for v in y]))
    _write_output("\n".join(lines), args.csv)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qeforge",
        description="quasi-Einstein geometry verification engine")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification scenario")
    v.add_argument("--scenario", help="built-in scenario id "
                                      f"({', '.join(sorted(scenario_registry()))})")
    v.add_argument("--scenario-file", help="scenario JSON file")
    v.add_argument("--points", type=int, default=16)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--order", type=int, default=3, choices=(2, 3, 4))
    v.add_argument("--kappa", type=float, default=None)
    v.add_argument("--mu", type=float, default=None)
    v.add_argument("--tol-residual", type=float, default=None)
    v.add_argument("--tol-identity", type=float, default=None)
    v.add_argument("--json", metavar="PATH", nargs="?", const="-",
                   default=None, help="write the JSON report (default stdout)")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("curvature", help="curvature tables for a metric file")
    c.add_argument("--metric", required=True)
    c.add_argument("--point", action="append",
                   help="comma-separated point (repeatable)")
    c.add_argument("--points", type=int, default=4)
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--order", type=int, default=3, choices=(2, 3, 4))
    c.add_argument("--json", metavar="PATH", nargs="?", const="-", default=None)
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.set_defaults(func=cmd_curvature)

    e = sub.add_parser("eigdim", help="eigenspace-dimension scan over mu")
    e.add_argument("--surface", required=True, help="surface JSON file")
    e.add_argument("--mu", type=float, default=None)
    e.add_argument("--mu-range", help="lo:hi:step")
    e.add_argument("--point", help="comma-separated surface point")
    e.add_argument("--prolong-order", type=int, default=4,
                   choices=(2, 3, 4, 5, 6),
                   help="prolongation order for the constraint system")
    e.add_argument("--json", metavar="PATH", nargs="?", const="-", default=None)
    e.add_argument("--format", choices=("text", "json"), default="text")
    e.set_defaults(func=cmd_eigdim)

    o = sub.add_parser("ode", help="integrate a scenario ODE, emit CSV")
    o.add_argument("--ode", choices=("e26", "fhat"), required=True)
    o.add_argument("--mu", type=float, required=True)
    o.add_argument("--t0", type=float, required=True)
    o.add_argument("--t1", type=float, required=True)
    o.add_argument("--init", required=True, help="comma-separated initial data")
    o.add_argument("--steps", type=int, default=1024)
    o.add_argument("--v", default="0", help="v(x1) expression for fhat")
    o.add_argument("--csv", metavar="PATH", default=None)
    o.set_defaults(func=cmd_ode)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularityError as err:
        print(f"singular evaluation: {err}", file=sys.stderr)
        return EXIT_SINGULAR
    except QeforgeError as err:
        print(f"evaluation failed: {err}", file=sys.stderr)
        return EXIT_SINGULAR
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
