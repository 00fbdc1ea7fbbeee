"""Command-line front door: classify / schedule / predict / coarea / validate /
example / mellin-check.

Exit codes: 0 ok, 1 input error, 2 numerical refusal (divergence, unsupported
case), 3 validation failure.
"""
from __future__ import annotations

import argparse
import cmath
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import expansion, fixtures, germ as germ_mod, oracle, sphere
from .brackets import mellin_oscillatory
from .errors import (ConvergenceError, DivergenceError, FiberAsymError,
                     InputError, UnsupportedCaseError, WrongCaseError)

REFUSALS = (DivergenceError, UnsupportedCaseError, WrongCaseError,
            ConvergenceError)


def _load_spec(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read spec {path}: {exc}",
                         module="cli", operation="load_spec")
    if "germ" not in obj:
        raise InputError("spec is missing the 'germ' entry",
                         module="cli", operation="load_spec")
    return obj


def _spec_germ(spec):
    return germ_mod.germ_from_json(spec["germ"])


def _spec_symbol(spec, n):
    sym = spec.get("symbol", {"t": "cauchy", "x": "gaussian"})
    return fixtures.make_symbol(sym.get("t", "cauchy"), sym.get("x", "gaussian"),
                                x0=tuple(sym.get("x0", [0.0] * n)),
                                x_params=sym.get("params"))


def _spec_geometry(spec, germ):
    geo_cfg = spec.get("geometry", {})
    order = int(geo_cfg.get("rule_order", 4096 if germ.n == 2 else 160))
    kind = geo_cfg.get("kind", "auto")
    seed = geo_cfg.get("seed", 0)
    rule = sphere.build_rule(germ.n, order, kind=kind, seed=seed)
    return expansion.GeometryConfig(rule=rule,
                                    bandwidth=geo_cfg.get("bandwidth"))


def _emit(obj, args, default_name):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / default_name).write_text(text + "\n")
    print(text)


def cmd_classify(args):
    spec = _load_spec(args.spec)
    g = _spec_germ(spec)
    tol = spec.get("tolerances", {})
    cls = germ_mod.classify(g, eps_def=tol.get("eps_def", 1e-8),
                            eps_grad=tol.get("eps_grad", 1e-6),
                            seed=args.seed)
    _emit(cls.to_json(), args, "classification.json")
    if cls.case == germ_mod.UNSUPPORTED:
        raise UnsupportedCaseError("germ classified Unsupported",
                                   module="cli", operation="classify")
    return 0


def cmd_schedule(args):
    if args.spec:
        spec = _load_spec(args.spec)
        g = _spec_germ(spec)
        n, k = g.n, g.k
    elif args.n is not None and args.k is not None:
        n, k = args.n, args.k
    else:
        raise InputError("schedule needs either --spec or both --n and --k",
                         module="cli", operation="schedule")
    terms = expansion.pole_schedule(n, k, args.count)
    lines = ["num,den,logpower"]
    lines += [f"{t.exponent.numerator},{t.exponent.denominator},{t.logpower}"
              for t in terms]
    text = "\n".join(lines)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "schedule.csv").write_text(text + "\n")
    print(text)
    return 0


def _predict(spec, args):
    g = _spec_germ(spec)
    symbol = _spec_symbol(spec, g.n)
    cls = germ_mod.classify(g)
    geo = _spec_geometry(spec, g)
    return g, symbol, cls, expansion.predict_leading(g, symbol, cls, geo)


def cmd_predict(args):
    spec = _load_spec(args.spec)
    _, _, _, pred = _predict(spec, args)
    _emit(pred.to_json(), args, "prediction.json")
    return 0


def cmd_coarea(args):
    spec = _load_spec(args.spec)
    g = _spec_germ(spec)
    geo = _spec_geometry(spec, g)
    samples = g.eval_fk(geo.rule.nodes)
    lo, hi = float(samples.min()), float(samples.max())
    pad = 0.05 * (hi - lo)
    grid = np.linspace(lo - pad, hi + pad, 801)
    density = sphere.coarea_density(g, grid, geo.rule, geo.bandwidth)
    lines = ["w,lvol"]
    lines += [f"{float(w)!r},{float(v)!r}"
              for w, v in zip(density.w_grid, density.values)]
    text = "\n".join(lines)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "coarea.csv").write_text(text + "\n")
    print(text)
    return 0


def run_validation(g, symbol, f_full, box, z_grid, threshold, kind="singular",
                   expected=None, quad=None):
    """predict + oracle + fit comparison; shared by validate and example."""
    if kind == "regular":
        predicted = expansion.regular_leading(f_full, symbol, box=box)
        samples = oracle.sample_curve(f_full, symbol, z_grid, box, quad)
        basis = [(1, 0), (2, 0), (3, 0)]
        fit = oracle.fit_asymptotics(samples, basis, len(basis))
        fitted, stderr = fit.coefficient_for(1, 0)
        lead_desc = {"num": 1, "den": 1, "logpower": 0}
    else:
        cls = germ_mod.classify(g)
        pred = expansion.predict_leading(g, symbol, cls)
        lead = pred.leading
        samples = oracle.sample_curve(f_full, symbol, z_grid, box, quad)
        schedule = expansion.pole_schedule(g.n, g.k, 4)
        fit = oracle.fit_asymptotics(samples, schedule, 4)
        fitted, stderr = fit.coefficient_for(lead.exponent, lead.logpower)
        predicted = lead.coefficient
        lead_desc = {"num": lead.exponent.numerator,
                     "den": lead.exponent.denominator,
                     "logpower": lead.logpower}
    gap = abs(fitted - predicted) / max(abs(predicted), 1e-300)
    result = {
        "schema": 1,
        "leading": lead_desc,
        "predicted": predicted,
        "fitted": fitted,
        "stderr": stderr,
        "relative_gap": gap,
        "pass": bool(gap < threshold),
        "samples": [{"z": s.z, "value": s.value, "error": s.error,
                     "evals": s.evals} for s in samples],
    }
    if expected is not None:
        result["reference"] = expected
    return result


def cmd_validate(args):
    spec = _load_spec(args.spec)
    g = _spec_germ(spec)
    symbol = _spec_symbol(spec, g.n)
    ocfg = spec.get("oracle", {})
    box = float(ocfg.get("box", 4.0))
    z_grid = np.geomspace(ocfg.get("z_min", args.z_min),
                          ocfg.get("z_max", args.z_max),
                          int(ocfg.get("z_points", args.z_points)))
    f_full = lambda x: g.eval_full(np.asarray(x))
    result = run_validation(g, symbol, f_full, box, z_grid, args.tolerance)
    _emit(result, args, "validation.json")
    return 0 if result["pass"] else 3


def cmd_example(args):
    fx = fixtures.get_fixture(args.name)
    result = run_validation(fx.germ, fx.symbol, fx.f_full, fx.box, fx.z_grid,
                            args.tolerance, kind=fx.kind,
                            expected=fx.expected_leading)
    _emit(result, args, f"example-{fx.name}.json")
    return 0 if result["pass"] else 3


def cmd_mellin_check(args):
    xi = 0.5
    got = mellin_oscillatory(xi, "+")
    want = cmath.exp(1j * math.pi * xi / 2.0) * math.gamma(xi)
    resid = abs(got - want)
    _emit({"schema": 1, "xi": xi,
           "computed": [got.real, got.imag],
           "identity": [want.real, want.imag],
           "residual": resid}, args, "mellin-check.json")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="fiberasym",
        description="Asymptotics of degenerate fiber integrals: classify, "
                    "predict, and validate against a numerical oracle.")
    p.add_argument("--out", help="directory for emitted JSON/CSV files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=0.05,
                   help="relative gap threshold for validate/example")
    p.add_argument("--z-min", type=float, default=1e2)
    p.add_argument("--z-max", type=float, default=1e6)
    p.add_argument("--z-points", type=int, default=9)
    p.add_argument("--quad-order", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify")
    sp.add_argument("--spec", required=True)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("schedule")
    sp.add_argument("--spec")
    sp.add_argument("--n", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--count", type=int, default=6)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("predict")
    sp.add_argument("--spec", required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("coarea")
    sp.add_argument("--spec", required=True)
    sp.set_defaults(func=cmd_coarea)

    sp = sub.add_parser("validate")
    sp.add_argument("--spec", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("example")
    sp.add_argument("name", choices=sorted(fixtures.FIXTURES))
    sp.set_defaults(func=cmd_example)

    sp = sub.add_parser("mellin-check")
    sp.set_defaults(func=cmd_mellin_check)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except REFUSALS as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except FiberAsymError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
