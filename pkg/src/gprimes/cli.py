"""Command-line front end: template checks, discretization, analytics,
zeta evaluation, verification, and report merging.

Every command is a pure function of its config and input files; outputs
carry the resolved configuration and contain no timestamps, so reruns
are byte-identical.  Exit codes: 0 all checks pass, 1 verification
failure, 2 configuration or I/O error.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import numsys, verify
from .discretize import ConstructionError, discretize, read_prime_system, \
    write_prime_system
from .quadrature import QuadratureError
from .templates import AtomicTemplate, OscillatingTemplate, TemplateError, \
    check_admissible_grid, resolve_template

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2


def _dump_json(doc, path=None):
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_x_grid(spec):
    """'log:LO:HI:PER_DECADE' or a comma-separated list of x values."""
    if spec.startswith("log:"):
        _, lo, hi, per = spec.split(":")
        lo, hi, per = float(lo), float(hi), float(per)
        n = max(2, int(round(per * math.log10(hi / lo))) + 1)
        return np.geomspace(lo, hi, n)
    return np.array([float(v) for v in spec.split(",")])


def _parse_t_grid(spec):
    return [float(v) for v in spec.split(",")]


def _echo(args, fields):
    cfg = {k: getattr(args, k) for k in fields if getattr(args, k, None) is not None}
    cfg["command"] = args.command
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_template_check(args):
    tmpl = resolve_template(args.template)
    x_max = args.x_max
    rng = np.random.Generator(np.random.Philox(key=np.array([12345, 0], dtype=np.uint64)))
    xs = np.sort(1.0 + (x_max - 1.0) * rng.random(512))
    F = np.atleast_1d(tmpl.eval(xs))
    monotone = bool(np.all(np.diff(F) >= -1e-12 * np.maximum(F[1:], 1.0)))

    quantile_ok = True
    max_roundtrip = 0.0
    total_c = tmpl.total_continuous_mass
    if total_c > 0.0:
        cap = total_c if math.isfinite(total_c) else \
            float(np.atleast_1d(tmpl.continuous_eval(x_max))[0])
        m = cap * rng.random(256)
        q = np.atleast_1d(tmpl.continuous_quantile_vec(m))
        back = np.atleast_1d(tmpl.continuous_eval(q))
        rel = np.abs(back - m) / np.maximum(m, 1.0)
        max_roundtrip = float(rel.max())
        quantile_ok = bool(max_roundtrip <= 1e-10)

    report = {
        "config": _echo(args, ("template", "x_max")),
        "template_id": tmpl.template_id,
        "monotone": monotone,
        "quantile_roundtrip_ok": quantile_ok,
        "max_quantile_roundtrip_rel": max_roundtrip,
        "chebyshev_C": tmpl.chebyshev_C(x_max),
    }
    if isinstance(tmpl, OscillatingTemplate):
        report["blocks_disjoint"] = tmpl.params.blocks_disjoint()
    if isinstance(tmpl, AtomicTemplate) and tmpl.positions.size > 2:
        t_grid = _parse_t_grid(args.t_grid)
        report["grid_admissibility"] = check_admissible_grid(tmpl.positions, t_grid)
    checks = [monotone, quantile_ok, report.get("blocks_disjoint", True),
              not report.get("grid_admissibility", {}).get("flagged", False)]
    report["passed"] = all(checks)
    _dump_json(report, args.output)
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAIL


def cmd_discretize(args):
    tmpl = resolve_template(args.template)
    ps = discretize(tmpl, args.seed, args.x_max, eps_mass=args.eps_mass)
    write_prime_system(ps, args.output)
    _dump_json({
        "config": _echo(args, ("template", "seed", "x_max", "eps_mass", "output")),
        "count": ps.count,
        "strictly_increasing": ps.strictly_increasing,
        "template_id": ps.template_id,
    })
    return EXIT_OK


def cmd_analyze(args):
    ps = read_prime_system(args.ps)
    xs = _parse_x_grid(args.x_grid)
    if np.any(xs > ps.x_max):
        raise ValueError(f"x grid exceeds cutoff {ps.x_max}")
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("x,pi,Pi,N,M,L\n")
        for x in np.sort(xs):
            row = (x, numsys.pi_count(ps, x), numsys.riemann_pi(ps, x),
                   numsys.N_count(ps, x), numsys.M_sum(ps, x), numsys.L_sum(ps, x))
            fh.write("{:.17g},{},{:.17g},{},{},{}\n".format(*row))
    _dump_json({"config": _echo(args, ("ps", "x_grid", "output")),
                "rows": int(xs.size)}, args.output + ".meta.json")
    return EXIT_OK


def cmd_zeta(args):
    ps = read_prime_system(args.ps)
    s = complex(args.s)
    C = None
    if args.template:
        C = resolve_template(args.template).chebyshev_C(ps.x_max)
    out = {"config": _echo(args, ("ps", "s", "method", "template")),
           "s": [s.real, s.imag]}
    if args.method in ("euler", "all"):
        z = numsys.zeta_euler(ps, s, chebyshev_C=C)
        out["euler"] = {"value": [z.value.real, z.value.imag],
                        "tail_bound": z.tail_bound, "truncation": z.truncation}
    if args.method in ("dirichlet", "all"):
        z = numsys.zeta_dirichlet(ps, s)
        out["dirichlet"] = {"value": [z.value.real, z.value.imag],
                            "tail_bound": z.tail_bound, "truncation": z.truncation}
    if args.method in ("z", "all"):
        r = numsys.Z_eval_report(ps, s)
        out["z"] = {"value": [r.value.real, r.value.imag],
                    "tail_estimate": r.tail_estimate, "truncation": r.truncation}
    _dump_json(out, args.output)
    return EXIT_OK


def cmd_verify(args):
    if args.check == "u0":
        u0 = verify.solve_u0()
        residual = abs(math.exp(u0) - 1.0 - u0 - u0 * u0)
        _dump_json({"u0": u0, "residual": residual})
        return EXIT_OK
    ps = read_prime_system(args.ps)
    tmpl = resolve_template(args.template)
    x_lo = args.x_lo
    x_hi = args.x_hi if args.x_hi is not None else ps.x_max
    xs = verify.default_x_grid(ps, x_lo, x_hi, per_decade=args.per_decade)
    ts = _parse_t_grid(args.t_grid)
    report = verify.deviation_sweep(ps, tmpl, xs, ts)

    count_bound = 1.0 if ps.strictly_increasing else 2.0
    count_dev = verify.count_deviation(ps, tmpl, 1.0, ps.x_max)
    count_ok = count_dev <= count_bound + 1e-9
    slope_ok = report.summary["slope"] <= args.slope_threshold

    summary = {
        "config": _echo(args, ("ps", "template", "t_grid", "x_lo", "x_hi",
                               "per_decade", "slope_threshold", "out_dir")),
        "count_deviation": count_dev,
        "count_bound": count_bound,
        "count_ok": bool(count_ok),
        "deviation": report.summary,
        "slope_ok": bool(slope_ok),
        "passed": bool(count_ok and slope_ok),
    }
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        report.to_csv(os.path.join(args.out_dir, "deviation.csv"))
        _dump_json(summary, os.path.join(args.out_dir, "summary.json"))
    _dump_json(summary)
    return EXIT_OK if summary["passed"] else EXIT_VERIFY_FAIL


def cmd_report(args):
    merged = {"inputs": {}}
    ok = True
    for path in args.inputs:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        merged["inputs"][os.path.basename(path)] = doc
        ok = ok and bool(doc.get("passed", True))
    merged["passed"] = ok
    for name, doc in merged["inputs"].items():
        state = "PASS" if doc.get("passed", True) else "FAIL"
        sys.stdout.write(f"{state}  {name}\n")
    _dump_json(merged, args.output)
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser():
    subparsers = {}
    top = argparse.ArgumentParser(prog="gprimes", description=__doc__)
    top.add_argument("--config", help="JSON file with option defaults")
    top.add_argument("--threads", type=int,
                     help="cap the kernel worker-thread count")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("template-check", help="validate a template definition")
    p.add_argument("--template")
    p.add_argument("--x-max", type=float, default=1e4)
    p.add_argument("--t-grid", default="0,1,10,100,1000")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_template_check)

    p = sub.add_parser("discretize", help="sample a prime system from a template")
    p.add_argument("--template")
    p.add_argument("--seed", type=int)
    p.add_argument("--x-max", type=float)
    p.add_argument("--eps-mass", type=float, default=1e-9)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("analyze", help="counting-function CSV over an x grid")
    p.add_argument("--ps")
    p.add_argument("--x-grid",
                   help="'log:LO:HI:PER_DECADE' or comma-separated values")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("zeta", help="zeta / log-zeta point evaluations")
    p.add_argument("--ps")
    p.add_argument("--s", help="complex point, e.g. '2' or '0.6+100j'")
    p.add_argument("--method", choices=("euler", "dirichlet", "z", "all"),
                   default="all")
    p.add_argument("--template", help="template supplying the growth certificate")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("verify", help="deviation sweep and counting bound")
    p.add_argument("--ps")
    p.add_argument("--template")
    p.add_argument("--t-grid", default="0,1,-1,10,-10,100,-100,1000,-1000")
    p.add_argument("--x-lo", type=float, default=10.0)
    p.add_argument("--x-hi", type=float)
    p.add_argument("--per-decade", type=int, default=32)
    p.add_argument("--slope-threshold", type=float, default=0.05)
    p.add_argument("--out-dir")
    p.add_argument("--check", choices=("u0",),
                   help="run a named standalone check instead of the sweep")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="merge verification summaries")
    p.add_argument("--inputs", nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)

    subparsers.update(sub.choices)
    return top, subparsers


def _apply_config(args, subparser):
    if not args.config:
        return args
    with open(args.config, "r", encoding="utf-8") as fh:
        defaults = json.load(fh)
    section = defaults.get(args.command, defaults)
    for key, value in section.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ValueError(f"config key {key!r} unknown for {args.command}")
        # command line wins over config: only fill parser-default values
        if getattr(args, attr) == subparser.get_default(attr):
            setattr(args, attr, value)
    return args


_REQUIRED = {
    "template-check": ("template",),
    "discretize": ("template", "seed", "x_max", "output"),
    "analyze": ("ps", "x_grid", "output"),
    "zeta": ("ps", "s"),
    "report": ("inputs",),
}


def main(argv=None):
    parser, subparsers = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, subparsers[args.command])
        if args.threads:
            from . import kernels
            if kernels.HAVE_NUMBA:
                import numba
                numba.set_num_threads(max(1, args.threads))
        for key in _REQUIRED.get(args.command, ()):
            if getattr(args, key) is None:
                flag = key.replace("_", "-")
                raise ValueError(f"{args.command} needs --{flag} "
                                 "(flag or config file)")
        if args.command == "verify" and not args.check:
            if not args.ps or not args.template:
                raise ValueError("verify needs --ps and --template (or --check)")
        return args.func(args)
    except (TemplateError, ConstructionError, QuadratureError, ValueError,
            OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
