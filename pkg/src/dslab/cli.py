"""Command-line front end.

Subcommands ``ds-verify``, ``inequality``, ``arnold`` and ``gl2r`` write
CSV (default) or JSON tables into ``--out``.  Every file starts with a
header giving the tool version, the full flag line, the seed and the
worker count.  Exit codes: 0 success, 1 failed verification, 2 bad flags.
"""
from __future__ import annotations

import argparse
import json
import math
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, arnold, gl2r, verify
from .errors import DSLabError, ModulusTie, Singular

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    seed: int
    workers: int
    samples: int
    output_dir: Path
    format: str
    argv: list

    def header(self) -> dict:
        return {"version": __version__, "argv": " ".join(shlex.quote(a) for a in self.argv),
                "seed": self.seed, "workers": self.workers}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_table(cfg: RunConfig, name: str, columns: list, rows) -> Path:
    """Write ``rows`` (iterables matching ``columns``) as ``name.csv`` or
    ``name.json`` under the output directory."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.output_dir / f"{name}.{cfg.format}"
    rows = [list(r) for r in rows]
    if cfg.format == "json":
        doc = {"header": cfg.header(), "columns": columns,
               "rows": [[_jsonable(v) for v in r] for r in rows]}
        path.write_text(json.dumps(doc, indent=1) + "\n")
        return path
    lines = [f"# {k}: {v}" for k, v in cfg.header().items()]
    lines.append(",".join(columns))
    lines.extend(",".join(_fmt(v) for v in r) for r in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_reports(cfg: RunConfig, name: str, reports) -> Path:
    """One row per report; columns are the union of the report fields and extras."""
    dicts = [r.as_dict() for r in reports]
    cols = list(dict.fromkeys(k for d in dicts for k in d))
    return write_table(cfg, name, cols, [[d.get(k) for k in cols] for d in dicts])


def _parse_matrix(args, parser) -> np.ndarray:
    if args.matrix_file:
        try:
            M = np.loadtxt(args.matrix_file, dtype=complex, delimiter=",", ndmin=2)
        except (OSError, ValueError) as e:
            parser.error(f"cannot read --matrix-file: {e}")
        if np.all(M.imag == 0):
            M = M.real
    elif args.matrix:
        try:
            diag = [complex(x.replace(" ", "")) for x in args.matrix.split(",")]
        except ValueError:
            parser.error("--matrix must be a comma separated list of numbers")
        diag = np.array(diag)
        if np.all(diag.imag == 0):
            diag = diag.real
        M = np.diag(diag)
    else:
        parser.error("one of --matrix or --matrix-file is required")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        parser.error("matrix must be square")
    if getattr(args, "dim", None) and M.shape[0] != args.dim:
        parser.error(f"matrix has dimension {M.shape[0]}, --dim says {args.dim}")
    return M


def _config(args) -> RunConfig:
    return RunConfig(args.seed, args.workers, getattr(args, "samples", 0),
                     Path(args.out), args.format, args._argv)


# --------------------------------------------------------------------------
# subcommands

def cmd_ds_verify(args, parser) -> int:
    cfg = _config(args)
    if args.field == "real2":
        if not args.matrix:
            parser.error("--field real2 needs --matrix a")
        try:
            a = float(args.matrix)
        except ValueError:
            parser.error("--field real2 takes a single value --matrix a")
        if args.negdet:
            if not 0 < a < 1:
                parser.error("--negdet needs 0 < a < 1")
            reports = [gl2r.verify_ds_gl2r_negdet(a, args.samples, args.seed,
                                                  workers=args.workers)]
        else:
            if not a > 0 or a == 1:
                parser.error("a must be positive and different from 1")
            reports = [gl2r.verify_ds_gl2r_posdet(a, args.samples, args.seed)]
    else:
        A = _parse_matrix(args, parser)
        test = args.test or ("cp" if A.shape[0] == 2 else "flag")
        reports = []
        if test in ("cp", "all"):
            reports.append(verify.verify_ds_property_cp(A, args.samples, args.seed,
                                                        workers=args.workers))
        if test in ("flag", "all"):
            reports.extend(verify.verify_ds_property_flag(A, args.samples, rng=args.seed,
                                                          workers=args.workers))
    write_reports(cfg, "report", reports)
    for r in reports:
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} (estimate {r.estimate:.6g})")
    return EXIT_OK if all(r.passed and r.valid for r in reports) else EXIT_FAIL


def cmd_inequality(args, parser) -> int:
    cfg = _config(args)
    A = _parse_matrix(args, parser)
    d = A.shape[0]
    if not 1 <= args.k <= d:
        parser.error("--k must lie in [1, dim]")
    r = verify.estimate_inequality(A, args.field, args.k, args.f, args.samples,
                                   args.seed, workers=args.workers)
    e = r.extras
    write_table(cfg, "inequality",
                ["field", "dim", "k", "f", "lhs", "rhs", "gap", "se", "c_implied",
                 "bound_gap", "bound_se"],
                [[args.field, d, args.k, args.f, e["lhs"], e["rhs"], r.estimate,
                  r.std_error, e["c_implied"], e["bound_gap"], e["bound_se"]]])
    print(f"lhs {e['lhs']:.6g} rhs {e['rhs']:.6g} gap {r.estimate:.3g} +- {r.std_error:.2g}")
    return EXIT_OK


_PLOT = """\
# gnuplot script; run as: gnuplot -p plot.gp
set datafile separator ','
set key autotitle columnhead
set multiplot layout 2,1
set title 'rotation curves'
set xlabel 'x'
set ylabel 'c'
plot {curves}
set title 'hyperbolic density H and elliptic leftover E'
set ylabel 'density'
plot 'obstruction.csv' using 2:3 with steps title 'H', \\
     'obstruction.csv' using 2:4 with steps title 'E'
unset multiplot
"""


def cmd_arnold(args, parser) -> int:
    if not 0 < args.eps < arnold.EPS_MAX:
        parser.error("--eps must lie in (0, 1/(2 pi))")
    if not 1 <= args.qmax <= 12:
        parser.error("--qmax must lie in [1, 12]")
    cfg = _config(args)
    tongues = arnold.tongues_up_to(args.eps, args.qmax)
    write_table(cfg, "tongues", ["p", "q", "c_lo", "c_hi", "measure"],
                [[t.p, t.q, t.c_lo, t.c_hi, t.measure] for t in tongues])
    curves = []
    for t in tongues:
        cv = arnold.trace_rotation_curve(args.eps, t.p, t.q, args.grid, tongue=t)
        curves.append(cv)
        write_table(cfg, f"curves_{t.p}_{t.q}", ["x", "c", "dcdx", "stability"],
                    zip(cv.x, cv.c, cv.dcdx, cv.stability))
    H = arnold.hyperbolic_density(curves, args.bins)
    write_table(cfg, "hyperbolic_density", ["bin", "x", "density"],
                zip(range(args.bins), H.centers, H.values))
    E = arnold.elliptic_leftover(args.eps, args.params, args.iters, args.bins, args.seed)
    write_table(cfg, "leftover", ["bin", "x", "leftover"],
                zip(range(args.bins), E.centers, E.values))
    rep = arnold.obstruction_check(args.eps, args.qmax, args.bins, leftover=E,
                                   x_grid_size=args.grid)
    viol = set(rep.violation_bins)
    write_table(cfg, "obstruction", ["bin", "x", "H", "E", "violation"],
                [[i, H.centers[i], rep.H.values[i], E.values[i], i in viol]
                 for i in range(args.bins)])
    curve_plots = ", \\\n     ".join(
        f"'curves_{t.p}_{t.q}.{cfg.format}' using 1:2 with lines title '{t.p}/{t.q}'"
        for t in tongues)
    if cfg.format == "csv":
        (cfg.output_dir / "plot.gp").write_text(
            "".join(f"# {k}: {v}\n" for k, v in cfg.header().items())
            + _PLOT.format(curves=curve_plots))
    print(f"tongues: {len(tongues)}, elliptic fraction {1 - E.total_mass:.4f}, "
          f"violation bins: {len(viol)}")
    return EXIT_OK


def cmd_gl2r(args, parser) -> int:
    cfg = _config(args)
    a = args.a
    gen = np.random.default_rng(args.seed)
    if args.mode == "negdet-cdf":
        if not 0 < a < 1:
            parser.error("negdet-cdf needs 0 < a < 1")
        theta = gen.uniform(0, 2 * math.pi, args.samples)
        M = gl2r.rotation(theta) @ np.diag([a, -1.0 / a])
        rho = np.sort(gl2r.spectral_radius_2x2(M))
        tr = np.sort((a - 1.0 / a) * np.cos(theta))
        grid = np.linspace(1.0, 1.0 / a, args.grid)
        emp = np.searchsorted(rho, grid, side="right") / rho.size
        ana = gl2r.negdet_rho_cdf(a, grid)
        paper = gl2r.negdet_rho_cdf(a, grid, paper_form=True)
        write_table(cfg, "rho_cdf", ["rho", "analytic", "empirical", "paper_form"],
                    zip(grid, ana, emp, paper))
        span = 1.0 / a - a
        tg = np.linspace(-span, span, args.grid)
        temp = np.searchsorted(tr, tg, side="right") / tr.size
        write_table(cfg, "trace_cdf", ["t", "analytic", "empirical", "paper_form"],
                    zip(tg, gl2r.negdet_trace_cdf(a, tg), temp,
                        gl2r.negdet_trace_cdf(a, tg, paper_form=True)))
        sup = float(np.max(np.abs(ana - emp)))
        tol = max(0.005, 3.0 / math.sqrt(args.samples))
        print(f"sup |F_X - empirical| = {sup:.3g} (tolerance {tol:.3g})")
        return EXIT_OK if sup < tol else EXIT_FAIL
    if args.mode == "posdet-average":
        if not a > 0 or a == 1:
            parser.error("a must be positive and different from 1")
        r = gl2r.verify_ds_gl2r_posdet(a, args.samples, args.seed)
        write_reports(cfg, "report", [r])
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} (sup distance {r.estimate:.3g})")
        return EXIT_OK if r.passed else EXIT_FAIL
    if args.mode == "rho-norm":
        A = np.diag([a, 1.0 / a]) if a > 0 else np.diag([-a, 1.0 / a])
        reps = [gl2r.rho_norm_equality(A, f, allow_negdet=True) for f in ("log", "id")]
        write_table(cfg, "rho_norm", ["f", "lhs", "rhs", "gap", "pass"],
                    [[f, r.extras["lhs"], r.extras["rhs"], r.estimate, r.passed]
                     for f, r in zip(("log", "id"), reps)])
        for f, r in zip(("log", "id"), reps):
            print(f"f={f}: lhs {r.extras['lhs']:.9g} rhs {r.extras['rhs']:.9g}")
        return EXIT_OK
    # acip
    if not a > 0:
        parser.error("a must be positive")
    A = gl2r.rotation(args.theta) @ np.diag([a, 1.0 / a])
    if gl2r.classify(A) != gl2r.ELLIPTIC:
        parser.error("R_theta diag(a, 1/a) is not elliptic for these --a/--theta")
    ac = gl2r.acip_of_matrix(A)
    v = np.array([1.0, 0.0])
    w = np.empty(args.samples)
    for i in range(args.samples):
        v = A @ v
        v /= np.linalg.norm(v)
        w[i] = math.atan2(v[1], v[0])
    w = np.mod(w + math.pi / 2, math.pi) - math.pi / 2
    hist, edges = np.histogram(w, bins=args.bins, range=(-math.pi / 2, math.pi / 2))
    centers = 0.5 * (edges[1:] + edges[:-1])
    emp = hist / w.size * args.bins
    ana = ac.density_angle(centers)
    write_table(cfg, "acip", ["angle", "analytic", "empirical"], zip(centers, ana, emp))
    print(f"alpha = {ac.alpha:.6g}; sup density gap {np.max(np.abs(ana - emp)):.3g}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

def _common(p, samples=None):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    if samples is not None:
        p.add_argument("--samples", type=int, default=samples)


def _matrix_flags(p):
    p.add_argument("--dim", type=int)
    p.add_argument("--matrix", help="comma separated diagonal entries")
    p.add_argument("--matrix-file", help="CSV file with a full square matrix")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dslab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"dslab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ds-verify", help="check the Haar averaging property")
    p.add_argument("--field", choices=("complex", "real2"), default="complex")
    _matrix_flags(p)
    p.add_argument("--negdet", action="store_true",
                   help="real2: use R_theta diag(a, -1/a)")
    p.add_argument("--test", choices=("cp", "flag", "all"))
    _common(p, samples=100_000)
    p.set_defaults(func=cmd_ds_verify)

    p = sub.add_parser("inequality", help="estimate exponent versus volume means")
    p.add_argument("--field", choices=("complex", "real"), default="complex")
    _matrix_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--f", choices=("id", "log"), default="log")
    _common(p, samples=100_000)
    p.set_defaults(func=cmd_inequality)

    p = sub.add_parser("arnold", help="Arnold family experiment")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--qmax", type=int, default=3)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--params", type=int, default=10_000)
    p.add_argument("--iters", type=int, default=100_000)
    p.add_argument("--grid", type=int, default=20_000, help="x grid for rotation curves")
    _common(p)
    p.set_defaults(func=cmd_arnold)

    p = sub.add_parser("gl2r", help="GL(2, R) comparisons")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--mode", choices=("negdet-cdf", "posdet-average", "rho-norm", "acip"),
                   required=True)
    p.add_argument("--theta", type=float, default=1.0, help="acip: rotation angle")
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--bins", type=int, default=50)
    _common(p, samples=100_000)
    p.set_defaults(func=cmd_gl2r)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = argv
    sub = parser._subparsers._group_actions[0].choices[args.command]
    if getattr(args, "samples", 1) < 1 or args.workers < 1:
        sub.error("--samples and --workers must be positive")
    try:
        return args.func(args, sub)
    except DSLabError as e:
        print(f"dslab: {e}", file=sys.stderr)
        # degenerate input matrices count as bad flags, numerical trouble as failure
        bad_input = isinstance(e, (ValueError, ModulusTie, Singular))
        return EXIT_USAGE if bad_input else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
