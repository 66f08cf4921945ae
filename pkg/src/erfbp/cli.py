"""Command-line front end.

Subcommands: equilibria, stability, scan, resonance, routh, bifurcation,
integrate.  Exit codes: 0 success, 2 validation error, 3 numerical failure;
errors are reported as one JSON object on stderr.  A ``--config FILE`` of
``key = value`` lines supplies defaults (command-line flags win).  Outputs
are deterministic for identical flags: content is assembled in memory and
written atomically, floats at full round-trip precision.

``--reproduce NAME`` on scan/resonance (and fig2 on equilibria) runs a
preset that regenerates the data behind the corresponding figure-class
result; see README for the preset list.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io
from .equilibria import find_equilibria
from .errors import ErfbpError, NumericalError, ValidationError
from .integrator import integrate
from .labeling import label_equilibria
from .model import MassTriple, PhaseState, build_configuration
from .scan import (
    GridSpec,
    extract_bifurcation_curve,
    routh_curve,
    scan_simplex,
    stability_domain,
    trace_resonance_curve,
)
from .stability import stability_report

TRIO = ("L3", "L5", "L6")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"error": "ValidationError", "message": message}),
              file=sys.stderr)
        raise SystemExit(2)


def _mass_args(p):
    p.add_argument("--m1", type=float, default=None)
    p.add_argument("--m2", type=float, default=None)
    p.add_argument("--m3", type=float, default=None,
                   help="defaults to 1 - m1 - m2")
    p.add_argument("--degenerate-limit", action="store_true",
                   help="permit masses below the positivity floor")


def _masses(args):
    if args.m1 is None or args.m2 is None:
        raise ValidationError("--m1 and --m2 are required")
    try:
        return MassTriple.of(args.m1, args.m2, args.m3,
                             degenerate_limit=args.degenerate_limit)
    except ErfbpError:
        raise
    except Exception as exc:
        raise ValidationError(str(exc))


def _emit(args, content, default_name=None):
    if args.output and (default_name is None or os.path.isfile(args.output)
                        or not os.path.isdir(args.output)):
        io.write_text(args.output, content)
    elif args.output:
        io.write_text(os.path.join(args.output, default_name), content)
    else:
        sys.stdout.write(content)


def _emit_files(args, files):
    """Write a dict name -> content into the output directory."""
    outdir = args.output or "."
    os.makedirs(outdir, exist_ok=True)
    for name, content in sorted(files.items()):
        io.write_text(os.path.join(outdir, name), content)


def _labeled_set(masses, resolution, tol):
    s = find_equilibria(masses, resolution=resolution, tol=tol)
    try:
        return label_equilibria(s)
    except NumericalError:
        if masses.degenerate_limit:
            # at an exact zero-mass limit distinct families merge and the
            # labeling is genuinely ambiguous: report the points unlabeled
            return s
        raise


def _set_with_reports(args):
    masses = _masses(args)
    s = _labeled_set(masses, args.resolution, args.tol)
    reports = [stability_report(p, s.config) for p in s.points]
    return s, reports


def cmd_equilibria(args):
    if args.reproduce:
        if args.reproduce != "fig2":
            raise ValidationError("equilibria supports --reproduce fig2")
        files = {}
        for name, (m1, m2) in (("fig2a", (0.02, 0.015)), ("fig2b", (0.4, 0.35))):
            s = _labeled_set(MassTriple.of(m1, m2), args.resolution, args.tol)
            reports = [stability_report(p, s.config) for p in s.points]
            files[f"{name}.{args.format}"] = (
                io.equilibria_json(s, reports) if args.format == "json"
                else io.equilibria_csv(s, reports))
        _emit_files(args, files)
        return 0
    s, reports = _set_with_reports(args)
    content = (io.equilibria_json(s, reports) if args.format == "json"
               else io.equilibria_csv(s, reports))
    _emit(args, content, f"equilibria.{args.format}")
    return 0


def cmd_stability(args):
    s, reports = _set_with_reports(args)
    recs = []
    for p, r in zip(s.points, reports):
        if args.label and p.label != args.label:
            continue
        rec = {"label": p.label, "x": p.x, "y": p.y}
        rec.update(r.to_dict())
        recs.append(rec)
    if args.label and not recs:
        raise NumericalError(f"label {args.label} not present at these masses")
    _emit(args, io.to_json(recs), "stability.json")
    return 0


def _grid_from(args):
    if args.region == "simplex":
        return GridSpec.simplex(args.resolution)
    return GridSpec.region(args.region, args.resolution)


_SCAN_PRESETS = {
    "fig_reg1": dict(region="simplex", resolution=400, count=False, labels=()),
    "fig_zot1": dict(region="simplex", resolution=300, count=True, labels=()),
    "fig_cebolla1": dict(region="I", resolution=400, count=False, labels=TRIO),
    "fig_cebolla2": dict(region="III", resolution=400, count=False, labels=TRIO),
    "fig_simo": dict(region="I", resolution=400, count=False, labels=TRIO),
}


def cmd_scan(args):
    if args.reproduce:
        if args.reproduce not in _SCAN_PRESETS:
            raise ValidationError(
                f"scan presets: {', '.join(sorted(_SCAN_PRESETS))}")
        ps = _SCAN_PRESETS[args.reproduce]
        grid = (GridSpec.simplex(ps["resolution"]) if ps["region"] == "simplex"
                else GridSpec.region(ps["region"], ps["resolution"]))
        rmap = scan_simplex(grid, labels=ps["labels"], count=ps["count"],
                            scan_resolution=args.scan_resolution)
        files = {f"{args.reproduce}_map.csv": io.region_map_csv(rmap),
                 f"{args.reproduce}_summary.json": io.region_map_json(rmap)}
        if args.reproduce == "fig_reg1":
            for k, arc in enumerate(routh_curve()):
                files[f"fig_reg1_routh_{k}.csv"] = io.curve_csv(arc)
        if args.reproduce in ("fig_cebolla1", "fig_cebolla2", "fig_simo"):
            for lab in TRIO:
                _, curves = stability_domain(lab, grid)
                for k, c in enumerate(curves):
                    files[f"{args.reproduce}_boundary_{lab}_{k}.csv"] = io.curve_csv(c)
        _emit_files(args, files)
        return 0
    grid = _grid_from(args)
    labels = tuple(s for s in args.labels.split(",") if s) if args.labels else ()
    rmap = scan_simplex(grid, labels=labels, count=not args.no_count,
                        scan_resolution=args.scan_resolution)
    content = io.region_map_csv(rmap) if args.format == "csv" else io.region_map_json(rmap)
    _emit(args, content, f"scan.{args.format}")
    return 0


_RES_PRESETS = {
    "fig4L3": [("L3", r, reg) for r in ((1, 1), (2, 1), (3, 1)) for reg in ("I", "III")],
    "fig4L5": [("L5", r, reg) for r in ((1, 1), (2, 1), (3, 1)) for reg in ("I", "III")],
    "fig4L6": [("L6", r, reg) for r in ((1, 1), (2, 1), (3, 1)) for reg in ("I", "III")],
    "fig4LT": [(lab, r, "I") for lab in TRIO for r in ((1, 1), (2, 1), (3, 1))],
    "res-1-1": [(lab, (1, 1), reg) for lab in TRIO for reg in ("I", "III")],
}


def cmd_resonance(args):
    if args.reproduce:
        if args.reproduce not in _RES_PRESETS:
            raise ValidationError(
                f"resonance presets: {', '.join(sorted(_RES_PRESETS))}")
        files = {}
        for lab, (p, q), reg in _RES_PRESETS[args.reproduce]:
            grid = GridSpec.region(reg, args.resolution)
            for k, c in enumerate(trace_resonance_curve(lab, p, q, grid, tol=args.tol)):
                files[f"{args.reproduce}_{lab}_{p}-{q}_{reg}_{k}.csv"] = io.curve_csv(c)
        _emit_files(args, files)
        return 0
    try:
        p, q = (int(v) for v in args.ratio.split(":"))
    except Exception:
        raise ValidationError(f"bad ratio {args.ratio!r}, expected like 1:1 or 2:1")
    grid = _grid_from(args)
    curves = trace_resonance_curve(args.label, p, q, grid, tol=args.tol)
    if not curves:
        raise NumericalError(
            f"no {p}:{q} resonance of {args.label} inside region {args.region}")
    files = {f"resonance_{args.label}_{p}-{q}_{k}.csv": io.curve_csv(c)
             for k, c in enumerate(curves)}
    if args.output or len(files) > 1:
        _emit_files(args, files)
    else:
        sys.stdout.write(next(iter(files.values())))
    return 0


def cmd_routh(args):
    arcs = routh_curve(resolution=args.resolution)
    files = {f"routh_{k}.csv": io.curve_csv(a) for k, a in enumerate(arcs)}
    if args.output:
        _emit_files(args, files)
    else:
        for name in sorted(files):
            sys.stdout.write(files[name])
    return 0


def cmd_bifurcation(args):
    grid = GridSpec.simplex(args.resolution)
    rmap = scan_simplex(grid, count=True, scan_resolution=args.scan_resolution)
    curves = extract_bifurcation_curve(rmap, tol=args.tol,
                                       scan_resolution=args.scan_resolution)
    files = {f"bifurcation_{k}.csv": io.curve_csv(c) for k, c in enumerate(curves)}
    files["bifurcation_count_map.csv"] = io.region_map_csv(rmap)
    _emit_files(args, files)
    return 0


def cmd_integrate(args):
    masses = _masses(args)
    config = build_configuration(masses)
    state = PhaseState(args.x, args.y, args.vx, args.vy)
    sample_times = None
    if args.samples:
        sample_times = np.linspace(0.0, args.t_end, args.samples)
    traj = integrate(state, config, args.t_end, tol=args.tol,
                     sample_times=sample_times)
    _emit(args, io.trajectory_csv(traj), "trajectory.csv")
    print(f"termination={traj.termination} jacobi_drift={traj.jacobi_drift:.3e}",
          file=sys.stderr)
    return 0


def _build_parser():
    top = _Parser(prog="erfbp", description=__doc__,
                  formatter_class=argparse.RawDescriptionHelpFormatter)
    top.add_argument("--config", default=None, help="key = value defaults file")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output", default=None,
                       help="output file (or directory for multi-file commands)")
        p.add_argument("--seed", type=int, default=0,
                       help="RNG seed for sampling utilities (reserved)")

    p = sub.add_parser("equilibria", help="find and label all equilibria")
    _mass_args(p)
    p.add_argument("--resolution", type=int, default=400)
    p.add_argument("--tol", type=float, default=1e-11)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--reproduce", default=None)
    common(p)
    p.set_defaults(fn=cmd_equilibria)

    p = sub.add_parser("stability", help="stability report per labeled point")
    _mass_args(p)
    p.add_argument("--label", default=None)
    p.add_argument("--resolution", type=int, default=400)
    p.add_argument("--tol", type=float, default=1e-11)
    common(p)
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("scan", help="mass-simplex region map")
    p.add_argument("--region", choices=("simplex", "I", "II", "III"),
                   default="simplex")
    p.add_argument("--resolution", type=int, default=300)
    p.add_argument("--labels", default="",
                   help="comma-separated labels for per-cell stability")
    p.add_argument("--no-count", action="store_true")
    p.add_argument("--scan-resolution", type=int, default=200,
                   help="per-cell equilibrium search grid")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--reproduce", default=None)
    common(p)
    p.set_defaults(fn=cmd_scan)

    p = sub.add_parser("resonance", help="p:q resonance curve of a family")
    p.add_argument("--label", default="L6")
    p.add_argument("--ratio", default="1:1")
    p.add_argument("--region", choices=("simplex", "I", "II", "III"), default="I")
    p.add_argument("--resolution", type=int, default=400)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--reproduce", default=None)
    common(p)
    p.set_defaults(fn=cmd_resonance)

    p = sub.add_parser("routh", help="Routh critical curve arcs")
    p.add_argument("--resolution", type=int, default=1500)
    common(p)
    p.set_defaults(fn=cmd_routh)

    p = sub.add_parser("bifurcation", help="8/10 bifurcation boundary")
    p.add_argument("--resolution", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--scan-resolution", type=int, default=200)
    common(p)
    p.set_defaults(fn=cmd_bifurcation)

    p = sub.add_parser("integrate", help="integrate a trajectory")
    _mass_args(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--vx", type=float, default=0.0)
    p.add_argument("--vy", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--samples", type=int, default=0,
                   help="dense-output sample count (0: solver steps)")
    common(p)
    p.set_defaults(fn=cmd_integrate)
    return top


def _config_args(path, argv):
    """Turn a key = value file into pseudo-flags inserted after the command."""
    pairs = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"bad config line {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            pairs.extend([f"--{k.replace('_', '-')}", v])
    # insert after the subcommand token so command-line flags override
    for i, a in enumerate(argv):
        if not a.startswith("-") and i > 0:
            return argv[:i + 1] + pairs + argv[i + 1:]
    return argv + pairs


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if "--config" in argv:
            k = argv.index("--config")
            path = argv[k + 1]
            del argv[k:k + 2]
            argv = _config_args(path, argv)
        args = _build_parser().parse_args(argv)
        return args.fn(args)
    except SystemExit:
        raise
    except ValidationError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except ErfbpError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
