"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 numerical non-convergence,
4 partial sweep failure.  The sweep worker count is read from the
SPINGRAD_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bath import NonConvergenceError
from .materials import ConfigurationError, preset
from .scenario import (CONFIG_SCHEMA, Scenario, run_scenario, validate,
                       write_result)
from .sweep import SweepSpec, run_sweep
from .figures import RECIPES, run_figure

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3
EXIT_PARTIAL = 4


def _load_json(path):
    return json.loads(Path(path).read_text())


def _apply_overrides(doc, args):
    if args.method:
        doc["method"] = args.method
    if args.protocol:
        doc["protocol"] = args.protocol
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.frame:
        doc["frame"] = args.frame
    return doc


def cmd_simulate(args) -> int:
    doc = _apply_overrides(_load_json(args.config), args)
    problems = validate(doc, allow_large=args.allow_large)
    if problems:
        for p in problems:
            print(f"validation: {p}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        result = run_scenario(Scenario.from_dict(doc),
                              allow_large=args.allow_large)
    except NonConvergenceError as err:
        print(f"non-convergence: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    outdir = Path(args.out)
    csv_path = write_result(result, outdir)
    if args.dump_fields:
        _dump_fields(doc, args.dump_fields, args.allow_large)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {csv_path} (wall time {result.wall_time_s:.2f} s"
          + (f", M = {result.m_used}" if result.m_used else "") + ")")
    return EXIT_OK


def _dump_fields(doc, path, allow_large):
    """Debug dump of the per-site effective fields on the scenario grid."""
    from .closed_forms import field_provider
    from .geometry import build_site_table
    sc = Scenario.from_dict(doc)
    mat, geom, field = (sc.resolved_material(), sc.resolved_geometry(),
                        sc.resolved_field())
    sites = build_site_table(geom, mat, field, seed=sc.seed,
                             species_mode=sc.species_mode)
    tau = sc.times()
    t = tau if sc.protocol == "fid" else tau / 2.0
    provider = field_provider(sc.protocol)
    b = field.b(mat.g_factor)
    with open(path, "w") as fh:
        fh.write("k,t_s,h_x,h_y,h_z\n")
        for k in range(min(len(sites), 200)):   # first sites only: debug aid
            hx, hy, hz = provider(sites.coupling[k], sites.gyro[k],
                                  sites.bx[k], b, t)
            for i, ti in enumerate(t):
                fh.write(f"{k},{ti:.9g},{hx[i]:.9g},{hy[i]:.9g},{hz[i]:.9g}\n")


def cmd_timescales(args) -> int:
    from .analysis import build_report
    doc = _load_json(args.config)
    problems = validate(doc, allow_large=True)
    if problems:
        for p in problems:
            print(f"validation: {p}", file=sys.stderr)
        return EXIT_VALIDATION
    sc = Scenario.from_dict(doc)
    report = build_report(sc.resolved_material(), sc.resolved_geometry(),
                          sc.resolved_field(),
                          horizon_s=float(sc.times()[-1]))
    doc_out = report.to_dict()
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "timescales.json").write_text(
            json.dumps(doc_out, indent=2, sort_keys=True, default=str))
    _print_report_table(doc_out)
    return EXIT_OK


def _fmt(v, unit=""):
    if v is None:
        return "n/a"
    if isinstance(v, float) and not np.isfinite(v):
        return str(v)
    return f"{v:.4g}{unit}"


def _print_report_table(rep: dict):
    rows = [
        ("T2_grad (free evolution)", _fmt(rep["t2_grad_s"], " s")),
        ("T2e_grad (echo, quartic)", _fmt(rep["t2e_grad_s"], " s")),
        ("T2M_grad (echo, Markovian)", _fmt(rep["t2m_grad_s"], " s")),
        ("B_c (motional averaging)", _fmt(rep["B_c_T"], " T")),
        ("delta_Bx_M (Markov crossover)", _fmt(rep["delta_Bx_markov_T"], " T")),
        ("B_min (leading-order validity)", _fmt(rep["magnus"]["b_min_T"], " T")),
        ("t_crit (advisory)", _fmt(rep["magnus"]["t_crit_s"], " s")),
        ("field limit", rep["magnus"]["limit"]),
        ("N^(1/4), N^(1/8)", f"{rep['gaussian']['ratio_fid']:.3g}, "
                             f"{rep['gaussian']['ratio_he']:.3g}"),
        ("motional criterion ok", str(rep["gaussian"]["motional_ok"])),
    ]
    if rep["leakage_plateau"] is not None:
        rows += [("leakage plateau", _fmt(rep["leakage_plateau"])),
                 ("leakage onset", _fmt(rep["leakage_onset_s"], " s")),
                 ("leakage trust horizon", _fmt(rep["leakage_horizon_s"], " s"))]
    width = max(len(r[0]) for r in rows)
    for name, val in rows:
        print(f"  {name:<{width}}  {val}")
    for note in rep["notes"]:
        print(f"  note: {note}")


def cmd_validate(args) -> int:
    if args.print_schema:
        print(json.dumps(CONFIG_SCHEMA, indent=2, sort_keys=True))
        if not args.config:
            return EXIT_OK
    problems = validate(_load_json(args.config), allow_large=args.allow_large)
    if problems:
        for p in problems:
            print(f"validation: {p}", file=sys.stderr)
        return EXIT_VALIDATION
    print("configuration is valid")
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc = _load_json(args.config)
    try:
        spec = SweepSpec.from_dict(doc)
        if args.out:
            spec.outdir = args.out
        outcome = run_sweep(spec, allow_large=args.allow_large)
    except ConfigurationError as err:
        print(f"validation: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"wrote {outcome['summary_path']} "
          f"({len(outcome['rows'])} entries, {outcome['n_failed']} failed)")
    return EXIT_PARTIAL if outcome["n_failed"] else EXIT_OK


def cmd_figure(args) -> int:
    try:
        manifest = run_figure(args.recipe, args.out, seed=args.seed,
                              allow_large=args.allow_large,
                              ref_data=args.ref_data)
    except ConfigurationError as err:
        print(f"validation: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except NonConvergenceError as err:
        print(f"non-convergence: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    print(f"recipe {args.recipe}: {len(manifest['series'])} series -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spingrad",
        description="electron-spin coherence in a nuclear bath under a "
                    "transverse field gradient")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--method", choices=["exact", "magnus_gaussian",
                                        "magnus_nongaussian", "short_time"])
    p.add_argument("--protocol", choices=["fid", "hahn"])
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int)
    p.add_argument("--frame", choices=["rotating", "lab"])
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--dump-fields", metavar="PATH")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("timescales", help="analytic timescales and thresholds")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_timescales)

    p = sub.add_parser("validate", help="check a configuration")
    p.add_argument("--config")
    p.add_argument("--print-schema", action="store_true")
    p.add_argument("--allow-large", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--allow-large", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="run a named figure recipe")
    p.add_argument("--recipe", required=True, choices=sorted(RECIPES))
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--ref-data", action="append", metavar="PATH",
                   help="external comparison curve to copy through (fig2a)")
    p.set_defaults(func=cmd_figure)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        from .scenario import DEFAULT_SEED
        args.seed = DEFAULT_SEED
    try:
        return args.func(args)
    except ConfigurationError as err:
        print(f"validation: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
