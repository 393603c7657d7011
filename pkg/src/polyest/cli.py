"""Command line interface for error-model reduction, estimation and simulation.

Subcommands
-----------
reduce     Reduce a per-gate error model JSON to the six scalar rates.
estimate   Logical X/Z rates at one distance from a database plus a model.
solve      Smallest distance reaching a target logical rate.
generate   Fill or extend a rate database CSV by Monte Carlo.
simulate   One direct Monte Carlo run at explicit reduced rates.
curve      Interpolated rate-versus-p2 table for d = 3..6.

Results go to stdout; warnings, progress and errors go to stderr.  Exit code
0 means success, 1 invalid input (bad flags, malformed files, missing
database entries), 2 a well-formed computation with no answer (above
threshold, scan cap exceeded, undefined ratios).  The POLYEST_DB environment
variable supplies a default for --db.  Output is deterministic: the same
argv and seed produce byte-identical results.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__
from .error_model import ModelError, load_model, reduce
from .estimator import (
    ComputationError,
    MissingEntryError,
    estimate,
    interpolate,
    solve_distance,
)
from .matcher import build_graphs, dump_edge_classes
from .ratedb import (
    AXES,
    DISTANCES,
    DbError,
    GridSpec,
    RateDatabase,
    format_value,
    generate,
    ladder_values,
)
from .surface_sim import Rates, enumerate_single_faults, get_layout, run_monte_carlo

DB_ENV_VAR = "POLYEST_DB"

_WARNING_TEXT = {
    "clamped": "query clamped to the database axis range",
    "low_confidence": "a database entry carries fewer than 100 failures",
    "asymmetric_cnot": "cnot channel asymmetry exceeds the threshold; rates were balanced",
    "above_threshold": "rates do not decrease with distance",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Argparse exits with status 2 on bad flags; invalid input is exit 1 here,
    # so usage problems are rethrown and handled in main.
    def error(self, message):
        raise _UsageError(message)


def _warn(codes) -> None:
    for code in sorted(codes):
        text = _WARNING_TEXT.get(code, code)
        print(f"warning: {code}: {text}", file=sys.stderr)


def _json_value(v: float):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _fit_json(f):
    if f is None:
        return None
    return {"x": f.x, "y": f.y, "C": f.coeff_odd, "D": f.coeff_even}


def _open_db(args) -> RateDatabase:
    path = args.db or os.environ.get(DB_ENV_VAR)
    if not path:
        raise _UsageError(f"--db is required (or set {DB_ENV_VAR})")
    return RateDatabase.load(path)


def _cmd_reduce(args) -> int:
    model = load_model(args.model)
    rr = reduce(model, asymmetry_threshold=args.asymmetry_threshold)
    warnings = ["asymmetric_cnot"] if rr.asymmetry_warning else []
    _warn(warnings)
    if args.json:
        print(json.dumps({
            "p0x": rr.p0x, "p0z": rr.p0z,
            "p1x": rr.p1x, "p1z": rr.p1z,
            "p2x": rr.p2x, "p2z": rr.p2z,
            "asym_x": _json_value(rr.asym_x), "asym_z": _json_value(rr.asym_z),
            "warnings": warnings,
        }, indent=2))
    else:
        for name in ("p0x", "p0z", "p1x", "p1z", "p2x", "p2z", "asym_x", "asym_z"):
            print(f"{name} = {getattr(rr, name)!r}")
    return 0


def _cmd_estimate(args) -> int:
    db = _open_db(args)
    model = load_model(args.model)
    result = estimate(
        db, model, args.distance, asymmetry_threshold=args.asymmetry_threshold
    )
    _warn(result.warnings)
    if args.json:
        print(json.dumps({
            "d": result.d,
            "p_xl": result.p_xl,
            "p_zl": result.p_zl,
            "warnings": list(result.warnings),
            "fit_x": _fit_json(result.fit_x),
            "fit_z": _fit_json(result.fit_z),
        }, indent=2))
    else:
        print(f"p_xl = {result.p_xl!r}")
        print(f"p_zl = {result.p_zl!r}")
    return 0


def _cmd_solve(args) -> int:
    db = _open_db(args)
    model = load_model(args.model)
    result = solve_distance(
        db, model, args.target, asymmetry_threshold=args.asymmetry_threshold
    )
    _warn(result.warnings)
    if args.json:
        print(json.dumps({
            "d": result.d,
            "p_xl": result.p_xl,
            "p_zl": result.p_zl,
            "warnings": list(result.warnings),
            "fit_x": _fit_json(result.fit_x),
            "fit_z": _fit_json(result.fit_z),
        }, indent=2))
    else:
        print(result.d)
    return 0


def _cmd_generate(args) -> int:
    if args.grid == "full":
        grid = GridSpec.full()
    elif args.grid == "desk":
        grid = GridSpec.desk()
    else:
        with open(args.grid, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as err:
                raise DbError(f"grid spec {args.grid}: {err}") from None
        grid = GridSpec.from_dict(data)
    if os.path.exists(args.out):
        db = RateDatabase.load(args.out)
        print(f"extending {args.out} ({len(db)} entries present)", file=sys.stderr)
    else:
        db = RateDatabase()
    db.metadata["seed"] = str(args.seed)
    db.metadata["target_fails"] = str(args.target_fails)
    db.metadata["max_shots"] = str(args.max_shots)
    added, skipped = generate(
        db, grid, args.seed,
        target_fails=args.target_fails, max_shots=args.max_shots,
        progress=lambda msg: print(msg, file=sys.stderr),
    )
    db.save(args.out)
    print(
        f"wrote {args.out}: {len(added)} added, {len(skipped)} skipped, "
        f"{len(db)} total",
        file=sys.stderr,
    )
    return 0


def _cmd_simulate(args) -> int:
    rates = Rates(
        p0x=args.p0x, p0z=args.p0z, p1x=args.p1x, p1z=args.p1z, p2=args.p2
    )
    rates.validate()
    layout = get_layout(args.distance)
    faults = enumerate_single_faults(layout)
    graphs = build_graphs(faults, rates, layout)
    if args.dump_graph:
        rows = dump_edge_classes(graphs[0]) + dump_edge_classes(graphs[1])
        with open(args.dump_graph, "w", encoding="utf-8") as fh:
            fh.write("node_a,node_b,weight,mask\n")
            for a, b, w, m in rows:
                fh.write(f"{a},{b},{w!r},{m}\n")
        print(f"wrote edge classes to {args.dump_graph}", file=sys.stderr)
    result = run_monte_carlo(
        layout, rates, args.shots, args.rounds, args.seed, graphs=graphs
    )
    print(",".join([
        str(args.distance),
        repr(rates.p0x), repr(rates.p0z), repr(rates.p1x), repr(rates.p1z),
        repr(rates.p2),
        str(result.shots), str(result.rounds),
        str(result.fails_x), str(result.fails_z),
        repr(result.p_xl), repr(result.p_zl),
        repr(result.stderr_x), repr(result.stderr_z),
    ]))
    return 0


def _cmd_curve(args) -> int:
    db = _open_db(args)
    if args.model and (args.r0 is not None or args.r1 is not None):
        raise _UsageError("give either --model or explicit --r0/--r1, not both")
    if args.model:
        rr = reduce(load_model(args.model))
        p0 = rr.p0x if args.kind == "x" else rr.p0z
        p1 = rr.p1x if args.kind == "x" else rr.p1z
        p2 = rr.p2x if args.kind == "x" else rr.p2z
        if p2 == 0.0:
            raise ComputationError(
                "model has zero p2; the ratio axes are undefined for a curve"
            )
        r0 = p0 / p2
        r1 = p1 / p2
    else:
        r0 = args.r0 if args.r0 is not None else 1.0
        r1 = args.r1 if args.r1 is not None else 1.0
    axis_lo, axis_hi = AXES["p2"]
    lo = max(args.p2_min, axis_lo)
    hi = min(args.p2_max, axis_hi)
    print("p2," + ",".join(f"d{d}" for d in DISTANCES))
    warnings: set[str] = set()
    if lo <= hi:
        for p2 in ladder_values(lo, hi):
            try:
                values = [
                    interpolate(db, d, r0, r1, p2, args.kind, warnings)
                    for d in DISTANCES
                ]
            except MissingEntryError as err:
                print(f"skipping p2={format_value(p2)}: {err}", file=sys.stderr)
                continue
            print(format_value(p2) + "," + ",".join(repr(v) for v in values))
    _warn(warnings)
    return 0


def _add_model_flag(sub) -> None:
    sub.add_argument("--model", required=True, help="per-gate error model JSON file")


def _add_common_estimation(sub) -> None:
    sub.add_argument("--db", help=f"rate database CSV (default: ${DB_ENV_VAR})")
    _add_model_flag(sub)
    sub.add_argument(
        "--asymmetry-threshold", type=float, default=2.0,
        help="cnot asymmetry ratio above which a warning is raised (default 2)",
    )
    sub.add_argument("--json", action="store_true", help="emit JSON instead of text")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="polyest",
        description="Surface code logical error rate estimation tools.",
    )
    parser.add_argument(
        "--version", action="version", version=f"polyest {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="reduce a gate error model to six rates")
    _add_model_flag(p)
    p.add_argument(
        "--asymmetry-threshold", type=float, default=2.0,
        help="cnot asymmetry ratio above which a warning is raised (default 2)",
    )
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("estimate", help="logical rates at one distance")
    _add_common_estimation(p)
    p.add_argument("--distance", type=int, required=True, help="code distance (>= 3)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("solve", help="smallest distance reaching a target rate")
    _add_common_estimation(p)
    p.add_argument(
        "--target", type=float, required=True,
        help="target per-round logical rate, e.g. 1e-20",
    )
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("generate", help="fill or extend a rate database CSV")
    p.add_argument(
        "--grid", required=True,
        help="grid spec: 'full', 'desk', or a JSON file with distances/r0/r1/p2",
    )
    p.add_argument("--out", required=True, help="database CSV to create or extend")
    p.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    p.add_argument(
        "--target-fails", type=int, default=100,
        help="failure count per type to stop at (default 100)",
    )
    p.add_argument(
        "--max-shots", type=int, default=200_000,
        help="shot budget per grid point (default 200000)",
    )
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("simulate", help="one Monte Carlo run at explicit rates")
    p.add_argument("--distance", type=int, required=True, help="code distance (>= 3)")
    p.add_argument("--p0x", type=float, required=True)
    p.add_argument("--p0z", type=float, required=True)
    p.add_argument("--p1x", type=float, required=True)
    p.add_argument("--p1z", type=float, required=True)
    p.add_argument("--p2", type=float, required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument(
        "--dump-graph", metavar="PATH",
        help="also write the aggregated edge classes of both graphs as CSV",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("curve", help="rate versus p2 table for d = 3..6")
    p.add_argument("--db", help=f"rate database CSV (default: ${DB_ENV_VAR})")
    p.add_argument("--model", help="take r0/r1 from this model's reduction")
    p.add_argument("--r0", type=float, help="explicit r0 ratio (default 1)")
    p.add_argument("--r1", type=float, help="explicit r1 ratio (default 1)")
    p.add_argument("--kind", choices=("x", "z"), default="x")
    p.add_argument("--p2-min", type=float, default=AXES["p2"][0])
    p.add_argument("--p2-max", type=float, default=AXES["p2"][1])
    p.set_defaults(func=_cmd_curve)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ComputationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ModelError, DbError, MissingEntryError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())
