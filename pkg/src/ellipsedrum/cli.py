"""Command-line interface: ``ellipsedrum {constants,eig,fit,relate,pipeline}``.

Every option may also come from a ``key = value`` config file (``--config``);
flags given on the command line win.  Exit status is 0 only on full success.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import mpmath

from . import datafile
from .mp_numerics import PrecisionContext, fundamental_constants
from .pipeline import (
    Family,
    Spacing,
    compute_eigenvalues,
    discover,
    eccentricity_grid,
    feasibility,
    fit_family,
    fit_report,
    relation_report,
)
from .relation import THRESHOLD, ConstantBasis, PrecisionTooLowError, RelationStatus, find_relation

log = logging.getLogger("ellipsedrum")

DEFAULTS: Dict[str, object] = {
    "digits": 30,
    "convention": "A",
    "spacing": "linear",
    "count": 1,
    "jobs": 1,
    "family": "maclaurin",
    "known": 0,
    "threshold": THRESHOLD,
    "decimals": 20,
    "ladder_step": 4,
    "safety_digits": 2,
    "distribution": "cheb",
    "basis": "pi^-3, pi^-1, pi, pi^3",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--digits", type=int, help="precision in significant digits (default 30)")
    p.add_argument("--config", help="key = value file supplying defaults for any flag")
    p.add_argument("--out", help="output file (data file for eig, report for fit/relate/pipeline)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")


def _grid_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("eccentricity grid")
    g.add_argument("--e", dest="e_list", help="comma-separated eccentricities (overrides start/stop/count)")
    g.add_argument("--start", help="first eccentricity")
    g.add_argument("--stop", help="last eccentricity")
    g.add_argument("--count", type=int, help="number of grid points")
    g.add_argument("--spacing", choices=[s.value for s in Spacing])
    p.add_argument("--convention", help="A (area pi) or Aprime (semi-major axis 1)")
    p.add_argument("--jobs", type=int, help="concurrent solves")
    s = p.add_argument_group("solver ladder")
    s.add_argument("--basis-size", type=int, help="first basis size M (default from the shape)")
    s.add_argument("--ladder-step", type=int, help="basis-size increment between rungs")
    s.add_argument("--safety-digits", type=int, help="digits held back from the rung agreement")
    s.add_argument("--distribution", choices=["cheb", "uniform"], help="boundary point distribution")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellipsedrum",
        description="Fundamental Dirichlet eigenvalue of the ellipse: solve, fit, recognise.",
    )
    _common(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print pi, j01 and rho = j01^2")
    _common(p)

    p = sub.add_parser("eig", help="compute eigenvalues on a grid into a data file (resumable)")
    _common(p)
    _grid_options(p)

    p = sub.add_parser("fit", help="fit series coefficients to a data file")
    _common(p)
    p.add_argument("--data", help="eigenvalue data file")
    p.add_argument("--family", choices=[f.value for f in Family])
    p.add_argument("--known", type=int, help="leading coefficients taken as exactly known")
    p.add_argument("--terms", type=int, help="unknown coefficients (default: one per record)")
    p.add_argument("--decimals", type=int, help="decimals in the human table")

    p = sub.add_parser("relate", help="search an integer relation for a number")
    _common(p)
    p.add_argument("--value", help="the number, as a decimal string")
    p.add_argument("--value-digits", type=int, help="trusted digits of the value (default: its length)")
    p.add_argument("--basis", help="comma-separated constants, e.g. 'pi^-3, 1/pi, pi, pi^3' or '1, rho'")
    p.add_argument("--threshold", type=int, help="matched digits required for Unambiguous")

    p = sub.add_parser("pipeline", help="fit, recognise, fold in, repeat")
    _common(p)
    _grid_options(p)
    p.add_argument("--data", help="eigenvalue data file (grid flags first extend it)")
    p.add_argument("--family", choices=[f.value for f in Family])
    p.add_argument("--known", type=int, help="leading coefficients taken as exactly known")
    p.add_argument("--threshold", type=int, help="matched digits required to accept a form")
    p.add_argument("--max-terms", type=int, help="stop after this many accepted forms")
    return parser


def _option_types(parser: argparse.ArgumentParser, command: str) -> Dict[str, object]:
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    types = {}
    for action in sub.choices[command]._actions:
        if action.dest != "help":
            types[action.dest] = action.type or str
    return types


def resolve_options(parser: argparse.ArgumentParser, argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse flags, then fill unset ones from the config file and then DEFAULTS."""
    args = parser.parse_args(argv)
    types = _option_types(parser, args.command)
    if args.config:
        for key, raw in datafile.read_config(args.config).items():
            dest = "e_list" if key == "e" else key
            if dest not in types or dest in ("config", "verbose"):
                raise SystemExit(f"error: unknown config key {key!r} for '{args.command}'")
            if getattr(args, dest, None) is None:
                setattr(args, dest, types[dest](raw) if callable(types[dest]) else raw)
    for key, value in DEFAULTS.items():
        if key in types and getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.digits is not None and args.digits < 10 and args.command != "constants":
        raise SystemExit("error: --digits must be at least 10")
    return args


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _emit(args, text: str) -> None:
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")


def cmd_constants(args) -> int:
    ctx = PrecisionContext(max(args.digits, 1))
    c = fundamental_constants(ctx)
    fields = [(name, mpmath.nstr(v, args.digits, min_fixed=-mpmath.inf, max_fixed=mpmath.inf))
              for name, v in (("pi", c.pi), ("j01", c.j01), ("rho", c.rho))]
    _emit(args, datafile.format_report([("digits", args.digits)] + fields))
    return 0


def _grid(args) -> List[str]:
    if args.e_list:
        grid = eccentricity_grid_from_list(args.e_list)
    elif args.start is not None:
        stop = args.stop if args.stop is not None else args.start
        grid = eccentricity_grid(args.start, stop, args.count, args.spacing)
    else:
        return []
    return grid


def eccentricity_grid_from_list(text: str) -> List[str]:
    items = [t.strip() for t in str(text).split(",") if t.strip()]
    out = [eccentricity_grid(t, t, 1)[0] for t in items]
    if len(set(out)) != len(out):
        raise ValueError("grid points are not distinct")
    return out


def _solver_options(args) -> dict:
    opts = {"ladder_step": args.ladder_step, "safety_digits": args.safety_digits,
            "point_distribution": args.distribution}
    if args.basis_size:
        opts["basis_size"] = args.basis_size
    return opts


def _run_grid(args, path) -> int:
    grid = _grid(args)
    if not grid:
        return 0
    _, failures = compute_eigenvalues(
        path, grid, args.convention, args.digits, jobs=args.jobs,
        solver_options=_solver_options(args), progress=lambda s: print(s, flush=True),
    )
    for e, err in failures:
        log.error("e=%s failed: %s", e, err)
    return 1 if failures else 0


def cmd_eig(args) -> int:
    if not args.out:
        raise SystemExit("error: eig needs --out for the data file")
    if not _grid(args):
        raise SystemExit("error: eig needs --e or --start/--stop/--count")
    return _run_grid(args, args.out)


def cmd_fit(args) -> int:
    if not args.data:
        raise SystemExit("error: fit needs --data")
    family = Family(args.family)
    records = datafile.read_records(args.data)
    fit = fit_family(records, family, args.known, args.terms)
    ctx = PrecisionContext(max(r.digits_claimed for r in records) + datafile.LAMBDA_GUARD)
    _emit(args, fit_report(fit, family, ctx, args.decimals))
    return 0


def cmd_relate(args) -> int:
    if args.value is None:
        raise SystemExit("error: relate needs --value")
    value = args.value.strip()
    digits = args.value_digits or sum(ch.isdigit() for ch in value.lstrip("+-0.").split("e")[0].split("E")[0])
    basis = ConstantBasis.parse(args.basis)
    ctx = PrecisionContext(max(digits, 10) + 10)
    try:
        rel = find_relation(ctx.mpf(value), digits, basis, ctx, threshold=args.threshold)
    except PrecisionTooLowError as exc:
        raise SystemExit(f"error: {exc}")
    _emit(args, relation_report(rel, value, digits))
    return 0 if rel.status is RelationStatus.UNAMBIGUOUS else 1


def cmd_pipeline(args) -> int:
    if not args.data:
        raise SystemExit("error: pipeline needs --data")
    status = _run_grid(args, args.data) if _grid(args) else 0
    family = Family(args.family)
    records = datafile.read_records(args.data)
    lines = []
    if records:
        ctx = PrecisionContext(max(r.digits_claimed for r in records) + datafile.LAMBDA_GUARD)
        bound = feasibility(records, family, ctx)
        lines.append("feasibility: " + ", ".join(f"{k}={v}" for k, v in bound.items()))
    result = discover(records, family, known_terms=args.known, threshold=args.threshold, max_terms=args.max_terms)
    lines += result.lines
    fields = [("family", family.value), ("accepted", len(result.accepted))]
    for d in result.accepted:
        fields.append((f"c[{d.nu}]", d.relation.display()))
        fields.append((f"matched[{d.nu}]", d.matched))
    fields.append(("stop", result.stop_reason))
    text = datafile.format_report(fields) + "\n" + "".join(line + "\n" for line in lines)
    _emit(args, text)
    if result.error:
        return 1
    return status


COMMANDS = {
    "constants": cmd_constants,
    "eig": cmd_eig,
    "fit": cmd_fit,
    "relate": cmd_relate,
    "pipeline": cmd_pipeline,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = resolve_options(parser, argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, ArithmeticError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
