"""Batch eigenvalue runs, fit and relation reports, and the discovery loop.

These are the workhorses behind the command-line interface; each takes plain
arguments so it can be driven from scripts and tests as well.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath

from . import datafile
from .closed_forms import ASYMPTOTIC, MACLAURIN, LaurentForm
from .eigensolver import MAX_ECCENTRICITY, SolverConfig, solve_fundamental
from .geometry import Convention, EigenvalueRecord, EllipseShape
from .mp_numerics import PrecisionContext
from .relation import (
    THRESHOLD,
    ConstantBasis,
    IntegerRelation,
    RelationStatus,
    asymptotic_ansatz,
    find_relation,
    maclaurin_ansatz,
    reconstruct_and_verify,
)
from .series import SeriesFit, SeriesModel, fit_interpolating, model_points

log = logging.getLogger(__name__)


class Family(enum.Enum):
    MACLAURIN = "maclaurin"
    ASYMPTOTIC = "asymptotic"

    @property
    def convention(self) -> Convention:
        return Convention.CONSTANT_AREA if self is Family.MACLAURIN else Convention.CONSTANT_SEMI_MAJOR

    @property
    def table(self) -> dict:
        return MACLAURIN if self is Family.MACLAURIN else ASYMPTOTIC

    @property
    def first_index(self) -> int:
        return 0 if self is Family.MACLAURIN else -2

    def power(self, nu: int) -> int:
        return 2 * nu if self is Family.MACLAURIN else nu

    def known(self, count: int) -> List[Tuple[int, LaurentForm]]:
        """(power, exact form) for the first ``count`` tabulated coefficients."""
        return [(self.power(nu), self.table[nu]) for nu in range(self.first_index, self.first_index + count)]

    def model(self, n_unknown: int, known: Sequence[Tuple[int, object]] = ()) -> SeriesModel:
        """Square model: ``known`` exact terms followed by ``n_unknown`` free ones."""
        total = len(known) + n_unknown
        if self is Family.MACLAURIN:
            base = SeriesModel.maclaurin(total, 0)
        else:
            base = SeriesModel.asymptotic(-2 + total - 1, 0)
        return base.with_known(known)


class Spacing(enum.Enum):
    LINEAR = "linear"
    GEOMETRIC = "geometric"


# ---------------------------------------------------------------------------
# grids and batch solves
# ---------------------------------------------------------------------------

def _plain(d: Decimal) -> str:
    text = format(d.normalize(), "f")
    return text if text not in ("-0", "") else "0"


def eccentricity_grid(start, stop, count: int, spacing=Spacing.LINEAR) -> List[str]:
    """``count`` eccentricities from ``start`` to ``stop`` as plain decimal strings.

    Geometric spacing is geometric in e for grids below 1/2 and geometric in
    1 - e (so nearly geometric in the stretch factor) for grids near 1.
    """
    spacing = Spacing(spacing) if not isinstance(spacing, Spacing) else spacing
    if count < 1:
        raise ValueError("grid count must be positive")
    with localcontext() as dc:
        dc.prec = 30
        a, b = Decimal(str(start)), Decimal(str(stop))
        if count == 1:
            values = [a]
        elif spacing is Spacing.LINEAR:
            step = (b - a) / (count - 1)
            values = [a + step * i for i in range(count)]
        else:
            near_one = max(a, b) >= Decimal("0.5")
            lo, hi = ((1 - a), (1 - b)) if near_one else (a, b)
            if lo <= 0 or hi <= 0:
                raise ValueError("geometric spacing needs endpoints strictly inside (0, 1)")
            ratio = (hi / lo).ln() / (count - 1)
            pts = [(lo.ln() + ratio * i).exp() for i in range(count)]
            pts[0], pts[-1] = lo, hi
            with localcontext() as d2:
                d2.prec = 10
                pts = [+p for p in pts]
            values = [1 - p for p in pts] if near_one else pts
    out = [_plain(v) for v in values]
    if len(set(out)) != len(out):
        raise ValueError("grid points are not distinct")
    for v in out:
        if not 0 <= Decimal(v) <= Decimal(str(MAX_ECCENTRICITY)):
            raise ValueError(f"grid point {v} outside [0, {MAX_ECCENTRICITY}]")
    return out


def _solve_point(args) -> Tuple[str, Optional[str], Optional[str]]:
    e, convention, digits, options = args
    try:
        config = SolverConfig(target_digits=digits, **options)
        rec = solve_fundamental(EllipseShape(e, convention), config, PrecisionContext(digits + 5))
        return e, datafile.format_record(rec), None
    except Exception as exc:  # reported per point; the batch carries on
        return e, None, f"{type(exc).__name__}: {exc}"


def compute_eigenvalues(
    path,
    grid: Sequence[str],
    convention,
    digits: int,
    jobs: int = 1,
    solver_options: Optional[dict] = None,
    progress: Callable[[str], None] = print,
) -> Tuple[List[EigenvalueRecord], List[Tuple[str, str]]]:
    """Solve the missing grid points and merge them into the data file at ``path``.

    A point is skipped when the file already has a record for the same e and
    convention claiming at least ``digits``.  The file is rewritten
    atomically after every finished point, so an interrupted run resumes
    where it stopped.  Returns (all records, failures).
    """
    convention = Convention.parse(convention)
    path = Path(path)
    text = path.read_text(encoding="utf-8") if path.exists() else ""
    records, comments = datafile.loads(text)

    def have(e: str) -> bool:
        target = mpmath.mpf(e)
        return any(
            mpmath.mpf(r.shape.e) == target and r.convention is convention and r.digits_claimed >= digits
            for r in records
        )

    todo = [e for e in grid if not have(e)]
    progress(f"{len(grid) - len(todo)} of {len(grid)} points already present; computing {len(todo)}")
    failures: List[Tuple[str, str]] = []
    options = solver_options or {}
    tasks = [(e, convention.value, digits, options) for e in todo]

    def merge(e, line, err):
        if err is not None:
            failures.append((e, err))
            progress(f"e={e}: FAILED {err}")
            return
        rec = datafile.parse_record(line)
        target = mpmath.mpf(e)
        records[:] = [r for r in records if not (mpmath.mpf(r.shape.e) == target and r.convention is convention)]
        records.append(rec)
        datafile.write_records(path, records, comments)
        meta = rec.solver_meta
        progress(f"e={e}: {rec.digits_claimed} digits (M={meta.basis_size}, N={meta.collocation_count})")

    if jobs <= 1 or len(tasks) <= 1:
        for t in tasks:
            merge(*_solve_point(t))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_solve_point, t) for t in tasks]
            for fut in as_completed(futures):
                merge(*fut.result())
    if not path.exists():
        datafile.write_records(path, records, comments)
    return sorted(records, key=datafile.sort_key), failures


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def _fit_context(records: Sequence[EigenvalueRecord], digits: Optional[int] = None) -> PrecisionContext:
    if digits is None:
        digits = max(r.digits_claimed for r in records) + datafile.LAMBDA_GUARD
    return PrecisionContext(max(10, digits), 20)


def family_records(records: Sequence[EigenvalueRecord], family: Family) -> List[EigenvalueRecord]:
    """Records under the family's convention (others are ignored)."""
    return [r for r in records if r.convention is family.convention]


def fit_family(
    records: Sequence[EigenvalueRecord],
    family: Family,
    known_terms: int = 0,
    n_unknown: Optional[int] = None,
    ctx: Optional[PrecisionContext] = None,
) -> SeriesFit:
    """Fit with the first ``known_terms`` exact coefficients held fixed."""
    recs = family_records(records, family)
    if not recs:
        raise ValueError(f"no {family.convention.value} records to fit")
    ctx = ctx or _fit_context(recs)
    n = len(recs) if n_unknown is None else n_unknown
    fit = fit_interpolating(recs, family.model(n, family.known(known_terms)), ctx)
    fit.extras["records"] = len(recs)
    return fit


def fit_table(fit: SeriesFit, ctx: PrecisionContext, decimals: int = 20) -> str:
    """Aligned table: nu, coefficient, ratio to the previous coefficient, D_nu."""
    model = fit.model
    rows = []
    prev = None
    for p, v in model.known_prefix:
        val = v.evaluate(ctx) if isinstance(v, LaurentForm) else ctx.mpf(v)
        rows.append((model.index(p), val, prev, "exact"))
        prev = val
    for p, c, d in zip(model.unknown_exponents, fit.coefficients, fit.trusted_digits):
        rows.append((model.index(p), c, prev, str(d)))
        prev = c
    lines = [f"{'nu':>4}  {'coefficient':<{decimals + 4}}  {'ratio':>8}  {'D':>5}"]
    for nu, c, before, d in rows:
        ratio = f"{mpmath.nstr(c / before, 5, min_fixed=-mpmath.inf, max_fixed=mpmath.inf):>8}" if before else " " * 8
        num = _round_decimals(c, decimals)
        lines.append(f"{nu:>4}  {num:<{decimals + 4}}  {ratio}  {d:>5}")
    return "\n".join(lines) + "\n"


def _round_decimals(x, decimals: int) -> str:
    with localcontext() as dc:
        dc.prec = decimals + 30
        d = Decimal(mpmath.nstr(x, decimals + 25, min_fixed=-mpmath.inf, max_fixed=mpmath.inf))
        return f"{d.quantize(Decimal(1).scaleb(-decimals)):f}"


def fit_report(fit: SeriesFit, family: Family, ctx: PrecisionContext, decimals: int = 20) -> str:
    fields = [
        ("family", family.value),
        ("records", _count_points(fit)),
        ("fingerprint", fit.data_fingerprint),
        ("known", ",".join(str(fit.model.index(p)) for p, _ in fit.model.known_prefix) or "none"),
    ]
    for nu, c, d in zip(fit.indices(), fit.coefficients, fit.trusted_digits):
        fields.append((f"coefficient[{nu}]", mpmath.nstr(c, max(d, 1) + 5, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)))
        fields.append((f"digits[{nu}]", d))
    return datafile.format_report(fields) + "\n" + fit_table(fit, ctx, decimals)


def _count_points(fit: SeriesFit) -> int:
    return fit.extras.get("records", len(fit.coefficients))


# ---------------------------------------------------------------------------
# relations
# ---------------------------------------------------------------------------

def relation_report(relation: IntegerRelation, value: str, digits: int) -> str:
    fields = [
        ("value", value),
        ("digits", digits),
        ("basis", ", ".join(str(a) for a in relation.basis.elements)),
        ("relation", " ".join(str(a) for a in relation.coefficients) or "none"),
        ("closed_form", relation.display()),
        ("matched_digits", relation.target_digits_matched),
        ("status", relation.status.value),
    ]
    if relation.note:
        fields.append(("note", relation.note))
    text = datafile.format_report(fields)
    text += f"\n{relation.status.value}: "
    if relation.coefficients:
        text += f"{relation.display()}  (relation {list(relation.coefficients)}, {relation.target_digits_matched} digits matched)\n"
    else:
        text += "no relation found\n"
    return text


# ---------------------------------------------------------------------------
# discovery
# ---------------------------------------------------------------------------

@dataclass
class Discovery:
    nu: int
    value: mpmath.mpf
    digits_used: int
    relation: IntegerRelation
    matched: int

    @property
    def form(self) -> LaurentForm:
        return self.relation.closed_form()


@dataclass
class DiscoveryLog:
    family: Family
    accepted: List[Discovery] = field(default_factory=list)
    stop_reason: str = ""
    error: bool = False
    lines: List[str] = field(default_factory=list)

    def say(self, text: str) -> None:
        self.lines.append(text)


def feasibility(records: Sequence[EigenvalueRecord], family: Family, ctx: PrecisionContext) -> dict:
    """Rough digit budget of the leading unknown coefficient for this grid.

    Interpolating n points extrapolates the next omitted power with an error
    of about prod_i x_i^step, so -log10 of that product bounds the digits of
    the leading coefficient; the data precision bounds it too.
    """
    recs = family_records(records, family)
    model = family.model(max(1, len(recs)))
    pts = model_points(recs, model, ctx) if recs else []
    step = 2 if family is Family.MACLAURIN else 1
    if not pts:
        return {"records": 0, "data_digits": 0, "extrapolation_digits": 0, "tail": "n/a"}
    prod = mpmath.fsum(mpmath.log10(abs(p.x)) for p in pts if p.x) * step
    xmax = max(abs(p.x) for p in pts)
    return {
        "records": len(pts),
        "data_digits": min(p.digits for p in pts),
        "extrapolation_digits": int(-prod) if pts else 0,
        "tail": mpmath.nstr(xmax ** (step * len(pts)), 3),
    }


def usable_digits(records, model: SeriesModel, ctx: PrecisionContext) -> Tuple[SeriesFit, int]:
    """Fit and a truncation-aware digit count for the leading unknown coefficient.

    The perturbation estimate only sees data noise.  Refitting without the
    point of largest |x| (and one fewer unknown) exposes the truncation error;
    that drop costs about one power of x_max, which is added back.
    """
    fit = fit_interpolating(records, model, ctx)
    d_pert = fit.trusted_digits[0]
    pts = model_points(records, model, ctx)
    if len(pts) < 3 or len(model.unknown_exponents) < 2:
        return fit, d_pert
    drop = max(range(len(pts)), key=lambda i: abs(pts[i].x))
    fewer = [p for i, p in enumerate(pts) if i != drop]
    model_less = SeriesModel(model.variable, model.exponents[:-1], model.dependent, model.known_prefix)
    c_less = fit_interpolating(fewer, model_less, ctx).coefficients[0]
    c = fit.coefficients[0]
    diff = abs(c - c_less)
    if diff == 0:
        return fit, d_pert
    scale = abs(c) if c else mpmath.mpf(1)
    d_trunc = int(mpmath.floor(-mpmath.log10(diff / scale)))
    step = model.exponents[-1] - model.exponents[-2]
    gain = int(mpmath.floor(-step * mpmath.log10(abs(pts[drop].x)))) if 0 < abs(pts[drop].x) < 1 else 0
    return fit, max(0, min(d_pert, d_trunc + gain))


def discover(
    records: Sequence[EigenvalueRecord],
    family: Family,
    known_terms: int = 0,
    threshold: int = THRESHOLD,
    max_terms: Optional[int] = None,
    max_basis: int = 8,
    ctx: Optional[PrecisionContext] = None,
) -> DiscoveryLog:
    """Fit, recognise the leading unknown coefficient, fold it in, repeat.

    Each coefficient is offered to the relation search with the narrowest
    ansatz first, widened one element at a time while the search finds
    nothing.  The loop stops at the first Ambiguous result, when widening
    runs out of precision, or when a recovered form reproduces fewer than
    ``threshold`` digits.
    """
    recs = family_records(records, family)
    out = DiscoveryLog(family)
    if not recs:
        out.stop_reason = "insufficient data: no records for this family"
        out.error = True
        out.say(out.stop_reason)
        return out
    ctx = ctx or _fit_context(recs)
    known: List[Tuple[int, LaurentForm]] = family.known(known_terms)
    n = len(recs)
    while max_terms is None or len(out.accepted) < max_terms:
        model = family.model(n, known)
        p = model.unknown_exponents[0]
        nu = model.index(p)
        try:
            fit, digits = usable_digits(recs, model, ctx)
        except Exception as exc:
            out.stop_reason = f"fit failed at nu={nu}: {exc}"
            out.error = True
            break
        value = fit.coefficients[0]
        out.say(f"nu={nu}: fitted {mpmath.nstr(value, min(max(digits, 5), 40))} with {digits} usable digits")
        if digits < 10:
            out.stop_reason = f"precision exhausted at nu={nu} ({digits} usable digits)"
            break
        accepted = None
        widen = 0
        while True:
            basis = asymptotic_ansatz(nu, widen) if family is Family.ASYMPTOTIC else maclaurin_ansatz(nu, widen)
            # each integer in the relation costs a few digits of the target
            if len(basis) > max_basis or 3 * (len(basis) + 1) > digits:
                break
            rel = find_relation(value, digits, basis, ctx, threshold=threshold)
            out.say(f"  basis {basis}: {rel.status.value} {list(rel.coefficients)} {rel.note}".rstrip())
            if rel.status is RelationStatus.NOT_FOUND:
                widen += 1
                continue
            if rel.status is RelationStatus.UNAMBIGUOUS:
                accepted = rel
            break
        if accepted is None:
            out.stop_reason = f"no unambiguous relation for nu={nu}"
            break
        matched = reconstruct_and_verify(accepted, value, ctx)
        if matched < threshold:
            out.stop_reason = f"nu={nu}: closed form matches only {matched} digits"
            break
        out.accepted.append(Discovery(nu, value, digits, accepted, matched))
        out.say(f"  accepted c[{nu}] = {accepted.display()}  ({matched} digits matched)")
        known.append((p, accepted.closed_form()))
    else:
        out.stop_reason = f"reached the requested {max_terms} terms"
    out.say(f"stopped: {out.stop_reason}")
    return out
