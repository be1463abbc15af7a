"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing criterion still reports what it measured.
"""

import itertools
import random
import time

import mpmath
import pytest

from conftest import record
from ellipsedrum import datafile
from ellipsedrum.cli import main
from ellipsedrum.closed_forms import ASYMPTOTIC, MACLAURIN
from ellipsedrum.eigensolver import SolverConfig, solve_fundamental
from ellipsedrum.geometry import Convention, EigenvalueRecord, EllipseShape, SolverMeta, convert_eigenvalue
from ellipsedrum.mp_numerics import PrecisionContext, bessel_j, fundamental_constants
from ellipsedrum.pipeline import Family, eccentricity_grid, fit_family, usable_digits
from ellipsedrum.series import deflate_known, fit_interpolating
from ellipsedrum.relation import (
    ConstantBasis,
    RelationStatus,
    find_relation,
    gram_schmidt,
    is_lll_reduced,
    lll_reduce,
    matched_digits,
    reconstruct_and_verify,
)

C23_LITERAL = "0.11822456134208701629"
FIRST_LINE = {
    -2: "2.46740110027233965471",
    -1: "1.57079632679489661923",
    0: "0.75",
    1: "0.69947548130186160990",
}
C3_LITERAL = "0.435383650779955252940603845025457624"
C3_BASIS = "pi^-5, pi^-3, pi^-1, pi, pi^3"
HI = PrecisionContext(200)


def agree(value, reference) -> int:
    """Matched significant digits, compared at 200 digits."""
    return matched_digits(HI.mpf(value), HI.mpf(reference), 200)


@pytest.fixture(scope="module")
def maclaurin_fit(maclaurin_dataset):
    return fit_family(maclaurin_dataset.records, Family.MACLAURIN, known_terms=2)


def test_criterion_1_circle():
    ctx = PrecisionContext(60)
    start = time.perf_counter()
    rec = solve_fundamental(EllipseShape("0", Convention.CONSTANT_AREA), SolverConfig(target_digits=50), ctx)
    seconds = time.perf_counter() - start
    rho = fundamental_constants(PrecisionContext(120)).rho
    got = agree(rec.lam, rho)
    ok = got >= 50 and rec.digits_claimed >= 50 and seconds < 300
    record(1, ok, f"circle: {got} digits of j01^2 (claimed {rec.digits_claimed}) in {seconds:.1f} s")
    assert ok


def test_criterion_2_maclaurin(maclaurin_dataset, maclaurin_fit):
    data = maclaurin_dataset
    c2, c3 = maclaurin_fit.coefficient(2), maclaurin_fit.coefficient(3)
    d2, d3 = agree(c2, C23_LITERAL), agree(c3, C23_LITERAL)
    later = {nu: agree(maclaurin_fit.coefficient(nu), MACLAURIN[nu].evaluate(HI)) for nu in (4, 5, 6)}
    ok = (
        not data.failures
        and len(data.records) == 20
        and min(d2, d3) >= 15
        and min(later.values()) >= 10
        and data.seconds < 7200
    )
    detail = (
        f"20 points in {data.seconds:.0f} s; C2 {d2}, C3 {d3} digits (literal has 20); "
        + ", ".join(f"C{nu} {d}" for nu, d in later.items())
        + " digits vs the table"
    )
    record(2, ok, detail)
    assert ok


def test_criterion_3_c2_relation(maclaurin_dataset):
    model = Family.MACLAURIN.model(18, Family.MACLAURIN.known(2))
    records = maclaurin_dataset.records
    ctx = PrecisionContext(max(r.digits_claimed for r in records) + 20)
    fit, digits = usable_digits(records, model, ctx)
    rel = find_relation(fit.coefficients[0], digits, ConstantBasis.parse("1, rho"), ctx)
    ok = rel.coefficients == (32, 2, -1) and rel.status is RelationStatus.UNAMBIGUOUS
    record(3, ok, f"C2 with {digits} usable digits: {list(rel.coefficients)} {rel.status.value}")
    assert ok


def test_criterion_4_sequential_deflation(asymptotic_dataset):
    data = asymptotic_dataset
    records = data.records
    ctx = PrecisionContext(80)
    got = {}
    for k, nu in enumerate(range(-2, 2)):
        # the first k coefficients are now exact: deflate them, fit the rest
        model = Family.ASYMPTOTIC.model(len(records) - k, Family.ASYMPTOTIC.known(k))
        points = deflate_known(records, model, ctx) if k else records
        fit = fit_interpolating(points, model.reduced() if k else model, ctx)
        got[nu] = agree(fit.coefficients[0], FIRST_LINE[nu])
    in_range = all(0.9998 <= float(r.shape.e) <= 0.999995 for r in records)
    ok = not data.failures and len(records) == 12 and in_range and min(got.values()) >= 10 and data.seconds < 7200
    detail = f"12 points in {data.seconds:.0f} s; " + ", ".join(f"c{nu} {d}" for nu, d in got.items()) + " digits"
    record(4, ok, detail + " (literals carry 20-21 digits)")
    assert ok


def test_criterion_5_c3_relation():
    ctx = PrecisionContext(60)
    start = time.perf_counter()
    rel = find_relation(ctx.mpf(C3_LITERAL), 36, ConstantBasis.parse(C3_BASIS), ctx)
    matched = reconstruct_and_verify(rel, ctx.mpf(C3_LITERAL), ctx)
    seconds = time.perf_counter() - start
    ok = rel.coefficients == (640, 0, -9855, 360, -24, 0) and matched == 36 and seconds < 1
    record(5, ok, f"{list(rel.coefficients)} {rel.status.value}, {matched} digits, {seconds * 1000:.0f} ms")
    assert ok


def test_criterion_6_ratios(maclaurin_fit):
    r43 = maclaurin_fit.coefficient(4) / maclaurin_fit.coefficient(3)
    r54 = maclaurin_fit.coefficient(5) / maclaurin_fit.coefficient(4)
    ok = abs(r43 - mpmath.mpf("0.93069")) < 5e-5 and abs(r54 - mpmath.mpf("0.92553")) < 5e-5
    record(6, ok, f"C4/C3 = {mpmath.nstr(r43, 7)}, C5/C4 = {mpmath.nstr(r54, 7)}")
    assert ok


# ---------------------------------------------------------------------------
# criterion 7: property suites at full size
# ---------------------------------------------------------------------------

SUITES = {}


def _suite(name, ok, detail):
    SUITES[name] = (ok, detail)
    done = len(SUITES) == 5
    if done or not ok:
        bad = [k for k, (good, _) in SUITES.items() if not good]
        summary = "; ".join(f"{k}: {d}" for k, (_, d) in SUITES.items())
        record(7, done and not bad, summary if not bad else f"failing {bad}; {summary}")


def test_criterion_7_bessel_recurrence():
    rng = random.Random(2024)
    digits = 40
    ctx = PrecisionContext(digits)
    worst = mpmath.mpf(0)
    for _ in range(200):
        n = rng.randint(1, 20)
        x = ctx.mpf(rng.uniform(1e-6, 50))
        lhs = bessel_j(n - 1, x, ctx) + bessel_j(n + 1, x, ctx)
        rhs = 2 * n / x * bessel_j(n, x, ctx)
        with mpmath.workdps(200):
            worst = max(worst, abs(mpmath.mpf(lhs) - mpmath.mpf(rhs)))
    ok = worst < mpmath.mpf(10) ** -(digits - 5)
    _suite("bessel", ok, f"max residual {mpmath.nstr(worst, 3)} over 200 draws")
    assert ok


def _shortest_norm2(rows, bound):
    best = None
    for coeffs in itertools.product(range(-bound, bound + 1), repeat=len(rows)):
        if any(coeffs):
            v = [sum(c * r[j] for c, r in zip(coeffs, rows)) for j in range(len(rows[0]))]
            n2 = sum(x * x for x in v)
            best = n2 if best is None or n2 < best else best
    return best


def test_criterion_7_lll():
    rng = random.Random(77)
    checked = brute = 0
    failures = []
    while checked < 100:
        n = rng.randint(1, 6)
        rows = [[rng.randint(-10 ** 4, 10 ** 4) for _ in range(n)] for _ in range(n)]
        _, norms = gram_schmidt(rows)
        if any(b == 0 for b in norms):
            continue
        out = lll_reduce(rows)
        checked += 1
        if not is_lll_reduced(out):
            failures.append(rows)
            continue
        if n <= 3:
            brute += 1
            # the reduced basis spans the same lattice, and short vectors have
            # small coordinates in it, so enumerate there
            first = sum(x * x for x in out[0])
            if first > 2 ** (n - 1) * _shortest_norm2(out, 4):
                failures.append(rows)
    ok = not failures
    _suite("lll", ok, f"{checked} lattices reduced, {brute} checked against brute force, {len(failures)} failures")
    assert ok


def test_criterion_7_convention_invariance():
    grid = eccentricity_grid("0.05", "0.95", 20, "linear")
    ctx = PrecisionContext(40)
    config = SolverConfig(target_digits=30)
    worst = None
    for e in grid:
        a = solve_fundamental(EllipseShape(e, Convention.CONSTANT_AREA), config, ctx)
        b = solve_fundamental(EllipseShape(e, Convention.CONSTANT_SEMI_MAJOR), config, ctx)
        conv = convert_eigenvalue(a, Convention.CONSTANT_SEMI_MAJOR, ctx)
        margin = agree(conv.lam, b.lam) - (min(a.digits_claimed, b.digits_claimed) - 2)
        worst = margin if worst is None else min(worst, margin)
    ok = worst >= 0
    _suite("conventions", ok, f"20 shapes, agreement exceeds claim-2 by at least {worst} digits")
    assert ok


def test_criterion_7_round_trip():
    rng = random.Random(1000)
    mp = mpmath.MPContext()
    records = []
    for _ in range(1000):
        digits = rng.randint(10, 150)
        mp.dps = digits + 20
        e = f"{rng.random() * 0.94:.{rng.randint(1, 10)}f}"
        lam = mp.mpf(rng.random() + 0.001) * mp.mpf(10) ** rng.randint(0, 8) + mp.pi / 7
        meta = SolverMeta(rng.randint(1, 300), rng.randint(1, 400), rng.choice(["cheb", "uniform"]))
        records.append(EigenvalueRecord(EllipseShape(e, rng.choice(list(Convention))), lam, digits, meta))
    text = datafile.dumps(records)
    again, comments = datafile.loads(text)
    ok = datafile.dumps(again, comments) == text and len(again) == 1000
    _suite("round trip", ok, "1000 records byte-exact" if ok else "text differs after reload")
    assert ok


def test_criterion_7_noise_rejection():
    rng = random.Random(40)
    ctx = PrecisionContext(60)
    basis = ConstantBasis.parse(C3_BASIS)
    rejected = 0
    for _ in range(100):
        value = ctx.mpf("0." + "".join(rng.choice("0123456789") for _ in range(40)))
        rel = find_relation(value, 40, basis, ctx, max_coefficient=10 ** 6)
        rejected += rel.status in (RelationStatus.NOT_FOUND, RelationStatus.AMBIGUOUS)
    ok = rejected >= 95
    _suite("noise", ok, f"{rejected}/100 random targets rejected")
    assert ok


def test_criterion_8_pipeline(asymptotic_dataset, capsys):
    code = main(["pipeline", "--data", str(asymptotic_dataset.path), "--family", "asymptotic"])
    out = capsys.readouterr().out
    fields = datafile.parse_report(out)
    accepted = int(fields.get("accepted", 0))
    first = [(nu, fields.get(f"c[{nu}]"), int(fields.get(f"matched[{nu}]", 0))) for nu in range(-2, 2)]
    want = [str(ASYMPTOTIC[nu]) for nu in range(-2, 2)]
    ok = code == 0 and accepted >= 4 and [f for _, f, _ in first] == want and all(m >= 25 for *_, m in first)
    detail = ", ".join(f"c{nu} = {f} ({m})" for nu, f, m in first) + f"; {accepted} accepted in total"
    record(8, ok, detail)
    assert ok
