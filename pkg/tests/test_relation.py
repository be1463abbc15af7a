import itertools
import random
from fractions import Fraction

import mpmath
import pytest

from ellipsedrum.closed_forms import ASYMPTOTIC, MACLAURIN, LaurentForm
from ellipsedrum.mp_numerics import PrecisionContext
from ellipsedrum.relation import (
    Atom,
    ConstantBasis,
    DegenerateRelationError,
    IntegerRelation,
    PrecisionTooLowError,
    RelationStatus,
    asymptotic_ansatz,
    find_relation,
    gram_schmidt,
    is_lll_reduced,
    lll_reduce,
    maclaurin_ansatz,
    maclaurin_full_width,
    matched_digits,
    normalize,
    reconstruct_and_verify,
)

C3_TEXT = "0.435383650779955252940603845025457624"
C3_BASIS = "pi^-5, pi^-3, pi^-1, pi, pi^3"


def int_det(rows):
    """Exact determinant by fraction-free Bareiss elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k]), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[-1][-1]


def shortest_norm2(rows, bound):
    best = None
    for coeffs in itertools.product(range(-bound, bound + 1), repeat=len(rows)):
        if any(coeffs):
            v = [sum(c * r[j] for c, r in zip(coeffs, rows)) for j in range(len(rows[0]))]
            n2 = sum(x * x for x in v)
            best = n2 if best is None else min(best, n2)
    return best


class TestLLL:
    def test_identity(self):
        eye = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        assert lll_reduce(eye) == eye

    def test_hand_example(self):
        out = lll_reduce([[1, 1], [2, 0]])
        assert sorted(tuple(abs(x) for x in r) for r in out) == [(1, 1), (1, 1)]
        assert {tuple(r) for r in out} <= {(1, 1), (-1, -1), (1, -1), (-1, 1)}

    def test_two_dimensional_bound(self):
        rows = [[201, 37], [1648, 297]]
        out = lll_reduce(rows)
        det = abs(int_det(rows))
        first = sum(x * x for x in out[0])
        assert first <= 2 * det
        assert first == shortest_norm2(rows, 50)

    def test_random_properties(self):
        rng = random.Random(11)
        for _ in range(20):
            n = rng.randint(2, 6)
            rows = [[rng.randint(-10 ** 4, 10 ** 4) for _ in range(n)] for _ in range(n)]
            if int_det(rows) == 0:
                continue
            out = lll_reduce(rows)
            assert is_lll_reduced(out)
            assert abs(int_det(out)) == abs(int_det(rows))

    def test_dependent_rows(self):
        with pytest.raises(ValueError):
            lll_reduce([[1, 2], [2, 4]])

    def test_gram_schmidt_exact(self):
        mu, b2 = gram_schmidt([[3, 1], [2, 2]])
        assert b2[0] == 10 and mu[1][0] == Fraction(8, 10)


class TestAtoms:
    @pytest.mark.parametrize(
        "text,key",
        [("pi^-5", ("pi", -5)), ("1/pi", ("pi", -1)), ("π", ("pi", 1)), ("rho", ("rho", 1)), ("1", (None, 0))],
    )
    def test_parse(self, text, key):
        assert Atom.parse(text).key == key

    def test_basis_rejects_duplicates(self):
        with pytest.raises(ValueError):
            ConstantBasis.parse("pi, pi^1")


class TestFindRelation:
    def test_worked_example_36_digits(self):
        ctx = PrecisionContext(40)
        rel = find_relation(ctx.mpf(C3_TEXT), 36, ConstantBasis.parse(C3_BASIS), ctx)
        assert rel.coefficients == (640, 0, -9855, 360, -24, 0)
        assert rel.status is RelationStatus.UNAMBIGUOUS
        assert reconstruct_and_verify(rel, ctx.mpf(C3_TEXT), ctx) == 36
        assert rel.display() == "1971/(128π³) - 9/(16π) + 3π/80"
        assert rel.closed_form() == ASYMPTOTIC[3]

    def test_unit(self):
        rel = find_relation(1, 30, ConstantBasis.parse("1"), PrecisionContext(40), threshold=25)
        assert rel.coefficients == (1, -1)
        assert rel.status is RelationStatus.UNAMBIGUOUS

    def test_golden_ratio(self):
        ctx = PrecisionContext(50)
        phi = (1 + ctx.mp.sqrt(5)) / 2
        basis = ConstantBasis.with_custom([("phi", lambda c: (1 + c.mp.sqrt(5)) / 2), ("1", lambda c: c.mp.one)])
        rel = find_relation(phi * phi, 40, basis, ctx)
        assert rel.coefficients == (1, -1, -1)
        assert rel.status is RelationStatus.UNAMBIGUOUS
        assert rel.closed_form() is None

    def test_maclaurin_c2(self):
        ctx = PrecisionContext(40)
        rel = find_relation(ctx.mpf("0.11822456134208701629"), 20, ConstantBasis.parse("1, rho"), ctx, threshold=20)
        assert rel.coefficients == (32, 2, -1)
        assert rel.status is RelationStatus.UNAMBIGUOUS
        assert str(rel.closed_form()) == "(ρ - 2)/32"
        assert reconstruct_and_verify(rel, ctx.mpf("0.11822456134208701629"), ctx) == 20

    def test_default_threshold_marks_short_evidence(self):
        ctx = PrecisionContext(40)
        rel = find_relation(ctx.mpf("0.11822456134208701629"), 20, ConstantBasis.parse("1, rho"), ctx)
        assert rel.coefficients == (32, 2, -1)
        assert rel.status is RelationStatus.AMBIGUOUS

    def test_soundness_and_scale_robustness(self):
        ctx = PrecisionContext(80)
        for nu in (1, 2, 4):
            value = ASYMPTOTIC[nu].evaluate(ctx)
            basis = asymptotic_ansatz(nu)
            rel = find_relation(value, 60, basis, ctx)
            assert rel.status is RelationStatus.UNAMBIGUOUS
            hi = ctx.with_digits(120)
            vals = [ASYMPTOTIC[nu].evaluate(hi)] + basis.values(hi)
            assert abs(hi.mp.fsum(a * v for a, v in zip(rel.coefficients, vals))) < hi.mpf(10) ** -(60 - 8)
            again = find_relation(value, 55, basis, ctx)
            assert again.coefficients == rel.coefficients

    def test_low_precision_rejected(self):
        with pytest.raises(PrecisionTooLowError):
            find_relation(mpmath.mpf(1), 9, ConstantBasis.parse("1"))

    def test_noise(self):
        rng = random.Random(4)
        ctx = PrecisionContext(50)
        basis = ConstantBasis.parse("pi^-3, pi^-1, pi, pi^3")
        hits = 0
        for _ in range(20):
            value = ctx.mpf("0." + "".join(rng.choice("0123456789") for _ in range(40)))
            if find_relation(value, 40, basis, ctx).status is RelationStatus.UNAMBIGUOUS:
                hits += 1
        assert hits <= 1

    def test_basis_internal_relation_is_flagged(self):
        ctx = PrecisionContext(40)
        basis = ConstantBasis.with_custom([("pi", lambda c: c.mp.pi), ("2pi", lambda c: 2 * c.mp.pi)])
        rel = find_relation(ctx.mpf(3), 30, basis, ctx)
        assert rel.status is not RelationStatus.UNAMBIGUOUS


class TestHelpers:
    def test_normalize(self):
        assert normalize((-4, 2, 6)) == (2, -1, -3)
        assert normalize((0, -3, 3)) == (0, 1, -1)

    def test_matched_digits(self):
        assert matched_digits(mpmath.mpf("0.1234"), mpmath.mpf("0.1235"), 10) == 3
        assert matched_digits(mpmath.mpf(2), mpmath.mpf(2), 7) == 7

    def test_degenerate_relation(self):
        rel = IntegerRelation((0, 1, -1), ConstantBasis.parse("pi, pi^3"), 0, RelationStatus.AMBIGUOUS)
        with pytest.raises(DegenerateRelationError):
            reconstruct_and_verify(rel, 1, PrecisionContext(20))

    def test_display_empty(self):
        rel = IntegerRelation((), ConstantBasis.parse("1"), 0, RelationStatus.NOT_FOUND)
        assert rel.display() == "(none)"


class TestAnsatz:
    def test_asymptotic_parity(self):
        assert [a.power for a in asymptotic_ansatz(-2).elements] == [2]
        assert [a.power for a in asymptotic_ansatz(1).elements] == [-1, 1]
        assert [a.power for a in asymptotic_ansatz(3).elements] == [-3, -1, 1]
        assert [a.power for a in asymptotic_ansatz(4).elements] == [-4, -2, 0]
        assert [a.power for a in asymptotic_ansatz(3, widen=2).elements] == [-5, -3, -1, 1, 3]

    def test_asymptotic_table_fits_ansatz(self):
        for nu, form in ASYMPTOTIC.items():
            powers = {a.power for a in asymptotic_ansatz(nu).elements}
            assert set(form.terms) <= powers

    def test_maclaurin_growth(self):
        assert [a.power for a in maclaurin_ansatz(2, 1).elements] == [0, 1]
        assert maclaurin_full_width(6) == 5
        for nu in range(2, 14):
            assert max(MACLAURIN[nu].terms) <= maclaurin_full_width(nu)


def test_laurent_display():
    assert str(LaurentForm("pi", {2: Fraction(1, 4)})) == "π²/4"
    assert str(MACLAURIN[2]) == "(ρ - 2)/32"
