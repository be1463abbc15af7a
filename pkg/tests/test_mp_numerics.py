import random

import mpmath
import pytest

from ellipsedrum.mp_numerics import (
    ConvergenceError,
    InvalidBracketError,
    PrecisionContext,
    SingularMatrixError,
    bessel_j,
    bessel_j_sequence,
    bracket_root,
    find_root,
    fundamental_constants,
    least_squares,
    solve_full_pivot,
)

J01_REF = "2.404825557695772768621631879326454643124244909145614"


def ref_j(n, x, dps):
    with mpmath.workdps(dps):
        return mpmath.besselj(n, mpmath.mpf(x))


def err(a, b):
    """|a - b| evaluated at high precision (the global context is only 15 digits)."""
    with mpmath.workdps(200):
        return abs(mpmath.mpf(a) - mpmath.mpf(b))


class TestPrecisionContext:
    def test_rejects_low_digits(self):
        with pytest.raises(ValueError):
            PrecisionContext(5)

    def test_rejects_small_guard(self):
        with pytest.raises(ValueError):
            PrecisionContext(20, 2)

    def test_private_context(self):
        ctx = PrecisionContext(40)
        before = mpmath.mp.dps
        assert ctx.mp.dps == 60
        assert mpmath.mp.dps == before

    def test_fraction_conversion(self):
        from fractions import Fraction

        ctx = PrecisionContext(30)
        assert ctx.mpf(Fraction(1, 3)) * 3 == ctx.mp.one


class TestBessel:
    def test_origin(self):
        ctx = PrecisionContext(30)
        assert bessel_j(0, 0, ctx) == 1
        assert bessel_j(3, 0, ctx) == 0

    def test_j1_at_one(self):
        ctx = PrecisionContext(40)
        val = bessel_j(1, 1, ctx)
        assert mpmath.nstr(val, 20) == "0.44005058574493351596"
        assert err(val, ref_j(1, 1, 80)) < mpmath.mpf(10) ** -40

    def test_zero_at_j01(self):
        ctx = PrecisionContext(50)
        rho = fundamental_constants(ctx)
        assert abs(bessel_j(0, rho.j01, ctx)) < mpmath.mpf(10) ** -49

    @pytest.mark.parametrize("n,x", [(0, 0.5), (2, 7.25), (7, 31.0), (0, 80.0), (15, 95.5), (40, 12.0)])
    def test_matches_reference(self, n, x):
        ctx = PrecisionContext(60)
        got = bessel_j(n, x, ctx)
        want = ref_j(n, x, 120)
        assert err(got, want) <= mpmath.mpf(10) ** -58 * max(1, abs(want))

    def test_large_argument_uses_recurrence(self):
        # beyond the series cutoff at 30 digits
        ctx = PrecisionContext(30)
        got = bessel_j(4, 150, ctx)
        assert err(got, ref_j(4, 150, 80)) < mpmath.mpf(10) ** -29

    def test_sequence_normalisation(self):
        mp = mpmath.MPContext()
        mp.dps = 50
        seq = bessel_j_sequence(10, mp.mpf(60), mp)
        for n in (0, 3, 10):
            assert err(seq[n], ref_j(n, 60, 100)) < mpmath.mpf(10) ** -45

    def test_domain_errors(self):
        ctx = PrecisionContext(20)
        with pytest.raises(ValueError):
            bessel_j(-1, 1, ctx)
        with pytest.raises(ValueError):
            bessel_j(1.5, 1, ctx)
        with pytest.raises(ValueError):
            bessel_j(0, -2, ctx)

    def test_recurrence_residual_sample(self):
        rng = random.Random(7)
        ctx = PrecisionContext(40)
        tol = mpmath.mpf(10) ** -(ctx.digits - 5)
        for _ in range(20):
            n = rng.randint(1, 20)
            x = ctx.mpf(rng.uniform(0.01, 50))
            jm, j0, jp = (bessel_j(k, x, ctx) for k in (n - 1, n, n + 1))
            assert abs(jm + jp - 2 * n / x * j0) < tol * max(1, abs(j0))

    def test_derivative_identity(self):
        ctx = PrecisionContext(40)
        x = fundamental_constants(ctx).j01
        h = ctx.mpf(10) ** -(ctx.digits // 2)
        fd = (bessel_j(0, x + h, ctx) - bessel_j(0, x - h, ctx)) / (2 * h)
        assert abs(fd + bessel_j(1, x, ctx)) < ctx.mpf(10) ** -(ctx.digits // 2 - 3)


class TestRoots:
    def test_sqrt2(self):
        ctx = PrecisionContext(50)
        r = find_root(lambda x: x * x - 2, (1, 2), ctx)
        assert abs(r - ctx.mp.sqrt(2)) < ctx.mpf(10) ** -50

    def test_linear_exact(self):
        ctx = PrecisionContext(20)
        assert find_root(lambda x: x - 5, (4, 7), ctx) == 5

    def test_j0_root(self):
        ctx = PrecisionContext(45)
        r = find_root(lambda x: bessel_j(0, x, ctx), (2, 3), ctx)
        assert mpmath.nstr(r, 21) == "2.40482555769577276862"
        assert abs(r - ctx.mpf(J01_REF)) < ctx.mpf(10) ** -44

    def test_bracket_width(self):
        ctx = PrecisionContext(30)
        lo, hi = bracket_root(lambda x: x ** 3 - 3, (1, 2), ctx)
        assert (hi - lo) / hi < ctx.mpf(10) ** -30
        assert (lo ** 3 - 3) * (hi ** 3 - 3) <= 0

    def test_invalid_bracket(self):
        ctx = PrecisionContext(20)
        with pytest.raises(InvalidBracketError):
            find_root(lambda x: x * x + 1, (0, 1), ctx)

    def test_iteration_cap(self):
        ctx = PrecisionContext(20)
        with pytest.raises(ConvergenceError):
            bracket_root(lambda x: x - ctx.mpf(1) / 3, (0, 1), ctx, max_evals=5)


class TestConstants:
    def test_low_precision_values(self):
        c = fundamental_constants(PrecisionContext(10))
        assert mpmath.nstr(c.j01, 5) == "2.4048"
        assert mpmath.nstr(c.rho, 5) == "5.7832"
        assert str(c.rho).startswith("5.7831")

    def test_rho_is_square(self):
        ctx = PrecisionContext(60)
        c = fundamental_constants(ctx)
        assert c.rho - c.j01 * c.j01 == 0

    def test_precision_monotone(self):
        lo = fundamental_constants(PrecisionContext(30)).rho
        hi = fundamental_constants(PrecisionContext(80)).rho
        assert err(lo, hi) < mpmath.mpf(10) ** -30 * hi

    def test_cached_per_context(self):
        ctx = PrecisionContext(25)
        assert fundamental_constants(ctx) is fundamental_constants(ctx)


class TestLinearAlgebra:
    def test_full_pivot_solve(self):
        mp = mpmath.MPContext()
        mp.dps = 40
        a = [[mp.mpf(v) for v in row] for row in ([0, 2, 1], [1, 1, 1], [4, -1, 3])]
        x = solve_full_pivot(a, [mp.mpf(3), mp.mpf(3), mp.mpf(6)], mp)
        assert all(abs(v - 1) < mp.mpf(10) ** -38 for v in x)

    def test_singular(self):
        mp = mpmath.MPContext()
        mp.dps = 30
        a = [[mp.mpf(1), mp.mpf(2)], [mp.mpf(2), mp.mpf(4)]]
        with pytest.raises(SingularMatrixError):
            solve_full_pivot(a, [mp.one, mp.one], mp)

    def test_least_squares_consistent_system(self):
        mp = mpmath.MPContext()
        mp.dps = 40
        xs = [mp.mpf(k) / 7 for k in range(6)]
        a = [[x ** p for p in range(3)] for x in xs]
        b = [2 - 3 * x + x * x / 2 for x in xs]
        c = least_squares(a, b, mp)
        for got, want in zip(c, (2, -3, mp.mpf(1) / 2)):
            assert abs(got - want) < mp.mpf(10) ** -35
