"""Arbitrary-precision real arithmetic: Bessel functions, root refinement, constants.

Every computation runs inside a :class:`PrecisionContext`, which owns a private
mpmath context carrying ``digits + guard_digits`` decimal digits.  Values
returned by this module are mpmath ``mpf`` numbers bound to that context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple, Optional, Sequence

import mpmath


class PrecisionError(ArithmeticError):
    """The requested accuracy could not be certified."""


class InvalidBracketError(ValueError):
    """The endpoints of a root bracket do not straddle a sign change."""


class ConvergenceError(ArithmeticError):
    """An iterative method exceeded its step budget."""


class SingularMatrixError(ArithmeticError):
    pass


class FundamentalConstants(NamedTuple):
    pi: mpmath.mpf
    j01: mpmath.mpf
    rho: mpmath.mpf


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision: ``digits`` are reported, ``guard_digits`` are carried extra."""

    digits: int
    guard_digits: int = 20

    def __post_init__(self):
        if int(self.digits) != self.digits or self.digits < 10:
            raise ValueError(f"digits must be an integer >= 10, got {self.digits!r}")
        if int(self.guard_digits) != self.guard_digits or self.guard_digits < 5:
            raise ValueError(f"guard_digits must be an integer >= 5, got {self.guard_digits!r}")

    @property
    def working_digits(self) -> int:
        return self.digits + self.guard_digits

    @cached_property
    def mp(self) -> mpmath.ctx_mp.MPContext:
        ctx = mpmath.MPContext()
        ctx.dps = self.working_digits
        return ctx

    def mpf(self, x) -> mpmath.mpf:
        """Convert ``x`` (int, str, Fraction-like, mpf) into this context."""
        if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, int):
            return self.mp.mpf(x.numerator) / x.denominator
        return self.mp.mpf(x)

    def eps(self) -> mpmath.mpf:
        """10**-digits, the trusted relative resolution."""
        return self.mp.mpf(10) ** (-self.digits)

    def with_digits(self, digits: int, guard_digits: Optional[int] = None) -> "PrecisionContext":
        return PrecisionContext(digits, self.guard_digits if guard_digits is None else guard_digits)

    @cached_property
    def constants(self) -> FundamentalConstants:
        return _compute_constants(self)


# ---------------------------------------------------------------------------
# Bessel functions of the first kind, integer order, real argument >= 0
# ---------------------------------------------------------------------------

def _series_cutoff(dps: int) -> float:
    return max(30.0, dps / 2)


def _bessel_series(n: int, x, mp) -> mpmath.mpf:
    # Alternating ascending series; terms peak near exp(x), so carry extra digits.
    extra = int(x * 0.4343) + 10
    with mp.extradps(extra):
        x = mp.mpf(x)
        half = x / 2
        q = -(half * half)
        term = half ** n / mp.factorial(n)
        total = term
        tol = mp.mpf(10) ** (-(mp.dps + 5))
        m = 0
        while True:
            m += 1
            term = term * q / (m * (m + n))
            total += term
            if abs(term) <= tol * abs(total) and m > x:
                break
    return +total


def _debye_phase(n: float, x: float) -> float:
    """n*(alpha - tanh(alpha)) with sech(alpha) = x/n, for n > x > 0, else 0."""
    if n <= x:
        return 0.0
    s = x / n
    alpha = math.acosh(1.0 / s)
    return n * (alpha - math.tanh(alpha))


def miller_start(nmax: int, x: float, dps: int) -> int:
    """Starting order for backward recurrence giving ``dps`` digits up to order ``nmax``.

    Starting from zero at order N+1 mixes in a multiple J_N/Y_N of Y.  Past
    the turning point J ~ exp(-phase) and Y ~ exp(+phase), so the relative
    error at order n is about exp(-2*(phase(N) - phase(n))); that bounds the
    orders we return.  The normalisation sum also runs over every order up to
    N, where the Y admixture is as large as J_N itself, so J_N must also be
    below 10**-dps in absolute terms: phase(N) > dps*ln(10).
    """
    x = float(x)
    target = (dps + 10) * math.log(10.0)
    base = _debye_phase(float(max(nmax, 1)), x)
    need = max(target, base + target / 2)
    n = int(max(nmax, math.ceil(x))) + 2
    # phase grows superlinearly once n > x, so a doubling search then bisection is cheap
    step = 8
    while _debye_phase(float(n + step), x) < need:
        step *= 2
    lo, hi = n, n + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _debye_phase(float(mid), x) < need:
            lo = mid
        else:
            hi = mid
    start = hi + 10
    return start + (start % 2)


def bessel_j_sequence(nmax: int, x, mp) -> list:
    """J_0(x) .. J_nmax(x) by Miller's backward recurrence.

    Normalised with the identity J_0 + 2*sum_k J_2k = 1.  ``mp`` is an mpmath
    context; no certification is done here (callers check convergence).
    """
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    x = mp.mpf(x)
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return [mp.one] + [mp.zero] * nmax
    start = miller_start(nmax, float(x), mp.dps)
    two_over_x = 2 / x
    vals = [None] * (nmax + 1)
    f_next = mp.zero
    f = mp.mpf(10) ** (-(mp.dps // 2))
    even_sum = mp.zero
    for k in range(start, 0, -1):
        # here f = F_k, f_next = F_{k+1}
        if k % 2 == 0:
            even_sum += f
        if k <= nmax:
            vals[k] = f
        f, f_next = k * two_over_x * f - f_next, f
    # f is now F_0
    vals[0] = f
    norm = f + 2 * even_sum
    return [v / norm for v in vals]


def _bessel_raw(n: int, x, mp) -> mpmath.mpf:
    if x <= _series_cutoff(mp.dps):
        return _bessel_series(n, x, mp)
    return bessel_j_sequence(n, x, mp)[n]


def _certified(evaluate: Callable, ctx: PrecisionContext, what: str):
    """Evaluate at two guard levels and accept if they agree to ``ctx.digits``.

    On disagreement the guard is doubled once before giving up.
    """
    guard = ctx.guard_digits
    for attempt in range(2):
        mp_lo = mpmath.MPContext()
        mp_lo.dps = ctx.digits + guard
        mp_hi = mpmath.MPContext()
        mp_hi.dps = ctx.digits + 2 * guard
        a = evaluate(mp_lo)
        b = evaluate(mp_hi)
        err = abs(ctx.mpf(a) - ctx.mpf(b))
        if err <= ctx.eps() * max(ctx.mp.one, abs(ctx.mpf(b))) / 10:
            return ctx.mpf(b)
        guard *= 2
    raise PrecisionError(f"{what}: could not certify {ctx.digits} digits")


def bessel_j(n: int, x, ctx: PrecisionContext) -> mpmath.mpf:
    """Bessel function of the first kind J_n(x) for integer n >= 0 and real x >= 0.

    Ascending series for x <= max(30, digits/2), backward recurrence above.
    The result is certified by agreement between two guard-digit levels.
    """
    if int(n) != n or n < 0:
        raise ValueError(f"order must be a nonnegative integer, got {n!r}")
    n = int(n)
    x = ctx.mpf(x)
    if x < 0:
        raise ValueError(f"argument must be >= 0, got {x}")
    if x == 0:
        return ctx.mp.one if n == 0 else ctx.mp.zero
    return _certified(lambda mp: _bessel_raw(n, mp.mpf(x), mp), ctx, f"J_{n}({mpmath.nstr(x, 10)})")


# ---------------------------------------------------------------------------
# dense linear algebra on mpf matrices
# ---------------------------------------------------------------------------

def solve_full_pivot(a: list, b: list, mp) -> list:
    """Solve a x = b by Gaussian elimination with complete pivoting."""
    n = len(a)
    a = [row[:] + [rhs] for row, rhs in zip(a, b)]
    cols = list(range(n))
    tiny = mp.mpf(2) ** (-mp.prec + 8)
    scale = max(abs(v) for row in a for v in row[:n]) or mp.one
    for j in range(n):
        best, pi, pj = mp.zero, j, j
        for i in range(j, n):
            row = a[i]
            for k in range(j, n):
                if abs(row[k]) > best:
                    best, pi, pj = abs(row[k]), i, k
        if best <= tiny * scale:
            raise SingularMatrixError("matrix is numerically singular")
        a[j], a[pi] = a[pi], a[j]
        if pj != j:
            for row in a:
                row[j], row[pj] = row[pj], row[j]
            cols[j], cols[pj] = cols[pj], cols[j]
        piv = a[j][j]
        for i in range(j + 1, n):
            f = a[i][j] / piv
            if f:
                ri, rj = a[i], a[j]
                for k in range(j, n + 1):
                    ri[k] -= f * rj[k]
    z = [mp.zero] * n
    for j in range(n - 1, -1, -1):
        s = a[j][n] - sum((a[j][k] * z[k] for k in range(j + 1, n)), mp.zero)
        z[j] = s / a[j][j]
    out = [mp.zero] * n
    for j, c in enumerate(cols):
        out[c] = z[j]
    return out


def least_squares(a: list, b: list, mp) -> list:
    """Least-squares solution of a x ~ b by column-by-column modified Gram-Schmidt."""
    n_rows, n = len(a), len(a[0])
    q = [[a[i][k] for i in range(n_rows)] for k in range(n)]
    r = [[mp.zero] * n for _ in range(n)]
    rhs = list(b)
    for k in range(n):
        norm = mp.sqrt(mp.fsum(v * v for v in q[k]))
        if norm == 0:
            raise SingularMatrixError("least-squares design matrix is rank deficient")
        r[k][k] = norm
        qk = [v / norm for v in q[k]]
        q[k] = qk
        for j in range(k + 1, n):
            c = mp.fsum(u * v for u, v in zip(qk, q[j]))
            r[k][j] = c
            q[j] = [u - c * v for u, v in zip(q[j], qk)]
        c = mp.fsum(u * v for u, v in zip(qk, rhs))
        rhs = [u - c * v for u, v in zip(rhs, qk)]
        # projected right-hand side rides along as an extra column of r
        r[k].append(c)
    z = [mp.zero] * n
    for k in range(n - 1, -1, -1):
        s = r[k][n] - sum((r[k][j] * z[j] for j in range(k + 1, n)), mp.zero)
        z[k] = s / r[k][k]
    return z


# ---------------------------------------------------------------------------
# Root refinement
# ---------------------------------------------------------------------------

def bracket_root(
    f: Callable,
    bracket: Sequence,
    ctx: PrecisionContext,
    df: Optional[Callable] = None,
    bisect_digits: int = 10,
    digits: Optional[int] = None,
    max_evals: Optional[int] = None,
):
    """Shrink a sign-change bracket of ``f`` to relative width ``10**-digits``.

    Bisection until the bracket is ``10**-bisect_digits`` wide, then Newton
    steps (``df`` given) or secant steps, each safeguarded to stay inside the
    current bracket.  Returns ``(lo, hi)`` with ``f(lo)*f(hi) <= 0``.
    """
    mp = ctx.mp
    digits = ctx.digits if digits is None else digits
    if max_evals is None:
        max_evals = 20 * digits
    lo, hi = (ctx.mpf(v) for v in bracket)
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    evals = 2
    if flo == 0:
        return lo, lo
    if fhi == 0:
        return hi, hi
    if (flo > 0) == (fhi > 0):
        raise InvalidBracketError(f"f has the same sign at both ends of [{mpmath.nstr(lo, 15)}, {mpmath.nstr(hi, 15)}]")

    floor = mp.mpf(10) ** (-ctx.working_digits)

    def width_tol(d):
        return mp.mpf(10) ** (-d) * max(abs(lo), abs(hi)) + floor

    def update(x, fx):
        nonlocal lo, hi, flo, fhi
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx

    while hi - lo > width_tol(bisect_digits):
        if evals >= max_evals:
            raise ConvergenceError(f"root bracket not resolved after {evals} evaluations")
        mid = (lo + hi) / 2
        fm = f(mid)
        evals += 1
        if fm == 0:
            return mid, mid
        update(mid, fm)

    tol = width_tol(digits)
    # secant memory: the two most recent points
    x0, f0 = (lo, flo) if abs(flo) > abs(fhi) else (hi, fhi)
    x1, f1 = (hi, fhi) if x0 is lo else (lo, flo)
    while hi - lo > tol:
        if evals >= max_evals:
            raise ConvergenceError(f"root bracket not resolved after {evals} evaluations")
        if df is not None:
            d = df(x1)
            evals += 1
            step = -f1 / d if d != 0 else None
        else:
            step = -f1 * (x1 - x0) / (f1 - f0) if f1 != f0 else None
        if step is None:
            x_new = (lo + hi) / 2
        else:
            x_new = x1 + step
            if not (lo < x_new < hi):
                x_new = (lo + hi) / 2
        f_new = f(x_new)
        evals += 1
        if f_new == 0:
            return x_new, x_new
        update(x_new, f_new)
        if step is not None and abs(step) < tol and hi - lo > tol:
            # converging from one side: probe just past the iterate to close the bracket
            probe = x_new + (tol / 2 if step > 0 else -tol / 2)
            if lo < probe < hi:
                fp = f(probe)
                evals += 1
                if fp == 0:
                    return probe, probe
                update(probe, fp)
        x0, f0, x1, f1 = x1, f1, x_new, f_new
    return lo, hi


def find_root(
    f: Callable,
    bracket: Sequence,
    ctx: PrecisionContext,
    df: Optional[Callable] = None,
    bisect_digits: int = 10,
) -> mpmath.mpf:
    """Root of ``f`` inside ``bracket`` to ``ctx.digits`` relative digits.

    Raises InvalidBracketError if f has equal signs at the endpoints and
    ConvergenceError after 20*digits evaluations.
    """
    lo, hi = bracket_root(f, bracket, ctx, df=df, bisect_digits=bisect_digits)
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    # linear interpolation inside the final bracket
    return lo - flo * (hi - lo) / (fhi - flo)


def _compute_constants(ctx: PrecisionContext) -> FundamentalConstants:
    mp = ctx.mp
    j01 = find_root(
        lambda x: bessel_j(0, x, ctx),
        (2, 3),
        ctx,
        df=lambda x: -bessel_j(1, x, ctx),
    )
    return FundamentalConstants(+mp.pi, j01, j01 * j01)


def fundamental_constants(ctx: PrecisionContext) -> FundamentalConstants:
    """(pi, j01, rho = j01**2) at the precision of ``ctx``; cached per context."""
    return ctx.constants
