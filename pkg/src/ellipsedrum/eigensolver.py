"""Fundamental Dirichlet eigenvalue of the ellipse by boundary point matching.

The trial eigenfunction is a truncated Fourier-Bessel expansion about the
centre using only the doubly-even terms J_2k(sqrt(lam) r) cos(2k theta),
k = 0..M-1, which is the symmetry class of the fundamental mode.  It is
matched to zero at N points on the open first-quadrant arc.

With N = M the system is square and an eigenvalue is a sign change of its
determinant.  The default is N > M: the coefficient of J_0 is pinned to one,
the rest are fitted by least squares, and the summed boundary residual is
the signed function whose root is the eigenvalue.  That function is nearly
linear in lambda near the root, whereas the determinant of a large square
system acquires spurious sign changes when the basis becomes numerically
redundant (thin ellipses).  Roots are certified by comparing a ladder of
basis sizes.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from operator import mul
from typing import List, Optional, Sequence, Tuple

import mpmath
from mpmath.libmp import MPZ, to_fixed

from .geometry import Convention, EigenvalueRecord, EllipseShape, SolverMeta
from .mp_numerics import (
    InvalidBracketError,
    PrecisionContext,
    bessel_j_sequence,
    bracket_root,
    fundamental_constants,
    least_squares,
)

log = logging.getLogger(__name__)

MAX_ECCENTRICITY = mpmath.mpf("0.9999995")


class NoSignChangeError(ArithmeticError):
    """The seed bracket does not contain a sign change of the residual function."""


class CertificationError(ArithmeticError):
    """Successive basis sizes stopped agreeing before the target was reached."""


class PointDistribution(enum.Enum):
    UNIFORM = "uniform"
    CHEBYSHEV = "cheb"

    @classmethod
    def parse(cls, value) -> "PointDistribution":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("cheb", "chebyshev", "chebyshevparameter"):
            return cls.CHEBYSHEV
        if v in ("uniform", "uniformparameter"):
            return cls.UNIFORM
        raise ValueError(f"unknown point distribution {value!r}")


@dataclass
class SolverConfig:
    """Knobs for :func:`solve_fundamental`.

    ``basis_size`` is the first rung of the certification ladder; ``None``
    picks it from the shape.  ``collocation_count`` fixes N for that rung and
    the ratio N/M for later ones; ``None`` means about 1.25 M points, and
    N = M selects the square determinant.  ``working_digits`` raises the
    working precision above its default, which is a few digits past the
    target plus about M/6 digits lost to column scaling on thin ellipses.
    """

    basis_size: Optional[int] = None
    collocation_count: Optional[int] = None
    target_digits: int = 30
    point_distribution: PointDistribution = PointDistribution.CHEBYSHEV
    bracket_pad: float = 0.05
    ladder_step: int = 4
    max_basis_size: int = 2000
    working_digits: Optional[int] = None
    safety_digits: int = 2

    def __post_init__(self):
        self.point_distribution = PointDistribution.parse(self.point_distribution)
        if self.basis_size is not None and self.basis_size < 2:
            raise ValueError("basis_size must be >= 2")
        if self.collocation_count is not None:
            if self.basis_size is None:
                raise ValueError("collocation_count needs an explicit basis_size")
            if self.collocation_count < self.basis_size:
                raise ValueError("collocation_count must be >= basis_size")
        if self.ladder_step < 1:
            raise ValueError("ladder_step must be positive")
        if self.target_digits < 1:
            raise ValueError("target_digits must be positive")
        if not 0 < self.bracket_pad < 1:
            raise ValueError("bracket_pad must lie in (0, 1)")


# ---------------------------------------------------------------------------
# geometry of the collocation
# ---------------------------------------------------------------------------

def collocation_parameters(n: int, distribution, ctx: PrecisionContext) -> list:
    """Parameter values t in (0, pi/2) of the quarter arc (x, y) = (a cos t, b sin t)."""
    mp = ctx.mp
    distribution = PointDistribution.parse(distribution)
    quarter = mp.pi / 2
    if distribution is PointDistribution.UNIFORM:
        return [quarter * (2 * i - 1) / (2 * n) for i in range(1, n + 1)]
    return [quarter * (1 - mp.cos((2 * i - 1) * mp.pi / (2 * n))) / 2 for i in range(1, n + 1)]


def boundary_points(shape: EllipseShape, n: int, distribution, ctx: PrecisionContext) -> List[Tuple]:
    """``n`` collocation points on the open first-quadrant arc, as polar (r, theta)."""
    if n < 1:
        raise ValueError("need at least one boundary point")
    mp = ctx.mp
    a, b = shape.semi_axes(ctx)
    pts = []
    for t in collocation_parameters(n, distribution, ctx):
        x, y = a * mp.cos(t), b * mp.sin(t)
        pts.append((mp.hypot(x, y), mp.atan2(y, x)))
    return pts


def _cos_multiples(theta, m: int, mp) -> list:
    """cos(2k theta) for k = 0..m-1 by the Chebyshev recurrence."""
    c2 = mp.cos(2 * theta)
    out = [mp.one, c2][:m]
    while len(out) < m:
        out.append(2 * c2 * out[-1] - out[-2])
    return out


def collocation_matrix(lam, points: Sequence[Tuple], m: int, ctx: PrecisionContext) -> list:
    """Rows J_2k(sqrt(lam) r_i) cos(2k theta_i), k = 0..m-1, one per point.

    Square when ``len(points) == m``; taller for the least-squares residual.
    """
    mp = ctx.mp
    lam = ctx.mpf(lam)
    if lam <= 0:
        raise ValueError("trial eigenvalue must be positive")
    kappa = mp.sqrt(lam)
    rows = []
    for r, theta in points:
        j = bessel_j_sequence(2 * (m - 1), kappa * r, mp)
        c = _cos_multiples(theta, m, mp)
        rows.append([j[2 * k] * c[k] for k in range(m)])
    return rows


def _fixed_columns(rows: list, bits: int, keep_first: bool = False) -> list:
    """Columns of ``rows`` scaled by powers of two to max-entry in [1/2, 1), as bits-bit integers.

    With ``keep_first`` column 0 is left unscaled, so that a function built
    from it stays continuous in the trial eigenvalue.
    """
    n = len(rows)
    m = len(rows[0])
    cols = []
    for k in range(m):
        col = [rows[i][k] for i in range(n)]
        big = max(col, key=abs)
        if not big or (keep_first and k == 0):
            cols.append([to_fixed(v._mpf_, bits) for v in col])
            continue
        # binary exponent of the largest entry; scaling by 2**-shift is exact
        _, _, exp, bc = big._mpf_
        shift = exp + bc
        cols.append([to_fixed(v._mpf_, bits - shift) for v in col])
    return cols


def _to_fixed(rows: list, bits: int) -> list:
    """Equilibrate columns then rows by powers of two and round to bits-bit fixed point."""
    cols = _fixed_columns(rows, bits)
    m = len(cols)
    out = []
    for i in range(len(rows)):
        row = [cols[k][i] for k in range(m)]
        big = max(abs(v) for v in row)
        if not big:
            out.append(row)
            continue
        shift = bits - big.bit_length()
        out.append([v << shift for v in row] if shift >= 0 else [v >> -shift for v in row])
    return out


def fixed_point_determinant(a: list, bits: int, mp) -> mpmath.mpf:
    """Determinant of a square fixed-point integer matrix (entries scaled by 2**bits).

    Gaussian elimination with partial pivoting on integers; returns the
    product of pivots as an mpf.
    """
    n = len(a)
    a = [[MPZ(v) for v in row] for row in a]
    det = mp.one
    for j in range(n):
        p = max(range(j, n), key=lambda i: abs(a[i][j]))
        piv = a[p][j]
        if piv == 0:
            return mp.zero
        if p != j:
            a[j], a[p] = a[p], a[j]
            det = -det
        det *= mp.ldexp(piv, -bits)
        pivot_tail = a[j][j + 1:]
        for i in range(j + 1, n):
            row = a[i]
            if row[j] == 0:
                continue
            ratio = (row[j] << bits) // piv
            row[j + 1:] = [u - ((ratio * v) >> bits) for u, v in zip(row[j + 1:], pivot_tail)]
    return det


def scaled_determinant(lam, points, m: int, ctx: PrecisionContext) -> mpmath.mpf:
    """det of the equilibrated square collocation matrix; its sign changes at an eigenvalue.

    Equilibration multiplies the determinant by a positive factor, so roots and
    signs are those of the raw determinant.
    """
    if len(points) != m:
        raise ValueError("the determinant needs exactly m collocation points")
    rows = collocation_matrix(lam, points, m, ctx)
    bits = ctx.mp.prec
    return fixed_point_determinant(_to_fixed(rows, bits), bits, ctx.mp)


def projected_residual(cols: list, bits: int) -> int:
    """Sum of the component of ``cols[0]`` orthogonal to ``cols[1:]``.

    Modified Gram-Schmidt on fixed-point integer columns.  With the trial
    function normalised to coefficient one on J_0, this is the sum over the
    collocation points of the least-squares boundary residual.
    """
    b = list(cols[0])
    rest = [list(c) for c in cols[1:]]
    for k, q in enumerate(rest):
        nq = sum(map(mul, q, q))
        if not nq:
            continue
        for j in range(k + 1, len(rest)):
            a = rest[j]
            c = (sum(map(mul, q, a)) << bits) // nq
            if c:
                rest[j] = [u - ((c * v) >> bits) for u, v in zip(a, q)]
        c = (sum(map(mul, q, b)) << bits) // nq
        if c:
            b = [u - ((c * v) >> bits) for u, v in zip(b, q)]
    return sum(b)


def boundary_residual(lam, points, m: int, ctx: PrecisionContext) -> mpmath.mpf:
    """Signed least-squares boundary residual of the centre-normalised trial function.

    Over N > m points, fit sum_k c_k J_2k(sqrt(lam) r) cos(2k theta) with
    c_0 = 1 to zero in the least-squares sense and return the summed
    residual.  It is smooth in ``lam`` and changes sign once at the
    eigenvalue, unlike the square determinant, which picks up spurious sign
    changes once the basis becomes numerically redundant.
    """
    if len(points) <= m - 1:
        raise ValueError("need more collocation points than free coefficients")
    rows = collocation_matrix(lam, points, m, ctx)
    bits = ctx.mp.prec
    # |J_0| <= 1 needs no scaling; the other columns' scales cancel in the projection
    return ctx.mp.ldexp(projected_residual(_fixed_columns(rows, bits, keep_first=True), bits), -bits)


def eigenfunction_coefficients(lam, points, m: int, ctx: PrecisionContext) -> list:
    """Coefficients c_0 = 1, c_1..c_{m-1} of the least-squares trial function at ``lam``."""
    rows = collocation_matrix(lam, points, m, ctx)
    if m == 1:
        return [ctx.mp.one]
    a = [row[1:] for row in rows]
    b = [-row[0] for row in rows]
    # column scaling keeps the Gram-Schmidt well balanced; undo it afterwards
    scales = [max(abs(row[k]) for row in a) or ctx.mp.one for k in range(m - 1)]
    a = [[v / s for v, s in zip(row, scales)] for row in a]
    z = least_squares(a, b, ctx.mp)
    return [ctx.mp.one] + [zk / s for zk, s in zip(z, scales)]


def eigenfunction_values(lam, coefficients, points, ctx: PrecisionContext) -> list:
    """Trial function sum_k c_k J_2k(sqrt(lam) r) cos(2k theta) at polar ``points``."""
    m = len(coefficients)
    rows = collocation_matrix(lam, points, m, ctx)
    return [ctx.mp.fsum(c * v for c, v in zip(coefficients, row)) for row in rows]


def midpoint_residual(record: EigenvalueRecord, ctx: PrecisionContext, distribution=None) -> mpmath.mpf:
    """max |u| at the parameter midpoints between the collocation points of ``record``.

    u is the centre-normalised (u(0) = 1) trial function of the final rung,
    so this is the relative boundary defect away from the matching points.
    """
    meta = record.solver_meta
    if meta is None:
        raise ValueError("record carries no solver metadata")
    dist = PointDistribution.parse(distribution or meta.distribution)
    pts = boundary_points(record.shape, meta.collocation_count, dist, ctx)
    coeffs = eigenfunction_coefficients(record.lam, pts, meta.basis_size, ctx)
    ts = collocation_parameters(meta.collocation_count, dist, ctx)
    mids = [(u + v) / 2 for u, v in zip(ts, ts[1:])]
    a, b = record.shape.semi_axes(ctx)
    mp = ctx.mp
    mid_pts = [(mp.hypot(a * mp.cos(t), b * mp.sin(t)), mp.atan2(b * mp.sin(t), a * mp.cos(t))) for t in mids]
    return max(abs(v) for v in eigenfunction_values(record.lam, coeffs, mid_pts, ctx))


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

def _seed_and_error(shape: EllipseShape, ctx: PrecisionContext):
    """Series prediction of lambda_0 and a rough relative error for it.

    Whichever of the Maclaurin and asymptotic partial sums has the smaller
    estimated truncation error is used.
    """
    from .series import evaluate_series, known_asymptotic_model, known_maclaurin_model, tail_bound

    mp = ctx.mp
    e = shape.ecc(ctx)
    eps = shape.stretch(ctx)
    mac = known_maclaurin_model()
    mac_err = tail_bound(mac, e, ctx)
    asy_err = mp.inf
    if e > mpmath.mpf("0.5"):
        asy = known_asymptotic_model()
        asy_val = evaluate_series(asy, eps, ctx)
        asy_err = tail_bound(asy, eps, ctx) / asy_val
    if mac_err <= asy_err:
        lam_area = fundamental_constants(ctx).rho * evaluate_series(mac, e, ctx)
        lam_semi = lam_area / eps
        err = mac_err
    else:
        lam_semi = asy_val
        lam_area = lam_semi * eps
        err = asy_err
    lam = lam_area if shape.convention is Convention.CONSTANT_AREA else lam_semi
    return lam, err


def seed_eigenvalue(shape: EllipseShape, ctx: PrecisionContext) -> mpmath.mpf:
    """Series prediction of lambda_0 used to centre the initial bracket."""
    return _seed_and_error(shape, ctx)[0]


def relative_gap(shape: EllipseShape, ctx: PrecisionContext) -> float:
    """Rough relative distance from lambda_0 to the next eigenvalue of its symmetry class.

    Near the circle that is (j_21/j_01)^2 - 1; for a thin ellipse the next
    doubly-even mode sits about 2 pi/eps above pi^2/(4 eps^2), a relative
    gap of 8 eps/pi.
    """
    eps = float(shape.stretch(ctx))
    return min(3.5, 8 * eps / math.pi)


def _scale_length(shape: EllipseShape, lam, ctx) -> float:
    """sqrt(lam) * a: the largest Bessel argument on the boundary."""
    a, _ = shape.semi_axes(ctx)
    return float(ctx.mp.sqrt(lam) * a)


def default_basis_size(shape: EllipseShape, target_digits: int, ctx: PrecisionContext) -> int:
    """First rung of the ladder.

    Calibrated on least-squares solves: the first rung gives a few tens of
    digits from circle to eps ~ 0.003; the ladder extrapolates from there.
    """
    x = _scale_length(shape, seed_eigenvalue(shape, ctx), ctx)
    return max(4, int(math.ceil(8 + 0.35 * x)))


def default_collocation_count(m: int) -> int:
    return m + max(2, (m + 3) // 4)


@dataclass
class LadderStep:
    basis_size: int
    collocation_count: int
    lam: mpmath.mpf
    bracket: Tuple[mpmath.mpf, mpmath.mpf]
    evaluations: int = 0
    agreement: Optional[int] = None


@dataclass
class SolveTrace:
    steps: List[LadderStep] = field(default_factory=list)


def agreeing_digits(a, b) -> int:
    """Number of leading significant digits on which a and b agree."""
    if a == b:
        return 10 ** 6
    scale = max(abs(a), abs(b))
    diff = abs(a - b)
    if scale == 0:
        return 0
    return max(0, int(mpmath.floor(-mpmath.log10(diff / scale))))


def _collocation_counts(config: SolverConfig, m0: int):
    """Map M to N, keeping the oversampling ratio of an explicit collocation_count."""
    if config.collocation_count is None:
        return default_collocation_count
    ratio = Fraction(config.collocation_count, m0)
    return lambda m: int(math.ceil(m * ratio))


def residual_function(shape: EllipseShape, m: int, n: int, distribution, ctx: PrecisionContext):
    """The signed function of lambda whose root is the rung-(m, n) eigenvalue.

    The square determinant when n == m, otherwise the least-squares boundary
    residual.
    """
    pts = boundary_points(shape, n, distribution, ctx)
    if n == m:
        return lambda lam: scaled_determinant(lam, pts, m, ctx)
    return lambda lam: boundary_residual(lam, pts, m, ctx)


def _locate(shape, m, n, lo, hi, ctx, distribution, digits):
    calls = [0]
    g = residual_function(shape, m, n, distribution, ctx)

    def f(lam):
        calls[0] += 1
        return g(lam)

    try:
        a, b = bracket_root(f, (lo, hi), ctx, bisect_digits=0, digits=digits)
    except InvalidBracketError as exc:
        raise NoSignChangeError(
            f"no sign change in [{mpmath.nstr(lo, 20)}, {mpmath.nstr(hi, 20)}] at M={m}, N={n}"
        ) from exc
    return a, b, calls[0]


def _next_basis_size(history, m: int, step: int, need: int, cap: int) -> int:
    """Next rung: one step, or a jump along the fitted digits-per-M line.

    ``history`` holds (M, digits of lambda(M)) pairs measured by agreement with
    the following rung.  Digits grow about linearly in M, so two points give
    the slope; jumps land on the M0 + step*j lattice and at most double M.
    """
    if len(history) < 2:
        return m + step
    (m1, d1), (m2, d2) = history[-2], history[-1]
    if m2 <= m1 or d2 <= d1:
        return m + step
    slope = (d2 - d1) / (m2 - m1)
    want = m2 + (need + 3 - d2) / slope
    if want <= m + step:
        return m + step
    jumps = int(math.ceil((want - m) / step))
    return min(m + jumps * step, 2 * m + step, max(cap, m + step))


def solve_fundamental(
    shape: EllipseShape,
    config: Optional[SolverConfig] = None,
    ctx: Optional[PrecisionContext] = None,
    trace: Optional[SolveTrace] = None,
) -> EigenvalueRecord:
    """lambda_0 of ``shape`` under its area convention, certified to ``config.target_digits``.

    Solves at a ladder of basis sizes M and claims the digits on which the
    last two rungs agree, less ``safety_digits``.  Each rung localises a sign
    change of its residual function to a few digits beyond the target.
    """
    config = config or SolverConfig()
    target = config.target_digits
    if ctx is None:
        ctx = PrecisionContext(max(10, target + 10))
    if target > ctx.digits:
        raise ValueError(f"target_digits {target} exceeds the context's {ctx.digits} digits")
    if shape.ecc(ctx) > MAX_ECCENTRICITY:
        raise ValueError(
            f"eccentricity {shape.e} beyond {MAX_ECCENTRICITY}: use the asymptotic series instead"
        )
    need = target + config.safety_digits
    rung_digits = need + 3
    m = config.basis_size or default_basis_size(shape, target, ctx)
    wctx = _working_context(ctx, config, rung_digits, m)

    seed, seed_err = _seed_and_error(shape, wctx)
    pad = min(ctx.mpf(config.bracket_pad), ctx.mpf(relative_gap(shape, ctx)) / 2)
    # no wider than the seed needs, but never so narrow that a coarse first rung misses
    pad = min(pad, max(100 * seed_err, ctx.mpf(10) ** -6))
    n_for = _collocation_counts(config, m)
    lo, hi = seed * (1 - pad), seed * (1 + pad)

    prev: Optional[LadderStep] = None
    history: list = []
    best = -1
    stalls = 0
    while True:
        if m > config.max_basis_size:
            raise CertificationError(f"basis size exceeded {config.max_basis_size} before {target} digits")
        n = n_for(m)
        wctx = _working_context(ctx, config, rung_digits, m)
        a, b, evals = _locate_widening(shape, m, n, lo, hi, seed * pad, wctx, config, rung_digits)
        lam = (a + b) / 2
        step = LadderStep(m, n, lam, (a, b), evals)
        if prev is not None:
            step.agreement = min(agreeing_digits(lam, prev.lam), rung_digits)
            history.append((prev.basis_size, step.agreement))
        if trace is not None:
            trace.steps.append(step)
        log.debug("M=%d N=%d lambda=%s agreement=%s evals=%d", m, n, mpmath.nstr(lam, 25), step.agreement, evals)
        if step.agreement is not None:
            claim = step.agreement - config.safety_digits
            if claim >= target:
                return EigenvalueRecord(
                    shape=shape,
                    lam=ctx.mpf(lam),
                    digits_claimed=claim,
                    solver_meta=SolverMeta(m, n, config.point_distribution.value),
                )
            if claim <= best:
                stalls += 1
                if stalls >= 3:
                    raise CertificationError(
                        f"agreement stalled at {best + config.safety_digits} digits (target {target}) for e={shape.e}"
                    )
            else:
                best, stalls = claim, 0
            width = abs(lam) * mpmath.mpf(10) ** (-max(3, step.agreement - 3))
        else:
            width = abs(lam) * pad
        lo, hi = lam - width, lam + width
        prev = step
        m = _next_basis_size(history, m, config.ladder_step, need, config.max_basis_size)


def _working_context(ctx, config, rung_digits: int, m: int) -> PrecisionContext:
    """Working precision for a rung with basis size ``m``.

    The collocation columns span many orders of magnitude on thin ellipses and
    the least-squares residual loses digits roughly in proportion to M; below
    that allowance the residual is noise and the sign change disappears.
    """
    floor = max(ctx.digits, config.working_digits or 0)
    return PrecisionContext(max(floor, rung_digits + 5 + m // 6), ctx.guard_digits)


def _locate_widening(shape, m, n, lo, hi, max_half_width, ctx, config, digits):
    """_locate, widening a narrow bracket (up to the initial pad) if it misses."""
    centre = (lo + hi) / 2
    half = (hi - lo) / 2
    while True:
        try:
            return _locate(shape, m, n, centre - half, centre + half, ctx, config.point_distribution, digits)
        except NoSignChangeError:
            if half >= max_half_width:
                raise
            half = min(half * 1000, max_half_width)
