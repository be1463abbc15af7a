"""Power-series models of the fundamental eigenvalue and interpolating fits.

Two expansions are supported:

* Maclaurin, lambda_0/rho = sum C_nu e^(2 nu), constant area;
* asymptotic, lambda'_0 = sum c_nu eps^nu (nu >= -2), unit semi-major axis.

A :class:`SeriesModel` lists the powers of the abscissa that appear and which
leading coefficients are already known exactly.  :func:`fit_interpolating`
solves for the rest from eigenvalue records; :func:`estimate_trusted_digits`
perturbs the data to see how many digits of each coefficient survive.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import mpmath

from .closed_forms import ASYMPTOTIC, MACLAURIN, LaurentForm
from .geometry import Convention, EigenvalueRecord
from .mp_numerics import PrecisionContext, SingularMatrixError, fundamental_constants, least_squares, solve_full_pivot


class SeriesError(ValueError):
    pass


class SingularSystemError(SeriesError):
    """The interpolation system is singular (typically repeated abscissae)."""


class InsufficientDataError(SeriesError):
    pass


class ConventionMismatchError(SeriesError):
    pass


class DeflationUnderflowError(ArithmeticError):
    pass


class SeriesVariable(enum.Enum):
    EVEN_ECCENTRICITY = "e2"
    STRETCH = "eps"


class Dependent(enum.Enum):
    LAMBDA_OVER_RHO = "lambda/rho"
    LAMBDA_PRIME = "lambda'"

    @property
    def convention(self) -> Convention:
        if self is Dependent.LAMBDA_OVER_RHO:
            return Convention.CONSTANT_AREA
        return Convention.CONSTANT_SEMI_MAJOR


Coefficient = Union[LaurentForm, Fraction, int, str, mpmath.mpf]


def coefficient_value(value: Coefficient, ctx: PrecisionContext) -> mpmath.mpf:
    """Numeric value of an exact or numeric coefficient at ``ctx`` precision."""
    if isinstance(value, LaurentForm):
        return value.evaluate(ctx)
    return ctx.mpf(value)


@dataclass(frozen=True)
class SeriesModel:
    """Which powers of the abscissa appear, and the exactly known leading ones.

    ``exponents`` are the actual powers: 0, 2, 4, ... of e for the Maclaurin
    form and -2, -1, 0, ... of eps for the asymptotic one.
    """

    variable: SeriesVariable
    exponents: Tuple[int, ...]
    dependent: Dependent
    known_prefix: Tuple[Tuple[int, Coefficient], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(int(p) for p in self.exponents))
        object.__setattr__(self, "known_prefix", tuple((int(p), v) for p, v in self.known_prefix))
        ex = self.exponents
        if not ex:
            raise ValueError("a series model needs at least one exponent")
        if any(b <= a for a, b in zip(ex, ex[1:])):
            raise ValueError("exponents must be strictly increasing")
        if self.variable is SeriesVariable.EVEN_ECCENTRICITY:
            if any(p < 0 or p % 2 for p in ex):
                raise ValueError("Maclaurin exponents must be even and >= 0")
        elif ex[0] < -2:
            raise ValueError("asymptotic exponents start at -2")
        known = tuple(p for p, _ in self.known_prefix)
        if known != ex[: len(known)]:
            raise ValueError("known_prefix exponents must be a prefix of the exponent schedule")

    @classmethod
    def maclaurin(cls, n_terms: int, known_terms: int = 0) -> "SeriesModel":
        """C_0 .. C_{n_terms-1}; the first ``known_terms`` taken from the exact table."""
        if known_terms > len(MACLAURIN):
            raise ValueError(f"only {len(MACLAURIN)} Maclaurin coefficients are tabulated")
        prefix = tuple((2 * nu, MACLAURIN[nu]) for nu in range(known_terms))
        return cls(SeriesVariable.EVEN_ECCENTRICITY, tuple(range(0, 2 * n_terms, 2)), Dependent.LAMBDA_OVER_RHO, prefix)

    @classmethod
    def asymptotic(cls, nu_max: int, known_terms: int = 0) -> "SeriesModel":
        """c_-2 .. c_nu_max; the first ``known_terms`` taken from the exact table."""
        if known_terms > len(ASYMPTOTIC):
            raise ValueError(f"only {len(ASYMPTOTIC)} asymptotic coefficients are tabulated")
        prefix = tuple((nu, ASYMPTOTIC[nu]) for nu in range(-2, -2 + known_terms))
        return cls(SeriesVariable.STRETCH, tuple(range(-2, nu_max + 1)), Dependent.LAMBDA_PRIME, prefix)

    @property
    def unknown_exponents(self) -> Tuple[int, ...]:
        return self.exponents[len(self.known_prefix):]

    def index(self, exponent: int) -> int:
        """Series index nu of a power: exponent/2 for Maclaurin, the power itself otherwise."""
        return exponent // 2 if self.variable is SeriesVariable.EVEN_ECCENTRICITY else exponent

    def power(self, nu: int) -> int:
        return 2 * nu if self.variable is SeriesVariable.EVEN_ECCENTRICITY else nu

    def with_known(self, extra: Sequence[Tuple[int, Coefficient]]) -> "SeriesModel":
        return SeriesModel(self.variable, self.exponents, self.dependent, self.known_prefix + tuple(extra))

    def reduced(self) -> "SeriesModel":
        """Model for deflated data: unknown exponents shifted so the first is 0."""
        unknown = self.unknown_exponents
        if not unknown:
            raise ValueError("no unknown coefficients left")
        base = unknown[0]
        return SeriesModel(self.variable, tuple(p - base for p in unknown), self.dependent)


class SeriesPoint(NamedTuple):
    """One abscissa/ordinate pair of series data with its trusted digit count."""

    x: mpmath.mpf
    y: mpmath.mpf
    digits: int


@dataclass
class SeriesFit:
    model: SeriesModel
    coefficients: List[mpmath.mpf]
    trusted_digits: List[int]
    data_fingerprint: str
    residual: Optional[mpmath.mpf] = None
    extras: dict = field(default_factory=dict)

    def coefficient(self, nu: int) -> mpmath.mpf:
        """Fitted coefficient with series index ``nu``."""
        p = self.model.power(nu)
        return self.coefficients[self.model.unknown_exponents.index(p)]

    def indices(self) -> List[int]:
        return [self.model.index(p) for p in self.model.unknown_exponents]

    def digits_for(self, nu: int) -> int:
        p = self.model.power(nu)
        return self.trusted_digits[self.model.unknown_exponents.index(p)]


# ---------------------------------------------------------------------------
# data preparation
# ---------------------------------------------------------------------------

def model_points(records: Sequence, model: SeriesModel, ctx: PrecisionContext) -> List[SeriesPoint]:
    """(x, y) pairs for ``model`` from eigenvalue records (SeriesPoints pass through)."""
    points = []
    rho = None
    for rec in records:
        if isinstance(rec, SeriesPoint):
            points.append(SeriesPoint(ctx.mpf(rec.x), ctx.mpf(rec.y), rec.digits))
            continue
        if rec.convention is not model.dependent.convention:
            raise ConventionMismatchError(
                f"record at e={rec.shape.e} uses {rec.convention.value}, model wants {model.dependent.convention.value}"
            )
        lam = ctx.mpf(rec.lam)
        if model.dependent is Dependent.LAMBDA_OVER_RHO:
            if rho is None:
                rho = fundamental_constants(ctx).rho
            y = lam / rho
        else:
            y = lam
        if model.variable is SeriesVariable.EVEN_ECCENTRICITY:
            x = rec.shape.ecc(ctx)
        else:
            x = rec.shape.stretch(ctx)
        points.append(SeriesPoint(x, y, rec.digits_claimed))
    return points


def data_fingerprint(records: Sequence) -> str:
    """sha256 over a canonical, order-independent text form of the records."""
    lines = []
    for rec in records:
        if isinstance(rec, SeriesPoint):
            lines.append(f"x={mpmath.nstr(rec.x, 60)} y={mpmath.nstr(rec.y, 60)} d={rec.digits}")
        else:
            lam = mpmath.nstr(rec.lam, rec.digits_claimed + 2)
            lines.append(f"e={rec.shape.e} c={rec.convention.value} d={rec.digits_claimed} l={lam}")
    return hashlib.sha256("\n".join(sorted(lines)).encode()).hexdigest()


def _known_sum(model: SeriesModel, x, ctx: PrecisionContext):
    total = ctx.mp.zero
    for p, v in model.known_prefix:
        total += coefficient_value(v, ctx) * x ** p
    return total


def _fit_values(xs: list, ys: list, exponents: Sequence[int], ctx: PrecisionContext):
    """Coefficients of sum_j c_j x^p_j through the points, with x rescaled to O(1)."""
    mp = ctx.mp
    n = len(exponents)
    if len(xs) < n:
        raise InsufficientDataError(f"{len(xs)} data points for {n} unknown coefficients")
    if len(set(mpmath.nstr(x, mp.dps) for x in xs)) < len(xs):
        raise SingularSystemError("repeated abscissae")
    if any(x == 0 for x in xs) and any(p < 0 for p in exponents):
        raise SingularSystemError("negative power at x = 0")
    s = max(abs(x) for x in xs)
    a = [[(x / s) ** p for p in exponents] for x in xs]
    try:
        z = solve_full_pivot(a, ys, mp) if len(xs) == n else least_squares(a, ys, mp)
    except SingularMatrixError as exc:
        raise SingularSystemError(str(exc)) from exc
    coeffs = [zj / s ** p for zj, p in zip(z, exponents)]
    resid = max(abs(y - mp.fsum(c * x ** p for c, p in zip(coeffs, exponents))) for x, y in zip(xs, ys))
    return coeffs, resid


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def _prepared(records, model: SeriesModel, ctx: PrecisionContext, factor=None):
    points = model_points(records, model, ctx)
    if not model.unknown_exponents:
        raise InsufficientDataError("model has no unknown coefficients")
    xs = [p.x for p in points]
    ys = []
    for p in points:
        y = p.y if factor is None else p.y * factor
        ys.append(y - _known_sum(model, p.x, ctx))
    return points, xs, ys


def fit_interpolating(
    records: Sequence,
    model: SeriesModel,
    ctx: PrecisionContext,
    relative_perturbation=None,
) -> SeriesFit:
    """Fit the unknown coefficients of ``model`` through the records.

    Known-prefix terms are subtracted from the dependent values first.  A
    square system is interpolated exactly; extra records turn it into a
    least-squares fit.  Trusted digits come from :func:`estimate_trusted_digits`
    with ``relative_perturbation`` (default 10**-(worst digits_claimed)).
    """
    points, xs, ys = _prepared(records, model, ctx)
    coeffs, resid = _fit_values(xs, ys, model.unknown_exponents, ctx)
    trusted = _trusted_from(coeffs, records, points, model, ctx, relative_perturbation)
    return SeriesFit(model, coeffs, trusted, data_fingerprint(records), resid)


def _trusted_from(coeffs, records, points, model, ctx, relative_perturbation) -> List[int]:
    worst = min(p.digits for p in points)
    delta = ctx.mpf(10) ** (-worst) if relative_perturbation is None else ctx.mpf(relative_perturbation)
    fits = []
    for sign in (1, -1):
        _, xs, ys = _prepared(records, model, ctx, factor=1 + sign * delta)
        fits.append(_fit_values(xs, ys, model.unknown_exponents, ctx)[0])
    cap = max(0, worst - 2)
    out = []
    for c, up, down in zip(coeffs, *fits):
        if (up > 0) != (down > 0) or up == 0 or down == 0:
            out.append(0 if up != down else cap)
            continue
        diff = abs(up - down)
        if diff == 0:
            out.append(cap)
            continue
        d = int(mpmath.floor(-mpmath.log10(diff / abs(c if c else up))))
        out.append(max(0, min(d, cap)))
    return out


def estimate_trusted_digits(
    records: Sequence,
    model: SeriesModel,
    ctx: PrecisionContext,
    relative_perturbation=None,
) -> List[int]:
    """Digits of each fitted coefficient that survive scaling the data by 1 +/- delta.

    D = floor(-log10 |c(+delta) - c(-delta)| / |c|), 0 when the two refits
    disagree in sign, and never more than the worst input claim less two.
    """
    points, xs, ys = _prepared(records, model, ctx)
    coeffs, _ = _fit_values(xs, ys, model.unknown_exponents, ctx)
    return _trusted_from(coeffs, records, points, model, ctx, relative_perturbation)


def deflate_known(records: Sequence, model: SeriesModel, ctx: PrecisionContext) -> List[SeriesPoint]:
    """Subtract the known terms and divide by x^(first unknown power).

    The constant term of the returned data is the first unknown coefficient;
    fit it with ``model.reduced()``.  Each point's digit count drops by the
    number of leading digits cancelled in the subtraction.
    """
    if not model.known_prefix:
        raise ValueError("deflation needs a non-empty known prefix")
    if not model.unknown_exponents:
        raise ValueError("no unknown coefficients left to expose")
    nxt = model.unknown_exponents[0]
    out = []
    for p in model_points(records, model, ctx):
        if p.x == 0 and nxt > 0:
            raise DeflationUnderflowError("cannot divide by a power of x = 0")
        xp = p.x ** nxt
        if xp == 0 or not mpmath.isfinite(xp):
            raise DeflationUnderflowError(f"x^{nxt} underflows at x = {mpmath.nstr(p.x, 10)}")
        rest = p.y - _known_sum(model, p.x, ctx)
        lost = 0
        if rest != 0 and p.y != 0:
            lost = max(0, int(math.ceil(float(mpmath.log10(abs(p.y) / abs(rest))))))
        out.append(SeriesPoint(p.x, rest / xp, max(1, p.digits - lost)))
    return out


def evaluate_series(model, x, ctx: PrecisionContext, coefficients: Optional[Sequence] = None) -> mpmath.mpf:
    """Partial sum of a model at ``x``: known prefix plus the given coefficients.

    ``model`` may also be a :class:`SeriesFit`, whose coefficients are used.
    """
    if isinstance(model, SeriesFit):
        coefficients = model.coefficients if coefficients is None else coefficients
        model = model.model
    x = ctx.mpf(x)
    total = _known_sum(model, x, ctx)
    if coefficients is not None:
        unknown = model.unknown_exponents
        if len(coefficients) > len(unknown):
            raise ValueError("more coefficients than unknown exponents")
        for p, c in zip(unknown, coefficients):
            total += coefficient_value(c, ctx) * x ** p
    return total


def known_maclaurin_model(ctx: Optional[PrecisionContext] = None) -> SeriesModel:
    """lambda_0/rho through e^26 with every coefficient exact."""
    return SeriesModel.maclaurin(len(MACLAURIN), len(MACLAURIN))


def known_asymptotic_model(ctx: Optional[PrecisionContext] = None) -> SeriesModel:
    """lambda'_0 through eps^5 with every coefficient exact."""
    return SeriesModel.asymptotic(max(ASYMPTOTIC), len(ASYMPTOTIC))


def tail_bound(model: SeriesModel, x, ctx: PrecisionContext):
    """Crude size of the first omitted term of a fully known model, with a geometric tail.

    Uses the last coefficient as a stand-in for the next one, which suits
    both tabulated series (their late coefficients change slowly).
    """
    x = abs(ctx.mpf(x))
    p_last, c_last = model.known_prefix[-1]
    step = model.exponents[-1] - model.exponents[-2]
    nxt = x ** (p_last + step)
    ratio = x ** step
    if ratio >= 1:
        return ctx.mp.inf
    return abs(coefficient_value(c_last, ctx)) * nxt / (1 - ratio)
