"""Ellipse shape parameters, area conventions and eigenvalue records.

Two normalisations of the ellipse are used throughout:

``CONSTANT_AREA``
    area pi, semi-axes a = 1/sqrt(eps), b = sqrt(eps) so that a*b = 1.
``CONSTANT_SEMI_MAJOR``
    a = 1, b = eps, area pi*eps.

The stretch factor eps = b/a = sqrt(1 - e**2) is the ratio of minor to major
semi-axis.  Eigenvalue times area is the same in both conventions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from decimal import Decimal
from typing import Optional

import mpmath

from .mp_numerics import PrecisionContext


class DegenerateShapeError(ArithmeticError):
    pass


class Convention(enum.Enum):
    CONSTANT_AREA = "A"
    CONSTANT_SEMI_MAJOR = "Aprime"

    @classmethod
    def parse(cls, value) -> "Convention":
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        aliases = {
            "a": cls.CONSTANT_AREA,
            "area": cls.CONSTANT_AREA,
            "constant_area": cls.CONSTANT_AREA,
            "aprime": cls.CONSTANT_SEMI_MAJOR,
            "a'": cls.CONSTANT_SEMI_MAJOR,
            "semimajor": cls.CONSTANT_SEMI_MAJOR,
            "constant_semi_major": cls.CONSTANT_SEMI_MAJOR,
        }
        try:
            return aliases[key.lower()]
        except KeyError:
            raise ValueError(f"unknown area convention {value!r}") from None


def _check_ecc(e) -> None:
    if e < 0 or e >= 1:
        raise ValueError(f"eccentricity must lie in [0, 1), got {mpmath.nstr(e, 20)}")


def stretch_from_ecc(e, ctx: PrecisionContext) -> mpmath.mpf:
    """eps = sqrt(1 - e^2)."""
    given = e
    e = ctx.mpf(e)
    if e == 1 and isinstance(given, str) and Decimal(given) < 1:
        raise DegenerateShapeError(f"e={given} rounds to 1 at {ctx.working_digits} digits")
    _check_ecc(e)
    # (1-e)(1+e) avoids cancellation as e -> 1
    return ctx.mp.sqrt((1 - e) * (1 + e))


def ecc_from_stretch(eps, ctx: PrecisionContext) -> mpmath.mpf:
    eps = ctx.mpf(eps)
    if eps <= 0 or eps > 1:
        raise ValueError(f"stretch factor must lie in (0, 1], got {mpmath.nstr(eps, 20)}")
    return ctx.mp.sqrt((1 - eps) * (1 + eps))


@dataclass(frozen=True)
class EllipseShape:
    """An ellipse at eccentricity ``e`` under an area convention.

    ``e`` is stored as given (a decimal string keeps it exact); the stretch
    factor and semi-axes are recomputed at whatever precision is asked for.
    """

    e: str
    convention: Convention = Convention.CONSTANT_AREA

    def __init__(self, e, convention=Convention.CONSTANT_AREA):
        if isinstance(e, str):
            text = e.strip()
        elif isinstance(e, int):
            text = str(e)
        elif isinstance(e, float):
            text = repr(e)
        else:
            # mpf or similar: keep every digit it carries
            dps = getattr(getattr(e, "context", None), "dps", mpmath.mp.dps)
            text = mpmath.nstr(e, dps + 5, strip_zeros=True)
        if "e" in text.lower() and not text.lower().startswith(("inf", "nan")):
            # plain decimal notation keeps data files free of exponents
            text = format(Decimal(text), "f")
        try:
            exact = Decimal(text)
        except ArithmeticError:
            raise ValueError(f"not a decimal eccentricity: {text!r}") from None
        # compare exactly: at double precision 0.99...9 would round to 1
        if not (0 <= exact < 1):
            raise ValueError(f"eccentricity must lie in [0, 1), got {text}")
        object.__setattr__(self, "e", text)
        object.__setattr__(self, "convention", Convention.parse(convention))

    def ecc(self, ctx: PrecisionContext) -> mpmath.mpf:
        return ctx.mpf(self.e)

    def stretch(self, ctx: PrecisionContext) -> mpmath.mpf:
        return stretch_from_ecc(self.e, ctx)

    def semi_axes(self, ctx: PrecisionContext):
        """(a, b) with a >= b for this shape's convention."""
        eps = self.stretch(ctx)
        if self.convention is Convention.CONSTANT_AREA:
            a = 1 / ctx.mp.sqrt(eps)
            return a, eps * a
        return ctx.mp.one, eps

    def area(self, ctx: PrecisionContext) -> mpmath.mpf:
        a, b = self.semi_axes(ctx)
        return ctx.mp.pi * a * b

    def with_convention(self, convention) -> "EllipseShape":
        return EllipseShape(self.e, convention)

    @property
    def is_circle(self) -> bool:
        return mpmath.mpf(self.e) == 0


@dataclass(frozen=True)
class SolverMeta:
    basis_size: int
    collocation_count: int
    distribution: str = "cheb"


@dataclass(frozen=True)
class EigenvalueRecord:
    """One computed fundamental eigenvalue.

    ``lam`` is the eigenvalue under ``shape.convention`` (an mpf or a decimal
    string); ``digits_claimed`` is the number of significant digits trusted.
    """

    shape: EllipseShape
    lam: mpmath.mpf
    digits_claimed: int
    solver_meta: Optional[SolverMeta] = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("eigenvalue must be positive")
        if self.digits_claimed < 1:
            raise ValueError("digits_claimed must be positive")

    @property
    def convention(self) -> Convention:
        return self.shape.convention


def convert_eigenvalue(record: EigenvalueRecord, target, ctx: Optional[PrecisionContext] = None) -> EigenvalueRecord:
    """Re-express ``record`` under the ``target`` area convention.

    Uses the invariance of eigenvalue times area: lambda' = lambda/eps going
    from constant area to constant semi-major axis.  One digit of the claim is
    given up for the arithmetic.
    """
    target = Convention.parse(target)
    if target is record.convention:
        return record
    if ctx is None:
        ctx = PrecisionContext(max(10, record.digits_claimed), 20)
    eps = record.shape.stretch(ctx)
    if eps < ctx.mpf(10) ** (-ctx.working_digits // 2):
        raise DegenerateShapeError(f"stretch factor underflows at e={record.shape.e}")
    lam = ctx.mpf(record.lam)
    if target is Convention.CONSTANT_SEMI_MAJOR:
        new_lam = lam / eps
    else:
        new_lam = lam * eps
    return replace(
        record,
        shape=record.shape.with_convention(target),
        lam=new_lam,
        digits_claimed=max(1, record.digits_claimed - 1),
    )
