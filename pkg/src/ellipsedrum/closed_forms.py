"""Exact coefficient expressions: rational Laurent polynomials in pi or rho.

Also holds the known expansion coefficients of the fundamental eigenvalue:
``MACLAURIN`` (lambda_0/rho in even powers of e, constant area) and
``ASYMPTOTIC`` (lambda'_0 in powers of the stretch factor, unit semi-major axis).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping

import mpmath

from .mp_numerics import PrecisionContext, fundamental_constants

_SUPERSCRIPT = str.maketrans("0123456789-", "⁰¹²³⁴⁵⁶⁷⁸⁹⁻")


@dataclass(frozen=True)
class LaurentForm:
    """sum_k q_k * s**k for a symbol s in {"pi", "rho"} and rational q_k."""

    symbol: str
    terms: Mapping[int, Fraction]

    def __init__(self, symbol: str, terms: Mapping[int, object]):
        if symbol not in ("pi", "rho"):
            raise ValueError(f"unsupported symbol {symbol!r}")
        clean: Dict[int, Fraction] = {}
        for k, q in terms.items():
            q = Fraction(q)
            if q:
                clean[int(k)] = clean.get(int(k), Fraction(0)) + q
        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "terms", dict(sorted((k, q) for k, q in clean.items() if q)))

    @classmethod
    def rho_polynomial(cls, descending, denominator) -> "LaurentForm":
        """From integer numerator coefficients (highest power first) over a denominator."""
        deg = len(descending) - 1
        return cls("rho", {deg - i: Fraction(c, denominator) for i, c in enumerate(descending)})

    def symbol_value(self, ctx: PrecisionContext):
        return ctx.mp.pi if self.symbol == "pi" else fundamental_constants(ctx).rho

    def evaluate(self, ctx: PrecisionContext) -> mpmath.mpf:
        s = self.symbol_value(ctx)
        total = ctx.mp.zero
        for k, q in self.terms.items():
            total += ctx.mpf(q.numerator) / q.denominator * s ** k
        return total

    def __call__(self, ctx: PrecisionContext) -> mpmath.mpf:
        return self.evaluate(ctx)

    def common_denominator(self) -> int:
        d = 1
        for q in self.terms.values():
            d = d * q.denominator // _gcd(d, q.denominator)
        return d

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        name = "π" if self.symbol == "pi" else "ρ"
        if self.symbol == "rho" and len(self.terms) > 1:
            return self._str_over_common_denominator(name)
        parts = []
        # descending powers of 1/pi first, the way the series is usually written
        for k, q in sorted(self.terms.items()):
            parts.append(_format_term(q, k, name))
        return _join_signed(parts)

    def _str_over_common_denominator(self, name: str) -> str:
        den = self.common_denominator()
        nums = []
        for k in sorted(self.terms, reverse=True):
            q = self.terms[k] * den
            power = "" if k == 0 else (name if k == 1 else f"{name}{str(k).translate(_SUPERSCRIPT)}")
            mag = abs(q.numerator)
            body = power if (mag == 1 and power) else f"{mag}{power}"
            nums.append(("-" if q < 0 else "+", body))
        text = ("-" if nums[0][0] == "-" else "") + nums[0][1]
        for sign, body in nums[1:]:
            text += f" {sign} {body}"
        return f"({text})/{den}" if den != 1 else text


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _format_term(q: Fraction, k: int, name: str) -> str:
    sign = "-" if q < 0 else "+"
    q = abs(q)
    n, d = q.numerator, q.denominator
    if k == 0:
        body = f"{n}" if d == 1 else f"{n}/{d}"
    elif k > 0:
        power = name if k == 1 else f"{name}{str(k).translate(_SUPERSCRIPT)}"
        num = power if n == 1 else f"{n}{power}"
        body = num if d == 1 else f"{num}/{d}"
    else:
        power = name if k == -1 else f"{name}{str(-k).translate(_SUPERSCRIPT)}"
        den = power if d == 1 else f"({d}{power})"
        body = f"{n}/{den}"
    return sign + body


def _join_signed(parts) -> str:
    text = parts[0][1:] if parts[0][0] == "+" else "-" + parts[0][1:]
    for p in parts[1:]:
        text += f" {p[0]} {p[1:]}"
    return text


# lambda_0 / rho = sum_nu C_nu e^(2 nu), constant area A = pi
MACLAURIN: Dict[int, LaurentForm] = {
    0: LaurentForm("rho", {0: 1}),
    1: LaurentForm("rho", {}),
    2: LaurentForm.rho_polynomial([1, -2], 32),
    3: LaurentForm.rho_polynomial([1, -2], 32),
    4: LaurentForm.rho_polynomial([-7, 58, 832, -1792], 32768),
    5: LaurentForm.rho_polynomial([-7, 58, 320, -768], 16384),
    6: LaurentForm.rho_polynomial([87, -1066, -12778, 134676, 418176, -1140480], 28311552),
    7: LaurentForm.rho_polynomial([87, -1066, -2698, 51156, 104832, -329472], 9437184),
    8: LaurentForm.rho_polynomial(
        [-206061, 3371550, 44817952, -742073664, -4882432, 21039022080, 30916214784, -113359454208],
        3710851743744,
    ),
    9: LaurentForm.rho_polynomial(
        [-206061, 3371550, 4906528, -253044032, 307986432, 5234098176, 5775556608, -25027411968],
        927712935936,
    ),
    10: LaurentForm.rho_polynomial(
        [16700445, -342482130, -5150192834, 118301328148, -200183585216, -4688313904000,
         9860534272000, 80801390592000, 68584734720000, -356640620544000],
        14843406974976000,
    ),
    11: LaurentForm.rho_polynomial(
        [16700445, -342482130, -204728834, 37384128148, -126365422016, -962599369600,
         2869625651200, 15282796953600, 10059094425600, -64012419072000],
        2968681394995200,
    ),
    # Overall sign fixed against the tabulated values (both are positive numerically).
    12: LaurentForm.rho_polynomial(
        [-120332513685, 2968187062070, 50217731403560, -1484737085079984, 4817972151021312,
         77508820026886656, -383914479592341504, -1477542066905088000, 6033467570651136000,
         23656611409035264000, 11993659465531392000, -95949275724251136000],
        4924686192529637376000,
    ),
    13: LaurentForm.rho_polynomial(
        [-120332513685, 2968187062070, -572997966040, -443153032753584, 2432501708504832,
         13031591176137216, -94442136581505024, -204288219832320000, 1178391769251840000,
         3645518590771200000, 1389639688519680000, -14537769049128960000],
        820781032088272896000,
    ),
}

# lambda'_0 = sum_nu c_nu eps^nu, unit semi-major axis
ASYMPTOTIC: Dict[int, LaurentForm] = {
    -2: LaurentForm("pi", {2: Fraction(1, 4)}),
    -1: LaurentForm("pi", {1: Fraction(1, 2)}),
    0: LaurentForm("pi", {0: Fraction(3, 4)}),
    1: LaurentForm("pi", {-1: Fraction(11, 8), 1: Fraction(1, 12)}),
    2: LaurentForm("pi", {-2: Fraction(61, 16), 0: Fraction(1, 12)}),
    3: LaurentForm("pi", {-3: Fraction(1971, 128), -1: Fraction(-9, 16), 1: Fraction(3, 80)}),
    4: LaurentForm("pi", {-4: Fraction(20851, 256), -2: Fraction(-271, 48), 0: Fraction(2, 45)}),
    5: LaurentForm(
        "pi",
        {-5: Fraction(537219, 1024), -3: Fraction(-11667, 256), -1: Fraction(-7, 64), 1: Fraction(5, 224)},
    ),
}
