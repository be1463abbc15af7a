"""Integer relations by lattice reduction.

Given a numeric coefficient x known to D digits and constants v_2..v_m,
look for small integers with a_1 x + a_2 v_2 + ... + a_m v_m = 0.  The
search reduces the lattice spanned by the rows of [I | round(10^(D-g) v)]
with exact-integer LLL; a short reduced row whose relation residual is far
below the scaled noise floor is a candidate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import mpmath

from .closed_forms import LaurentForm
from .mp_numerics import PrecisionContext, fundamental_constants

GUARD = 5
MARGIN = 3
THRESHOLD = 25


class DependentRowsError(ValueError):
    """The rows handed to LLL are linearly dependent."""


class PrecisionTooLowError(ValueError):
    pass


class DegenerateRelationError(ValueError):
    """The relation does not involve the target (a_1 = 0)."""


# ---------------------------------------------------------------------------
# LLL
# ---------------------------------------------------------------------------

def _dot(u, v) -> int:
    return sum(a * b for a, b in zip(u, v))


def gram_schmidt(rows: Sequence[Sequence[int]]):
    """Exact Gram-Schmidt data (mu, squared norms B) of integer rows."""
    n = len(rows)
    star: List[List[Fraction]] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    norms: List[Fraction] = []
    for i in range(n):
        v = [Fraction(x) for x in rows[i]]
        for j in range(i):
            mu[i][j] = _dot(rows[i], star[j]) / norms[j]
            v = [a - mu[i][j] * b for a, b in zip(v, star[j])]
        star.append(v)
        norms.append(_dot(v, v))
    return mu, norms


def lll_reduce(rows: Sequence[Sequence[int]], delta=Fraction(3, 4)) -> List[List[int]]:
    """LLL-reduce the lattice basis given by integer ``rows`` (exact arithmetic).

    The result spans the same lattice, is size-reduced (|mu_ij| <= 1/2) and
    satisfies the Lovasz condition B_k >= (delta - mu_{k,k-1}^2) B_{k-1}.
    """
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta <= 1:
        raise ValueError("delta must lie in (1/4, 1]")
    b = [[int(x) for x in row] for row in rows]
    n = len(b)
    if n == 0:
        return []
    if len({len(row) for row in b}) != 1:
        raise ValueError("rows must all have the same length")
    mu, B = gram_schmidt(b)
    if any(x == 0 for x in B):
        raise DependentRowsError("lattice basis rows are linearly dependent")
    half = Fraction(1, 2)

    def size_reduce(k, j):
        q = mu[k][j]
        if abs(q) <= half:
            return
        r = math.floor(q + half)
        b[k] = [x - r * y for x, y in zip(b[k], b[j])]
        for l in range(j):
            mu[k][l] -= r * mu[j][l]
        mu[k][j] -= r

    k = 1
    while k < n:
        size_reduce(k, k - 1)
        if B[k] >= (delta - mu[k][k - 1] ** 2) * B[k - 1]:
            for j in range(k - 2, -1, -1):
                size_reduce(k, j)
            k += 1
            continue
        # swap b_k and b_{k-1}, updating the Gram-Schmidt data in place
        m = mu[k][k - 1]
        new_b = B[k] + m * m * B[k - 1]
        mu[k][k - 1] = m * B[k - 1] / new_b
        B[k] = B[k - 1] * B[k] / new_b
        B[k - 1] = new_b
        b[k], b[k - 1] = b[k - 1], b[k]
        for j in range(k - 1):
            mu[k][j], mu[k - 1][j] = mu[k - 1][j], mu[k][j]
        for i in range(k + 1, n):
            t = mu[i][k]
            mu[i][k] = mu[i][k - 1] - m * t
            mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k]
        k = max(k - 1, 1)
    return b


def is_lll_reduced(rows: Sequence[Sequence[int]], delta=Fraction(3, 4)) -> bool:
    mu, B = gram_schmidt(rows)
    n = len(rows)
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    return all(B[k] >= (Fraction(delta) - mu[k][k - 1] ** 2) * B[k - 1] for k in range(1, n))


# ---------------------------------------------------------------------------
# constant bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    """A symbolic constant: symbol**power with symbol "pi" or "rho", or the literal 1.

    Custom constants carry their own evaluator and have no symbol.
    """

    symbol: Optional[str]
    power: int = 0
    name: Optional[str] = None
    evaluator: Optional[Callable] = None

    def __post_init__(self):
        if self.evaluator is None:
            if self.symbol not in (None, "pi", "rho"):
                raise ValueError(f"unknown symbol {self.symbol!r}")
            if self.symbol is None and self.power != 0:
                raise ValueError("the literal 1 has no power")
            if self.power == 0:
                object.__setattr__(self, "symbol", None)

    @property
    def key(self):
        return self.name if self.evaluator is not None else (self.symbol, self.power)

    def __eq__(self, other):
        return isinstance(other, Atom) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def evaluate(self, ctx: PrecisionContext) -> mpmath.mpf:
        if self.evaluator is not None:
            return ctx.mpf(self.evaluator(ctx))
        if self.symbol is None:
            return ctx.mp.one
        base = ctx.mp.pi if self.symbol == "pi" else fundamental_constants(ctx).rho
        return base ** self.power

    def __str__(self) -> str:
        if self.evaluator is not None:
            return self.name
        if self.symbol is None:
            return "1"
        return self.symbol if self.power == 1 else f"{self.symbol}^{self.power}"

    @classmethod
    def parse(cls, text: str) -> "Atom":
        t = text.strip().replace("**", "^").replace(" ", "")
        if t == "1":
            return cls(None)
        if t.startswith("1/"):
            inner = cls.parse(t[2:])
            if inner.symbol is None:
                return inner
            return cls(inner.symbol, -inner.power)
        sym, _, power = t.partition("^")
        sym = {"π": "pi", "ρ": "rho"}.get(sym, sym)
        power = int(power.strip("()")) if power else 1
        return cls(sym, power)


@dataclass(frozen=True)
class ConstantBasis:
    """Ordered, distinct constants that the target may be related to."""

    elements: Tuple[Atom, ...]

    def __init__(self, elements: Iterable):
        atoms = tuple(e if isinstance(e, Atom) else Atom.parse(str(e)) for e in elements)
        if len(set(atoms)) != len(atoms):
            raise ValueError("basis elements must be distinct")
        if not atoms:
            raise ValueError("empty basis")
        object.__setattr__(self, "elements", atoms)

    @classmethod
    def parse(cls, text: str) -> "ConstantBasis":
        """Comma-separated atoms, e.g. ``"pi^-5, pi^-3, 1/pi, pi, pi^3"``."""
        return cls(p for p in text.split(",") if p.strip())

    @classmethod
    def powers(cls, symbol: str, powers: Iterable[int]) -> "ConstantBasis":
        return cls(Atom(symbol, p) for p in powers)

    @classmethod
    def with_custom(cls, pairs: Iterable[Tuple[str, Callable]]) -> "ConstantBasis":
        return cls(Atom(None, 0, name, fn) for name, fn in pairs)

    def values(self, ctx: PrecisionContext) -> list:
        return [a.evaluate(ctx) for a in self.elements]

    def __len__(self):
        return len(self.elements)

    def __str__(self):
        return "(" + ", ".join(str(a) for a in self.elements) + ")"


class RelationStatus(enum.Enum):
    UNAMBIGUOUS = "Unambiguous"
    AMBIGUOUS = "Ambiguous"
    NOT_FOUND = "NotFound"


@dataclass(frozen=True)
class IntegerRelation:
    """a_1 * target + sum_i a_{i+1} * basis_i = 0, normalised to gcd 1 and a_1 > 0."""

    coefficients: Tuple[int, ...]
    basis: ConstantBasis
    target_digits_matched: int
    status: RelationStatus
    residual: Optional[mpmath.mpf] = None
    note: str = ""

    @property
    def found(self) -> bool:
        return self.status is RelationStatus.UNAMBIGUOUS

    def closed_form(self) -> Optional[LaurentForm]:
        """The target as a rational Laurent polynomial, when the basis allows one."""
        if not self.coefficients or self.coefficients[0] == 0:
            return None
        symbols = {a.symbol for a in self.basis.elements if a.evaluator is None and a.symbol}
        if any(a.evaluator is not None for a in self.basis.elements) or len(symbols) > 1:
            return None
        symbol = symbols.pop() if symbols else "pi"
        a1 = self.coefficients[0]
        terms = {}
        for a, atom in zip(self.coefficients[1:], self.basis.elements):
            if a:
                terms[atom.power] = terms.get(atom.power, Fraction(0)) + Fraction(-a, a1)
        return LaurentForm(symbol, terms)

    def display(self) -> str:
        if not self.coefficients:
            return "(none)"
        form = self.closed_form()
        if form is not None:
            return str(form)
        a1 = self.coefficients[0]
        parts = [f"{-a:+d}*{atom}" for a, atom in zip(self.coefficients[1:], self.basis.elements) if a]
        return f"({' '.join(parts)})/{a1}" if parts else "0"


def normalize(vec: Sequence[int]) -> Tuple[int, ...]:
    """Divide by the gcd and make the first nonzero entry (a_1 if present) positive."""
    g = 0
    for a in vec:
        g = math.gcd(g, a)
    if g == 0:
        return tuple(vec)
    out = [a // g for a in vec]
    lead = next(a for a in out if a)
    if lead < 0:
        out = [-a for a in out]
    return tuple(out)


def matched_digits(value, reference, cap: Optional[int] = None) -> int:
    """Significant digits to which ``value`` reproduces ``reference``.

    k digits match when |value - reference| is at most half a unit in the
    k-th significant digit of ``reference``.
    """
    diff = abs(value - reference)
    if reference == 0:
        return 0 if diff else (cap or 0)
    if diff == 0:
        return cap if cap is not None else 10 ** 6
    lead = int(mpmath.floor(mpmath.log10(abs(reference))))
    k = int(mpmath.floor(lead + 1 - mpmath.log10(2 * diff)))
    k = max(0, k)
    return min(k, cap) if cap is not None else k


def _relation_residual(vec, values, mp) -> mpmath.mpf:
    return abs(mp.fsum(a * v for a, v in zip(vec, values)))


def _candidates(values, scale_digits: int, threshold, delta, max_coefficient, mp):
    """Reduced lattice rows passing the residual test, shortest first."""
    n = len(values)
    scale = mp.mpf(10) ** scale_digits
    rows = [[1 if i == j else 0 for j in range(n)] + [int(mp.nint(scale * values[i]))] for i in range(n)]
    reduced = lll_reduce(rows, delta)
    reduced.sort(key=lambda r: sum(x * x for x in r[:n]))
    out = []
    for r in reduced:
        vec = r[:n]
        if max_coefficient is not None and max(abs(a) for a in vec) > max_coefficient:
            continue
        res = _relation_residual(vec, values, mp)
        if res < threshold:
            out.append((normalize(vec), res))
    return out


def find_relation(
    target,
    digits: int,
    basis: ConstantBasis,
    ctx: Optional[PrecisionContext] = None,
    *,
    guard: int = GUARD,
    margin: int = MARGIN,
    threshold: int = THRESHOLD,
    delta=Fraction(3, 4),
    max_coefficient: Optional[int] = None,
) -> IntegerRelation:
    """Search for a_1 target + a . basis = 0 with the target trusted to ``digits``.

    The relation lattice is scaled by 10^(digits - guard); a reduced row is a
    candidate when its residual is below 10^-(digits - guard - margin).  The
    result is Ambiguous if a second candidate passes, if a rerun at five
    fewer digits of scaling disagrees, or if the relation reproduces fewer
    than ``threshold`` digits of the target.
    """
    if digits < 10:
        raise PrecisionTooLowError(f"need at least 10 trusted digits, got {digits}")
    if ctx is None:
        ctx = PrecisionContext(max(10, digits), 2 * guard + 10)
    if ctx.digits < digits:
        ctx = ctx.with_digits(digits)
    mp = ctx.mp
    values = [ctx.mpf(target)] + basis.values(ctx)
    passes = mp.mpf(10) ** (-(digits - guard - margin))
    found = _candidates(values, digits - guard, passes, delta, max_coefficient, mp)
    degenerate = [v for v, _ in found if v[0] == 0]
    found = [(v, r) for v, r in found if v[0] != 0]
    if not found:
        note = "basis constants are themselves related" if degenerate else ""
        return IntegerRelation((), basis, 0, RelationStatus.NOT_FOUND, note=note)
    vec, res = found[0]
    proto = IntegerRelation(vec, basis, 0, RelationStatus.AMBIGUOUS, res)
    matched = reconstruct_and_verify(proto, target, ctx, cap=digits)
    notes = []
    if len(found) > 1:
        notes.append(f"{len(found)} candidates pass the residual test")
    if degenerate:
        notes.append("basis constants are themselves related")
    lower = digits - 5
    if lower - guard - margin > 0:
        passes_lo = mp.mpf(10) ** (-(lower - guard - margin))
        again = [v for v, _ in _candidates(values, lower - guard, passes_lo, delta, max_coefficient, mp) if v[0] != 0]
        if not again or again[0] != vec:
            notes.append("rerun at reduced scaling disagrees")
    if matched < threshold:
        notes.append(f"only {matched} digits matched (threshold {threshold})")
    status = RelationStatus.AMBIGUOUS if notes else RelationStatus.UNAMBIGUOUS
    return IntegerRelation(vec, basis, matched, status, res, "; ".join(notes))


def reconstruct_and_verify(relation: IntegerRelation, target, ctx: PrecisionContext, cap: Optional[int] = None) -> int:
    """Digits of ``target`` reproduced by solving the relation for it.

    target = -(a_2 v_2 + ... + a_m v_m)/a_1, evaluated at ``ctx`` precision.
    """
    if not relation.coefficients or relation.coefficients[0] == 0:
        raise DegenerateRelationError("relation has a_1 = 0; it does not determine the target")
    a1 = relation.coefficients[0]
    vals = relation.basis.values(ctx)
    value = -ctx.mp.fsum(a * v for a, v in zip(relation.coefficients[1:], vals)) / a1
    limit = ctx.digits if cap is None else min(cap, ctx.digits)
    return matched_digits(value, ctx.mpf(target), limit)


# ---------------------------------------------------------------------------
# ansatz schedules used by the discovery pipeline
# ---------------------------------------------------------------------------

def asymptotic_ansatz(nu: int, widen: int = 0) -> ConstantBasis:
    """Powers of pi for c_nu following the parity pattern of the known terms.

    c_nu is a combination of pi^-nu, pi^(2-nu), ..., up to pi (odd nu) or 1
    (even nu); for nu < 0 it is a single power pi^-nu.  Each widening step
    adds the next power outward, alternating below and above.
    """
    top = 1 if nu % 2 else 0
    low = -nu
    powers = list(range(low, top + 1, 2)) if low <= top else [low]
    for i in range(widen):
        if i % 2 == 0:
            powers.insert(0, powers[0] - 2)
        else:
            powers.append(powers[-1] + 2)
    return ConstantBasis.powers("pi", powers)


def maclaurin_ansatz(nu: int, widen: int = 0) -> ConstantBasis:
    """1, rho, rho^2, ... for C_nu; full width is rho^(2*floor(nu/2) - 1).

    Starts from (1,) and grows one power per widening step.
    """
    return ConstantBasis.powers("rho", range(0, widen + 1))


def maclaurin_full_width(nu: int) -> int:
    """Widening steps needed to reach rho^(2*floor(nu/2) - 1)."""
    return max(0, 2 * (nu // 2) - 1)
