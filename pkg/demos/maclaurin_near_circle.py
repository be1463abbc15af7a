"""Maclaurin coefficients from a batch of near-circular ellipses.

Computes (or reuses) eigenvalues on e = 0.01 .. 0.20, fits lambda/rho as a
series in e^2 with C0 = 1 and C1 = 0 held fixed, and hands C2 to the
relation finder.  The default 60-digit batch takes well under a minute;
pass a larger --digits for more coefficients.
"""

import argparse

from ellipsedrum import ConstantBasis, Family, PrecisionContext, compute_eigenvalues, eccentricity_grid, find_relation
from ellipsedrum.pipeline import fit_family, fit_table, usable_digits

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--data", default="maclaurin_demo.dat")
parser.add_argument("--digits", type=int, default=60)
args = parser.parse_args()

grid = eccentricity_grid("0.01", "0.20", 20, "linear")
records, failures = compute_eigenvalues(args.data, grid, "A", args.digits)
if failures:
    raise SystemExit(f"{len(failures)} points failed; rerun to retry them")

ctx = PrecisionContext(args.digits + 20)
fit = fit_family(records, Family.MACLAURIN, known_terms=2, ctx=ctx)
# D is the perturbation estimate; truncation of the series is not in it
print(fit_table(fit, ctx, decimals=20))

# the truncation-aware estimate is what the relation search should trust
model = Family.MACLAURIN.model(len(records), Family.MACLAURIN.known(2))
fit2, digits = usable_digits(records, model, ctx)
rel = find_relation(fit2.coefficients[0], digits, ConstantBasis.parse("1, rho"), ctx)
print(f"\nC2 with {digits} usable digits: {rel.display()}  [{rel.status.value}]")
