"""Recognising a 36-digit constant with LLL, step by step.

The lattice has one row per basis element: an identity block followed by a
last column holding the scaled values.  A short vector in the reduced basis
is an integer relation with a tiny residual.
"""

from ellipsedrum import ConstantBasis, PrecisionContext, find_relation, lll_reduce, reconstruct_and_verify

value = "0.435383650779955252940603845025457624"
ctx = PrecisionContext(60)
basis = ConstantBasis.parse("pi^-5, pi^-3, pi^-1, pi, pi^3")

# the construction by hand.  Chance short vectors have coefficients of about
# scale^(1/6), so at 10^20 they still beat the true relation (largest
# coefficient 9855); from about 10^24 on the true one is shortest.  The
# search itself scales to the trusted digits.
scale = 10 ** 36
vals = [ctx.mpf(value)] + basis.values(ctx)
rows = [[int(i == j) for j in range(len(vals))] + [int(ctx.mp.nint(scale * v))] for i, v in enumerate(vals)]
reduced = lll_reduce(rows)
print("shortest reduced row:", reduced[0])

rel = find_relation(ctx.mpf(value), 36, basis, ctx)
print("\nrelation  ", rel.coefficients, rel.status.value)
print("closed form", rel.display())
print("verified to", reconstruct_and_verify(rel, ctx.mpf(value), ctx), "digits")

# the same search on 36 digits of e (Euler's number) finds nothing
noise = ctx.mpf("0.718281828459045235360287471352662497")
print("\nnoise:", find_relation(noise, 36, basis, ctx).status.value)
