"""The circle as an oracle, then one ellipse solved rung by rung.

At e = 0 the fundamental eigenvalue is j01^2, so the solver's claim can be
checked digit for digit.  The second half prints the basis-size ladder that
backs a certified claim on a moderately eccentric ellipse.
"""

import time

import mpmath

from ellipsedrum import EllipseShape, PrecisionContext, SolverConfig, SolveTrace, fundamental_constants, solve_fundamental
from ellipsedrum.relation import matched_digits

ctx = PrecisionContext(60)
consts = fundamental_constants(ctx)
print("j01   =", mpmath.nstr(consts.j01, 50))
print("rho   =", mpmath.nstr(consts.rho, 50))

start = time.perf_counter()
rec = solve_fundamental(EllipseShape("0"), SolverConfig(target_digits=50), ctx)
print(f"\ncircle: claimed {rec.digits_claimed} digits in {time.perf_counter() - start:.1f} s")
print("solver =", mpmath.nstr(rec.lam, 50))
print("matches rho to", matched_digits(rec.lam, consts.rho, 60), "digits")

# a fatter basis is needed as the ellipse flattens; watch consecutive rungs agree
trace = SolveTrace()
rec = solve_fundamental(EllipseShape("0.8"), SolverConfig(target_digits=40), PrecisionContext(50), trace)
print("\ne = 0.8, constant area")
print(f"{'M':>4} {'N':>4}  {'lambda':<45} agree")
for step in trace.steps:
    print(f"{step.basis_size:>4} {step.collocation_count:>4}  {mpmath.nstr(step.lam, 42):<45} {step.agreement}")
print("claimed", rec.digits_claimed, "digits")
