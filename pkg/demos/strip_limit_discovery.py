"""Discovering the strip-limit expansion one coefficient at a time.

Near e = 1 the ellipse looks like a strip of width 2*eps and
lambda' ~ pi^2/(4 eps^2).  Twelve 60-digit eigenvalues close to that limit
are enough for the discovery loop to recognise the first several
coefficients as rational combinations of powers of pi.  Computing the batch
takes several minutes; it is resumable, so an interrupted run picks up
where it stopped.
"""

import argparse

from ellipsedrum import Family, compute_eigenvalues, discover, eccentricity_grid

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--data", default="asymptotic_demo.dat")
parser.add_argument("--jobs", type=int, default=1)
args = parser.parse_args()

grid = eccentricity_grid("0.999968", "0.999995", 12, "geometric")
records, failures = compute_eigenvalues(args.data, grid, "Aprime", 60, jobs=args.jobs)
if failures:
    raise SystemExit(f"{len(failures)} points failed; rerun to retry them")

log = discover(records, Family.ASYMPTOTIC)
for line in log.lines:
    print(line)
print("\naccepted:")
for d in log.accepted:
    print(f"  c[{d.nu}] = {d.relation.display():<40} {d.matched} digits")
