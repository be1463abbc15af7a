"""Multiprecision lab for the fundamental Dirichlet eigenvalue of the ellipse.

Solve for lambda_0 with the method of particular solutions, fit Maclaurin and
asymptotic series to batches of eigenvalues, and recognise the coefficients
as rational combinations of constants with LLL.
"""

from .closed_forms import ASYMPTOTIC, MACLAURIN, LaurentForm
from .datafile import read_records, write_records
from .eigensolver import (
    CertificationError,
    NoSignChangeError,
    PointDistribution,
    SolverConfig,
    SolveTrace,
    midpoint_residual,
    solve_fundamental,
)
from .geometry import Convention, EigenvalueRecord, EllipseShape, SolverMeta, convert_eigenvalue
from .mp_numerics import (
    PrecisionContext,
    bessel_j,
    bessel_j_sequence,
    bracket_root,
    find_root,
    fundamental_constants,
)
from .pipeline import Family, Spacing, compute_eigenvalues, discover, eccentricity_grid, fit_family
from .relation import (
    ConstantBasis,
    IntegerRelation,
    RelationStatus,
    find_relation,
    lll_reduce,
    reconstruct_and_verify,
)
from .series import (
    SeriesFit,
    SeriesModel,
    deflate_known,
    estimate_trusted_digits,
    evaluate_series,
    fit_interpolating,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
