"""Weighted low-rank approximation by sketched alternating minimization."""
from . import backend
from .altmin import (
    ConvergenceTrace,
    FactorPair,
    SolveConfig,
    SolveResult,
    clip,
    random_init,
    solve,
    svd_init,
    xi_for,
)
from .datagen import GenSpec, generate
from .diagnostics import (
    AssumptionReport,
    TheoryBounds,
    angles,
    check_assumptions,
    dist,
    rho,
    theory_bounds,
)
from .errors import (
    BadLength,
    DegenerateInput,
    DegenerateWeights,
    InfeasibleGamma,
    NegativeWeight,
    NoConvergence,
    NonFinite,
    OrthogonalSubspaces,
    ParseError,
    RankDeficient,
    ShapeMismatch,
    SolverError,
    WlraError,
)
from .instance import GroundTruth, WlraInstance
from .linalg import frobenius, pseudoinverse, qr, spectral_norm, svd_thin, weighted_frobenius
from .multiresponse import MultiResponseProblem, solve_exact, solve_fast, transpose_problem
from .regression import (
    RegressionProblem,
    SolverReport,
    forward_error_bound,
    high_precision_solve,
    low_accuracy_solve,
    weighted_solve,
)
from .sketch import (
    OsnapSketch,
    SrhtSketch,
    embedding_distortion,
    fwht_in_place,
    osnap_apply,
    srht_apply,
)

__version__ = "0.1.0"
