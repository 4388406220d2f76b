"""Least-squares solvers.

``high_precision_solve`` is the sketch-and-precondition iteration: QR of
an SRHT-sketched ``A`` supplies a right preconditioner, a sketched solve
gives the starting point, and a Richardson correction drives the backward
error to ``(1 + eps)``.  ``low_accuracy_solve`` is plain OSNAP
sketch-and-solve, kept as the baseline.  ``weighted_solve`` reduces the
weighted problem to an unweighted one by scaling rows with ``sqrt(w)``.

Preconditioner orientation: with ``S A = Q R`` (standard QR) the iterate
lives in coordinates ``x`` with solution ``R^{-1} x``, so each step is
``x += R^{-T} A^T (b - A R^{-1} x)``.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import NegativeWeight, NoConvergence, RankDeficient, ShapeMismatch
from .linalg import as_matrix, pseudoinverse, svd_thin
from .sketch import OsnapSketch, SrhtSketch, make_rng

PRECONDITIONER_EPS = 0.01
ITERATION_CONSTANT = 4
MIN_ITERATIONS = 8


@dataclass
class RegressionProblem:
    a: np.ndarray
    b: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        self.a = as_matrix(self.a)
        self.b = np.asarray(self.b, dtype=np.float64)
        n = self.a.shape[0]
        if self.b.shape != (n,):
            raise ShapeMismatch(f"b must have shape ({n},), got {self.b.shape}")
        if not np.isfinite(self.b).all():
            raise ValueError("b contains NaN or Inf")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != (n,):
                raise ShapeMismatch(f"weights must have shape ({n},)")
            neg = np.flatnonzero(self.weights < 0)
            if neg.size:
                raise NegativeWeight(int(neg[0]))


@dataclass
class SolverReport:
    solution: np.ndarray
    iterations: int
    residual_norm: float
    preconditioner_condition_estimate: float
    sketch_rows: int = 0


def derive_seed(seed, *keys):
    """Child seed of ``seed`` addressed by integer ``keys``.

    Equal ``(seed, keys)`` always give the same stream, independent of the
    order in which children are requested.
    """
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.SeedSequence(
        base.entropy, spawn_key=tuple(base.spawn_key) + tuple(int(k) for k in keys)
    )


def iteration_cap(eps):
    """``max(ceil(4 log2(1/eps)), 8)`` correction steps."""
    return max(math.ceil(ITERATION_CONSTANT * math.log2(1.0 / eps)), MIN_ITERATIONS)


def srht_rows(n, d, delta):
    """Sketch size ``eps1^-2 d log^2(n / delta)`` for the preconditioner.

    Values at or above ``n`` mean the sketch degenerates to the identity.
    """
    return math.ceil(PRECONDITIONER_EPS ** -2 * d * math.log(max(n, 2) / delta) ** 2)


def _check_param(value, name, upper=0.1):
    if not 0.0 < value < upper:
        raise ValueError(f"{name} must lie in (0, {upper}), got {value}")


def _residual(a, b, x):
    r = a @ x - b
    return math.sqrt(float(r @ r))


def high_precision_solve(p, eps, delta, seed=0, sketch_rows=None, retry=True):
    """(1 + eps) backward-error least squares via sketch-and-precondition.

    ``sketch_rows`` overrides the SRHT row count; a value >= n (the default
    whenever the formula exceeds n) uses the identity sketch.  A residual
    that stops contracting signals a bad sketch draw: the solve is redrawn
    once from a derived seed before :class:`NoConvergence` propagates.
    """
    _check_param(eps, "eps")
    _check_param(delta, "delta")
    if p.weights is not None:
        raise ValueError("weighted problem: use weighted_solve")
    a, b = p.a, p.b
    n, d = a.shape
    if n < d:
        raise ShapeMismatch(f"need rows >= cols, got {a.shape}")
    m = sketch_rows if sketch_rows is not None else srht_rows(n, d, delta)
    kern = backend.current()
    cap = iteration_cap(eps)
    attempts = 2 if retry and m < n else 1
    for attempt in range(attempts):
        if m >= n:
            z, iters, status, _, cond = kern.hp_solve(a, b, eps, cap)
        else:
            sk = SrhtSketch.draw(n, m, derive_seed(seed, attempt) if attempt else seed)
            z, iters, status, _, cond = kern.hp_solve(
                a, b, eps, cap, sk.row_indices, sk.signs, sk.n_pad
            )
        if status == kern.RANK:
            raise RankDeficient(-1, "sketched design matrix is rank deficient")
        if status == kern.OK:
            return SolverReport(z, int(iters), _residual(a, b, z), float(cond), min(m, n))
    raise NoConvergence(iters, "residual stopped contracting; sketch redrawn once")


def osnap_size(d, eps0, delta0):
    """``(m, s)`` with ``m = d log(d/delta0) / eps0^2`` and ``s = log(d/delta0) / eps0``."""
    log_term = math.log(max(d, 2) / delta0)
    m = math.ceil(d * log_term / eps0 ** 2)
    s = math.ceil(log_term / eps0)
    return m, min(s, m)


def low_accuracy_solve(p, eps0, delta0, seed=0):
    """OSNAP sketch-and-solve through the sketched normal equations."""
    # constant-factor accuracy is the point of this baseline, so eps0 may be large
    _check_param(eps0, "eps0", upper=1.0)
    _check_param(delta0, "delta0")
    if p.weights is not None:
        raise ValueError("weighted problem: use weighted_solve")
    a, b = p.a, p.b
    n, d = a.shape
    m, s = osnap_size(d, eps0, delta0)
    if m >= n:
        sa, sb = a, b
        m = n
    else:
        sk = OsnapSketch.draw(n, m, s, seed)
        sa = sk.apply(a)
        sb = sk.apply(b)[:, 0]
    _, sv, _ = svd_thin(sa, min(sa.shape))
    if sv[0] == 0.0 or sv[-1] < 1e-12 * sv[0] or sa.shape[0] < d:
        raise RankDeficient(-1, "sketched design matrix is rank deficient")
    x = pseudoinverse(sa.T @ sa) @ (sa.T @ sb)
    return SolverReport(x, 0, _residual(a, b, x), float(sv[0] / sv[-1]), m)


def weighted_solve(p, eps, delta, mode="high", seed=0, sketch_rows=None):
    """Solve ``min_x ||A x - b||_w`` by scaling row i of A and b by sqrt(w_i)."""
    if p.weights is None:
        raise ValueError("weighted_solve needs weights")
    sw = np.sqrt(p.weights)
    scaled = RegressionProblem(p.a * sw[:, None], p.b * sw)
    if mode == "high":
        rep = high_precision_solve(scaled, eps, delta, seed=seed, sketch_rows=sketch_rows)
    elif mode == "low":
        rep = low_accuracy_solve(scaled, eps, delta, seed=seed)
    else:
        raise ValueError(f"mode must be 'high' or 'low', got {mode!r}")
    rep.residual_norm = _residual(scaled.a, scaled.b, rep.solution)
    return rep


def forward_error_bound(sigma_min_a, residual_opt, eps):
    """``2 sqrt(eps) ||A x_opt - b|| / sigma_min(A)``: how far a (1+eps)
    backward-accurate solution can sit from the exact minimizer."""
    if sigma_min_a <= 0:
        raise ValueError("sigma_min_a must be positive")
    return 2.0 * math.sqrt(eps) * residual_opt / sigma_min_a


__all__ = [
    "RegressionProblem",
    "SolverReport",
    "derive_seed",
    "forward_error_bound",
    "high_precision_solve",
    "iteration_cap",
    "low_accuracy_solve",
    "make_rng",
    "osnap_size",
    "srht_rows",
    "weighted_solve",
]
