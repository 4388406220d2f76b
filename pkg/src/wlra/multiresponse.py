"""Weighted multiple-response regression ``min_X ||M - X Y^T||_W``.

The objective separates over rows of ``X``: row i is an ordinary weighted
least-squares problem with design ``Y``, target ``M[i]`` and weights
``W[i]``.  ``solve_exact`` batches the k x k normal equations;
``solve_fast`` runs the sketch-and-precondition solver per row.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import (
    DegenerateWeights,
    NegativeWeight,
    NoConvergence,
    RankDeficient,
    ShapeMismatch,
)
from .linalg import as_matrix, pseudoinverse
from .regression import (
    RegressionProblem,
    derive_seed,
    iteration_cap,
    srht_rows,
    weighted_solve,
)
from .sketch import SrhtSketch

DEGENERATE_TOL = 1e-12
SIDES = ("row", "column")
_CHUNK_BYTES = 1 << 24


@dataclass(frozen=True)
class MultiResponseProblem:
    m: np.ndarray
    y: np.ndarray
    w: np.ndarray
    side: str = "row"

    def __post_init__(self):
        m = as_matrix(self.m, "m")
        y = as_matrix(self.y, "y")
        w = as_matrix(self.w, "w")
        if m.shape != w.shape:
            raise ShapeMismatch(f"m {m.shape} and w {w.shape} differ")
        if y.shape[0] != m.shape[1]:
            raise ShapeMismatch(f"y has {y.shape[0]} rows, m has {m.shape[1]} columns")
        neg = np.argwhere(w < 0)
        if neg.size:
            raise NegativeWeight(int(neg[0, 0]), int(neg[0, 1]))
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        for name, val in (("m", m), ("y", y), ("w", w)):
            object.__setattr__(self, name, val)

    @property
    def k(self):
        return self.y.shape[1]

    def scaled(self):
        """``(sqrt(W), sqrt(W) o M)``, computed once and cached."""
        cached = self.__dict__.get("_scaled")
        if cached is None:
            sw = np.sqrt(self.w)
            cached = (sw, sw * self.m)
            object.__setattr__(self, "_scaled", cached)
        return cached

    @classmethod
    def trusted(cls, m, y, w, side="row", scaled=None):
        """Build without validation; for callers that already checked the
        inputs (the alternating loop rebuilds two problems per iteration).
        ``scaled`` may supply a precomputed :meth:`scaled` pair."""
        obj = object.__new__(cls)
        for name, val in (("m", m), ("y", y), ("w", w), ("side", side)):
            object.__setattr__(obj, name, val)
        if scaled is not None:
            object.__setattr__(obj, "_scaled", scaled)
        return obj


@dataclass
class MultiResponseSolution:
    x: np.ndarray
    degenerate_rows: list = field(default_factory=list)
    iterations: np.ndarray = None
    retried_rows: list = field(default_factory=list)


def transpose_problem(p, fixed=None):
    """The other half-step: targets ``M^T``, weights ``W^T``, fixed factor
    ``fixed`` (defaults to ``p.y``)."""
    side = "column" if p.side == "row" else "row"
    return MultiResponseProblem(p.m.T, p.y if fixed is None else fixed, p.w.T, side)


def objective(p, x):
    """``||M - X Y^T||_W^2``."""
    r = p.m - x @ p.y.T
    return float(np.sum(p.w * r * r))


def _min_norm_row(p, i):
    sw = np.sqrt(p.w[i])
    return pseudoinverse(p.y * sw[:, None]) @ (p.m[i] * sw)


def solve_exact(p):
    """Row-wise weighted normal equations ``(Y^T D_i Y) x = Y^T D_i m_i``.

    Rows whose Gram matrix has smallest eigenvalue below 1e-12 are solved
    by minimum-norm least squares and listed in ``degenerate_rows``.
    """
    n, k = p.m.shape[0], p.k
    y = p.y
    gram = (p.w @ (y[:, :, None] * y[:, None, :]).reshape(y.shape[0], k * k)).reshape(n, k, k)
    rhs = (p.w * p.m) @ y
    lam_min = np.linalg.eigvalsh(gram)[:, 0]
    bad = np.flatnonzero(lam_min < DEGENERATE_TOL)
    good = np.flatnonzero(lam_min >= DEGENERATE_TOL)
    x = np.zeros((n, k))
    if good.size:
        x[good] = np.linalg.solve(gram[good], rhs[good][..., None])[..., 0]
    for i in bad:
        x[i] = _min_norm_row(p, i)
    return MultiResponseSolution(x, [int(i) for i in bad])


def _row_sketches(p, rows, m, seed, iteration, attempt):
    side = SIDES.index(p.side)
    n_cols = p.m.shape[1]
    idx, signs = [], []
    n_pad = 0
    for i in rows:
        sk = SrhtSketch.draw(n_cols, m, derive_seed(seed, 1, iteration, side, i, attempt))
        idx.append(sk.row_indices)
        signs.append(sk.signs)
        n_pad = sk.n_pad
    return np.array(idx), np.array(signs), n_pad


def _solve_block(p, rows, eps, cap, m, seed, iteration, attempt):
    kern = backend.current()
    sw, swm = p.scaled()
    if m is None:
        return kern.solve_rows(swm, p.y, sw, rows, eps, cap)
    idx, signs, n_pad = _row_sketches(p, rows, m, seed, iteration, attempt)
    return kern.solve_rows(swm, p.y, sw, rows, eps, cap, idx, signs, n_pad)


def _chunks(rows, size):
    return [rows[i:i + size] for i in range(0, len(rows), size)]


def _solve_rows(p, rows, eps, cap, m, seed, iteration, attempt, workers):
    n_cols = p.m.shape[1]
    per_row = 8 * (n_cols * (p.k + 2)) + (0 if m is None else 9 * (m + n_cols))
    size = max(1, min(len(rows), _CHUNK_BYTES // max(per_row, 1)))
    if workers > 1:
        size = max(1, min(size, -(-len(rows) // workers)))
    blocks = _chunks(rows, size)
    run = lambda r: _solve_block(p, r, eps, cap, m, seed, iteration, attempt)  # noqa: E731
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return tuple(np.concatenate(col) for col in zip(*parts))


def solve_fast(p, eps_sk, delta_sk, seed=0, iteration=0, mode="high", sketch_rows=None,
               workers=None):
    """Per-row (1 + eps_sk) weighted regressions.

    Each row gets failure budget ``delta_sk / n`` and its own sketch drawn
    from ``(seed, iteration, side, row, attempt)``, so the result does not
    depend on scheduling.  Rows whose sketched design is rank deficient are
    solved by minimum-norm least squares and reported as degenerate; a row
    that fails to converge is redrawn once before the failure propagates.
    """
    for val, name in ((eps_sk, "eps_sk"), (delta_sk, "delta_sk")):
        if not 0.0 < val < 0.1:
            raise ValueError(f"{name} must lie in (0, 0.1), got {val}")
    n, n_cols = p.m.shape
    k = p.k
    delta_row = delta_sk / n
    if mode == "low":
        return _solve_low(p, eps_sk, delta_row, seed, iteration)
    if mode != "high":
        raise ValueError(f"mode must be 'high' or 'low', got {mode!r}")
    m = sketch_rows if sketch_rows is not None else srht_rows(n_cols, k, delta_row)
    m = None if m >= n_cols else m
    cap = iteration_cap(eps_sk)
    workers = backend.threads() if workers is None else workers
    rows = np.arange(n, dtype=np.int64)
    x, iters, status, _ = _solve_rows(p, rows, eps_sk, cap, m, seed, iteration, 0, workers)

    kern = backend.current()
    retried = [int(i) for i in np.flatnonzero(status == kern.NOCONV)]
    if retried:
        again = np.array(retried, dtype=np.int64)
        x2, it2, st2, _ = _solve_rows(p, again, eps_sk, cap, m, seed, iteration, 1, 1)
        x[again], iters[again], status[again] = x2, it2, st2
        failed = again[st2 == kern.NOCONV]
        if failed.size:
            raise NoConvergence(
                cap, f"rows {failed.tolist()} did not converge after a redraw",
                rows=failed.tolist(),
            )
    degenerate = [int(i) for i in np.flatnonzero(status == kern.RANK)]
    for i in degenerate:
        x[i] = _min_norm_row(p, i)
    return MultiResponseSolution(x, degenerate, iters, retried)


def _solve_low(p, eps0, delta0, seed, iteration):
    # OSNAP sketch-and-solve per row; benchmarking baseline only
    n, k = p.m.shape[0], p.k
    side = SIDES.index(p.side)
    x = np.zeros((n, k))
    degenerate = []
    for i in range(n):
        prob = RegressionProblem(p.y, p.m[i], p.w[i])
        try:
            rep = weighted_solve(prob, eps0, delta0, mode="low",
                                 seed=derive_seed(seed, 1, iteration, side, i, 0))
            x[i] = rep.solution
        except RankDeficient:
            x[i] = _min_norm_row(p, i)
            degenerate.append(i)
    return MultiResponseSolution(x, degenerate, np.zeros(n, dtype=np.int32))


def raise_if_degenerate(sol, n, limit=0.5):
    """Escalate when more than ``limit * n`` rows were degenerate."""
    if len(sol.degenerate_rows) > limit * n:
        raise DegenerateWeights(sol.degenerate_rows)
