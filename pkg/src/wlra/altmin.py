"""Alternating minimization for weighted low-rank approximation.

Each iteration solves for ``X`` with ``Y`` fixed, zeroes overly heavy
rows, re-orthonormalizes, then does the same for ``Y`` on the transposed
problem.  The returned approximation is ``X_hat_T @ Y_{T-1}^T``: the last
clipped (unnormalized) X paired with the Y it was fitted against.
"""
import math
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import multiresponse as mr
from .diagnostics import dist, rho
from .errors import DegenerateInput, DegenerateWeights, NoConvergence, RankDeficient
from .linalg import qr, svd_thin, weighted_frobenius
from .regression import derive_seed, iteration_cap
from .sketch import make_rng

CLIP_POLICIES = ("standard", "scaled", "off")


@dataclass(frozen=True)
class SolveConfig:
    k: int
    eps: float = 1e-6
    t_override: Optional[int] = None
    eps_sk: Optional[float] = None
    delta_sk: Optional[float] = None
    init: str = "random"
    mu: Optional[float] = None
    seed: int = 0
    exact_mode: bool = False
    early_stop_tol: float = 0.0
    clip_policy: str = "standard"
    regression_mode: str = "high"
    sketch_rows: Optional[int] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        for name in ("eps_sk", "delta_sk"):
            val = getattr(self, name)
            if val is not None and not 0.0 < val < 0.1:
                raise ValueError(f"{name} must lie in (0, 0.1)")
        if self.t_override is not None and self.t_override < 1:
            raise ValueError("t_override must be >= 1")
        if self.init not in ("random", "svd"):
            raise ValueError("init must be 'random' or 'svd'")
        if self.mu is not None and self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.clip_policy not in CLIP_POLICIES:
            raise ValueError(f"clip_policy must be one of {CLIP_POLICIES}")
        if self.early_stop_tol < 0:
            raise ValueError("early_stop_tol must be >= 0")

    def iterations(self):
        return self.t_override if self.t_override is not None else iteration_cap(self.eps)

    def resolved(self, n):
        """Copy with ``eps_sk`` / ``delta_sk`` defaults filled in for size ``n``."""
        t = self.iterations()
        eps_sk = self.eps_sk if self.eps_sk is not None else min(1e-10, self.eps ** 2 / n ** 2)
        delta_sk = self.delta_sk if self.delta_sk is not None else 1.0 / (n * n * t * 100)
        return replace(self, eps_sk=eps_sk, delta_sk=min(delta_sk, 0.099))


class FactorPair(NamedTuple):
    x: np.ndarray
    y: np.ndarray


@dataclass
class TraceRecord:
    iteration: int
    residual_w: float
    dist_x: float = math.nan
    dist_y: float = math.nan
    clipped_x: int = 0
    clipped_y: int = 0
    millis: float = 0.0


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)

    COLUMNS = ("iter", "residual_w", "dist_x", "dist_y", "clipped_x", "clipped_y", "millis")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name):
        attr = "iteration" if name == "iter" else name
        return np.array([getattr(r, attr) for r in self.records])


class SolveResult(NamedTuple):
    m_tilde: np.ndarray
    trace: ConvergenceTrace
    factors: FactorPair


def random_init(n, k, seed):
    """``n x k`` matrix of independent ``+-1/sqrt(n)`` entries."""
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, n={n}]")
    rng = make_rng(seed)
    b = rng.integers(0, 2, size=(n, k)) * 2 - 1
    return b / math.sqrt(n)


def clip(x, xi):
    """Zero every row with squared norm above ``4 xi``.

    Returns the clipped copy and the indices of the zeroed rows.
    """
    if not xi > 0:
        raise ValueError("xi must be positive")
    x = np.asarray(x, dtype=np.float64)
    norms = np.einsum("ij,ij->i", x, x)
    drop = np.flatnonzero(~(norms <= 4.0 * xi))
    out = x.copy()
    out[drop] = 0.0
    return out, drop.tolist()


def estimate_mu(m, k):
    """Incoherence of a rank-k SVD of ``m``: the larger of the two factors'."""
    u, s, v = svd_thin(m, k)
    if s[0] == 0.0:
        raise DegenerateInput("observed matrix is zero")
    return max(rho(u), rho(v))


def xi_for(cfg, instance):
    """``mu k / n`` with ``mu`` from the config or estimated from ``M``."""
    n = instance.n
    mu = cfg.mu if cfg.mu is not None else estimate_mu(instance.m, cfg.k)
    return mu * cfg.k / n


def _orthonormalize(x_hat, side, t):
    try:
        return qr(x_hat).q
    except RankDeficient as exc:
        raise DegenerateInput(
            f"iteration {t}: clipped {side} factor lost rank at column {exc.column}"
        ) from exc


def svd_init(m, w, k, xi=None):
    """Top-k right singular vectors of ``W o M``, clipped, then orthonormalized."""
    m = np.asarray(m, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    wm = w * m
    if not wm.any():
        raise DegenerateInput("W o M is zero; no SVD initialization exists")
    _, _, v = svd_thin(wm, k)
    if xi is None:
        xi = estimate_mu(m, k) * k / m.shape[0]
    v_hat, dropped = clip(v, xi)
    if len(dropped) == v.shape[0]:
        raise DegenerateInput("clipping removed every row of the initial factor")
    return _orthonormalize(v_hat, "initial", 0)


INIT_REDRAWS = 8


def initial_factor(instance, cfg, xi=None):
    """``Y_0``: orthonormalized random signs, or the SVD initialization.

    A singular sign matrix (likely only when k is close to n) is redrawn
    from a derived seed.
    """
    if cfg.init == "svd":
        return svd_init(instance.m, instance.w, cfg.k, xi)
    for attempt in range(INIT_REDRAWS):
        keys = (0,) if attempt == 0 else (0, attempt)
        try:
            return qr(random_init(instance.n, cfg.k, derive_seed(cfg.seed, *keys))).q
        except RankDeficient:
            continue
    raise DegenerateInput(f"random initialization singular in {INIT_REDRAWS} draws")


def _clip_threshold(cfg, xi, scale):
    if cfg.clip_policy == "off":
        return math.inf
    if cfg.clip_policy == "scaled":
        return xi * scale * scale
    return xi


def _half_step(problem, cfg, t, seed, n):
    if cfg.exact_mode:
        sol = mr.solve_exact(problem)
    else:
        try:
            sol = mr.solve_fast(problem, cfg.eps_sk, cfg.delta_sk, seed=seed, iteration=t,
                                mode=cfg.regression_mode, sketch_rows=cfg.sketch_rows)
        except NoConvergence as exc:
            raise NoConvergence(exc.iterations, f"iteration {t} ({problem.side} update): {exc}",
                                rows=exc.rows) from exc
    try:
        mr.raise_if_degenerate(sol, n)
    except DegenerateWeights as exc:
        raise DegenerateWeights(
            exc.rows, f"iteration {t} ({problem.side} update): {len(exc.rows)} of {n} rows "
            "have degenerate weights") from exc
    return sol.x


def _apply_clip(x, xi_eff, side, t):
    if math.isinf(xi_eff):
        return x, []
    x_hat, dropped = clip(x, xi_eff)
    if len(dropped) == x.shape[0]:
        raise DegenerateInput(f"iteration {t}: clipping zeroed every row of {side}")
    return x_hat, dropped


def solve(instance, cfg):
    """Run the alternating minimization; see :class:`SolveConfig`."""
    n = instance.n
    if cfg.k > n:
        raise ValueError(f"k={cfg.k} exceeds n={n}")
    cfg = cfg.resolved(n)
    m, w = instance.m, instance.w
    if not m.any():
        raise DegenerateInput("observed matrix is zero")
    t_total = cfg.iterations()
    xi = xi_for(cfg, instance)
    scale = 1.0
    if cfg.clip_policy == "scaled":
        scale = svd_thin(m, 1).sigma[0]
    xi_eff = _clip_threshold(cfg, xi, scale)
    gt = instance.ground_truth

    y = initial_factor(instance, cfg, xi)

    # transposes are materialized once so the column half-step reads
    # contiguous rows; the instance was validated on construction
    mt = np.ascontiguousarray(m.T)
    wt = np.ascontiguousarray(w.T)
    # W and M never change, so the row-scaled forms are shared by every half-step
    sw = np.sqrt(w)
    row_scaled = (sw, sw * m)
    col_scaled = (np.ascontiguousarray(sw.T), np.ascontiguousarray(row_scaled[1].T))
    trace = ConvergenceTrace()
    x_hat = None
    y_prev = y
    prev_res = None
    for t in range(1, t_total + 1):
        start = time.perf_counter()
        y_prev = y
        row_problem = mr.MultiResponseProblem.trusted(m, y, w, "row", row_scaled)
        x_vec = _half_step(row_problem, cfg, t, cfg.seed, n)
        x_hat, clipped_x = _apply_clip(x_vec, xi_eff, "X", t)
        x = _orthonormalize(x_hat, "X", t)

        col_problem = mr.MultiResponseProblem.trusted(mt, x, wt, "column", col_scaled)
        y_vec = _half_step(col_problem, cfg, t, cfg.seed, n)
        y_hat, clipped_y = _apply_clip(y_vec, xi_eff, "Y", t)
        y = _orthonormalize(y_hat, "Y", t)
        millis = (time.perf_counter() - start) * 1e3

        res = weighted_frobenius(m - x_hat @ y_prev.T, w)
        rec = TraceRecord(t, res, clipped_x=len(clipped_x), clipped_y=len(clipped_y),
                          millis=millis)
        if gt is not None:
            rec.dist_x = dist(x, gt.u)
            rec.dist_y = dist(y, gt.v)
        trace.records.append(rec)
        if cfg.early_stop_tol > 0 and prev_res is not None:
            if abs(prev_res - res) <= cfg.early_stop_tol * max(prev_res, np.finfo(float).tiny):
                break
        prev_res = res

    return SolveResult(x_hat @ y_prev.T, trace, FactorPair(x_hat, y_prev))
