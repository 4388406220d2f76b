"""Measurable quantities: principal angles, incoherence, assumption checks
on the weights and ground truth, and the theory threshold parameters."""
import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import OrthogonalSubspaces, ShapeMismatch
from .linalg import as_matrix, spectral_norm, svd_thin

DEFAULT_BIG_C = 1e5
ORTHO_TOL = 1e-8
COS_FLOOR = 1e-12
GAMMA_POWER = 1.0 / 6.0  # n^{c0} in the gap condition
BOUND_SLACK = 1e-9


def rho(a):
    """Generalized incoherence ``(n/k) max_i ||a_i||^2``."""
    a = as_matrix(a)
    n, k = a.shape
    return n / k * float(np.max(np.einsum("ij,ij->i", a, a)))


class Angles(NamedTuple):
    sin: float
    cos: float
    tan: float
    dist: float


def _check_pair(y, x):
    y = as_matrix(y, "y")
    x = as_matrix(x, "x")
    if y.shape != x.shape:
        raise ShapeMismatch(f"y {y.shape} and x {x.shape} differ")
    k = y.shape[1]
    for name, a in (("y", y), ("x", x)):
        if np.max(np.abs(a.T @ a - np.eye(k))) > ORTHO_TOL:
            raise ValueError(f"{name} does not have orthonormal columns")
    return y, x


def _top_sv(a):
    return float(svd_thin(a, 1).sigma[0]) if a.any() else 0.0


def _procrustes_dist(y, x, u, v):
    # Q = U V^T maximizes tr(Q^T Y^T X), i.e. minimizes ||Y Q - X||_F
    return _top_sv(y @ (u @ v.T) - x)


def angles(y, x):
    """``(sin, cos, tan, dist)`` of the largest principal angle between
    the column spaces of orthonormal ``y`` and ``x``."""
    y, x = _check_pair(y, x)
    k = y.shape[1]
    u, s, v = svd_thin(y.T @ x, k)
    cos = min(float(s[-1]), 1.0)
    sin = min(_top_sv(x - y @ (y.T @ x)), 1.0)
    if cos < COS_FLOOR:
        raise OrthogonalSubspaces("subspaces are orthogonal; tan is undefined")
    return Angles(sin, cos, sin / cos, _procrustes_dist(y, x, u, v))


def dist(y, x):
    """``||Y Q - X||`` with the Procrustes rotation ``Q``; never raises on
    orthogonal subspaces."""
    y = as_matrix(y, "y")
    x = as_matrix(x, "x")
    if y.shape != x.shape:
        raise ShapeMismatch(f"y {y.shape} and x {x.shape} differ")
    k = y.shape[1]
    u, _, v = svd_thin(y.T @ x, k)
    return _procrustes_dist(y, x, u, v)


@dataclass
class AssumptionReport:
    n: int
    k: int
    mu: float
    tau: float
    gamma: float
    alpha: float
    beta: float
    w_inf1: float
    w_frob: float
    sigma_min: float
    delta_noise: Optional[float] = None
    gamma_threshold: float = 0.0
    gamma_condition_ok: bool = False
    bounds_ok: bool = False
    estimated: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self):
        """``key = value`` lines, one per field, floats at full precision."""
        lines = []
        for key, val in self.to_dict().items():
            if isinstance(val, float):
                val = format(val, ".17g")
            elif isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, list):
                val = ",".join(val) if val else "-"
            elif val is None:
                val = "none"
            lines.append(f"{key} = {val}")
        return "\n".join(lines) + "\n"


def _gram_extremes(f, w):
    """min / max eigenvalue of ``F^T diag(w_i) F`` over the rows w_i of ``w``."""
    n, k = f.shape
    outer = (f[:, :, None] * f[:, None, :]).reshape(n, k * k)
    grams = (w @ outer).reshape(w.shape[0], k, k)
    eig = np.linalg.eigvalsh(grams)
    return float(eig[:, 0].min()), float(eig[:, -1].max())


def alpha_beta(u, v, w):
    """Tightest ``(alpha, beta)`` with ``alpha I <= F^T D F <= beta I`` for
    ``F`` in {U, V} and ``D`` every row or column of ``W`` on a diagonal."""
    lo, hi = math.inf, -math.inf
    for f in (u, v):
        for ww in (w, w.T):
            a, b = _gram_extremes(f, ww)
            lo, hi = min(lo, a), max(hi, b)
    return lo, hi


def gamma_threshold(alpha, k, tau, mu, n):
    """Gap condition ``gamma <= alpha / (100 k^3 tau mu^2 n^{1/6})``."""
    return alpha / (100.0 * k ** 3 * tau * mu ** 2 * n ** GAMMA_POWER)


def check_assumptions(instance, k=None):
    """Measure the incoherence, gap and boundedness hypotheses on an instance.

    Without ground truth, ``mu``, ``tau``, ``sigma_min``, ``alpha`` and
    ``beta`` come from a rank-k SVD of ``M`` and are listed in
    ``estimated``.
    """
    m, w = instance.m, instance.w
    n = m.shape[0]
    k = instance.k if k is None else k
    gt = instance.ground_truth
    estimated = []
    if gt is not None:
        u, sigma, v = gt.u, np.asarray(gt.sigma, dtype=np.float64), gt.v
        delta_noise = None
        if gt.n_noise is not None:
            delta_noise = spectral_norm(w * gt.n_noise)
    else:
        u, sigma, v = svd_thin(m, k)
        delta_noise = None
        estimated = ["mu", "tau", "sigma_min", "alpha", "beta"]
    sigma_min = float(sigma[-1])
    tau = float(sigma[0] / sigma[-1]) if sigma_min > 0 else math.inf
    mu = max(rho(u), rho(v))
    gamma = spectral_norm(w - 1.0) / n
    alpha, beta = alpha_beta(u, v, w)
    w_inf1 = float(max(np.abs(w).sum(axis=1).max(), np.abs(w).sum(axis=0).max()))
    w_frob = float(np.linalg.norm(w))
    limit = n ** 1.5 * gamma + n
    slack = 1.0 + BOUND_SLACK
    thr = gamma_threshold(alpha, k, tau, mu, n) if alpha > 0 and math.isfinite(tau) else 0.0
    return AssumptionReport(
        n=n, k=k, mu=mu, tau=tau, gamma=gamma, alpha=alpha, beta=beta,
        w_inf1=w_inf1, w_frob=w_frob, sigma_min=sigma_min, delta_noise=delta_noise,
        gamma_threshold=thr,
        gamma_condition_ok=bool(alpha > 0 and gamma <= thr),
        bounds_ok=bool(w_frob <= limit * slack and w_inf1 <= limit * slack),
        estimated=estimated,
    )


@dataclass
class TheoryBounds:
    delta_d: float
    delta_f: float
    delta_1: float
    eta: float
    big_c: float
    delta_u: Optional[float] = None
    delta_g: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def theory_bounds(report, k, eta_mode="random", big_c=DEFAULT_BIG_C, dist_yv=None,
                  noise_norm=None, eps_sk=0.0):
    """Threshold parameters at constant ``big_c``.

    ``delta_u`` and ``delta_g`` need the current distance ``dist_yv`` and
    ``||W o N||`` (``noise_norm``, defaulting to the report's value).
    """
    if eta_mode not in ("random", "svd"):
        raise ValueError("eta_mode must be 'random' or 'svd'")
    r = report
    eta = r.mu * k if eta_mode == "random" else 1.0
    delta_d = (big_c * r.alpha ** -1.5 * r.mu ** 1.5 * k ** 2 * r.gamma * math.sqrt(r.w_inf1 / r.n)
               + big_c / r.alpha * eta * r.mu * k ** 2 * math.sqrt(r.tau) * r.gamma)
    delta_f = big_c / r.alpha * eta * k
    noise = r.delta_noise if noise_norm is None else noise_norm
    small_delta = 0.001 * noise if noise is not None else 0.0
    delta_1 = 10.0 * (r.gamma * r.mu * k + small_delta) / r.sigma_min
    out = TheoryBounds(delta_d, delta_f, delta_1, eta, big_c)
    if dist_yv is not None and noise is not None:
        out.delta_u = delta_d * dist_yv + delta_f * noise
        out.delta_g = 0.01 * delta_d * dist_yv + 0.01 * delta_f * noise + 2.0 * math.sqrt(eps_sk)
    return out
