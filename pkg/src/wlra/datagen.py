"""Synthetic WLRA instances: incoherent rank-k ground truth, weights with a
planted spectral gap to the all-ones matrix, and scaled noise."""
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleGamma
from .instance import GroundTruth, WlraInstance
from .linalg import qr, spectral_norm
from .sketch import make_rng

WEIGHT_MODELS = ("allones", "gap_rank1", "gap_random")
GAMMA_TOLERANCE = 0.10


@dataclass(frozen=True)
class GenSpec:
    n: int
    k: int
    tau_target: float = 1.0
    gamma_target: float = 0.0
    noise_level: float = 0.0
    weight_model: str = "gap_rank1"
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.tau_target < 1:
            raise ValueError("tau_target must be >= 1")
        if self.gamma_target < 0 or self.noise_level < 0:
            raise ValueError("gamma_target and noise_level must be >= 0")
        if self.weight_model not in WEIGHT_MODELS:
            raise ValueError(f"weight_model must be one of {WEIGHT_MODELS}")
        if self.weight_model == "allones" and self.gamma_target > 0:
            raise ValueError("allones weights have gamma = 0")


def sign_basis(n, k, rng):
    """Orthonormal factor from QR of a random ``+-1/sqrt(n)`` matrix."""
    b = (rng.integers(0, 2, size=(n, k)) * 2 - 1) / np.sqrt(n)
    return qr(b).q


def _unit_nonneg(n, rng, mix=0.5):
    g = np.abs(rng.standard_normal(n))
    u = mix / np.sqrt(n) + (1 - mix) * g / np.linalg.norm(g)
    return u / np.linalg.norm(u)


def make_weights(n, gamma, model, rng):
    """``W = 11^T + gamma n E`` with ``||E|| = 1``, clamped at zero.

    Returns the weights and the realized gap ``||W - 11^T|| / n``.
    """
    ones = np.ones((n, n))
    if gamma == 0 or model == "allones":
        return ones, 0.0
    if model == "gap_rank1":
        e = np.outer(_unit_nonneg(n, rng), _unit_nonneg(n, rng))
    else:
        g = rng.standard_normal((n, n))
        g = (g + g.T) / 2
        e = g / spectral_norm(g)
    w = np.maximum(ones + gamma * n * e, 0.0)
    realized = spectral_norm(w - ones) / n
    if abs(realized - gamma) > GAMMA_TOLERANCE * gamma:
        raise InfeasibleGamma(gamma, realized)
    return w, realized


def generate(spec):
    """Draw an instance ``M = U diag(sigma) V^T + N`` with weights ``W``."""
    rng = make_rng(spec.seed)
    n, k = spec.n, spec.k
    u = sign_basis(n, k, rng)
    v = sign_basis(n, k, rng)
    sigma = np.geomspace(1.0, 1.0 / spec.tau_target, k)
    sigma[0] = 1.0
    w, _ = make_weights(n, spec.gamma_target, spec.weight_model, rng)
    noise = np.zeros((n, n))
    if spec.noise_level > 0:
        noise = rng.standard_normal((n, n))
        noise *= spec.noise_level / spectral_norm(w * noise)
    m = (u * sigma) @ v.T + noise
    return WlraInstance(m, w, k, GroundTruth(u, sigma, v, noise))
