"""Problem instances shared by the generator, solver and diagnostics."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NegativeWeight, ShapeMismatch
from .linalg import as_matrix


@dataclass(frozen=True)
class GroundTruth:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    n_noise: Optional[np.ndarray] = None

    def m_star(self):
        return (self.u * self.sigma) @ self.v.T


@dataclass(frozen=True)
class WlraInstance:
    """Observed ``m``, weights ``w`` and target rank ``k``; ``ground_truth``
    when the instance is synthetic."""

    m: np.ndarray
    w: np.ndarray
    k: int
    ground_truth: Optional[GroundTruth] = None

    def __post_init__(self):
        m = as_matrix(self.m, "m")
        w = as_matrix(self.w, "w")
        if m.shape != w.shape:
            raise ShapeMismatch(f"m {m.shape} and w {w.shape} differ")
        if m.shape[0] != m.shape[1]:
            raise ShapeMismatch(f"m must be square, got {m.shape}")
        neg = np.argwhere(w < 0)
        if neg.size:
            raise NegativeWeight(int(neg[0, 0]), int(neg[0, 1]))
        if not 1 <= self.k <= m.shape[0]:
            raise ValueError(f"k={self.k} must lie in [1, {m.shape[0]}]")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "w", w)

    @property
    def n(self):
        return self.m.shape[0]
