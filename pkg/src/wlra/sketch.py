"""Oblivious subspace embeddings: SRHT and OSNAP.

Both sketches are immutable once drawn and are generated from a Philox
(counter-based) generator seeded explicitly, so a ``(shape, seed)`` pair
always yields the same matrix.
"""
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import backend
from .errors import BadLength, ShapeMismatch
from .linalg import as_matrix, svd_thin


def make_rng(seed):
    """Philox generator from an int or a :class:`numpy.random.SeedSequence`."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def next_pow2(n):
    return 1 if n <= 1 else 1 << (int(n) - 1).bit_length()


def _readonly(x):
    x.setflags(write=False)
    return x


def _columns(a):
    a = np.asarray(a, dtype=np.float64)
    return as_matrix(a[:, None] if a.ndim == 1 else a)


def fwht_in_place(x):
    """Unnormalized Walsh-Hadamard transform, in place.

    ``x`` is 1-D, or 2-D with each column transformed.  The length must be
    a power of two.
    """
    if not isinstance(x, np.ndarray) or x.dtype != np.float64 or not x.flags.c_contiguous:
        raise TypeError("fwht_in_place needs a C-contiguous float64 ndarray")
    n = x.shape[0]
    if n < 1 or n & (n - 1):
        raise BadLength(f"length {n} is not a power of two")
    view = x.reshape(n, 1) if x.ndim == 1 else x
    backend.current().fwht_inplace(view)
    return x


@dataclass(frozen=True, eq=False)
class SrhtSketch:
    """``S = P H D / sqrt(m)`` acting on ``n``-vectors zero-padded to ``n_pad``.

    ``row_indices`` are the sampled rows of H (with replacement) and
    ``signs`` the diagonal of D.
    """

    m: int
    n: int
    n_pad: int
    row_indices: np.ndarray
    signs: np.ndarray
    seed: object = None

    @classmethod
    def draw(cls, n, m, seed):
        if n < 1 or m < 1:
            raise ValueError("n and m must be positive")
        n_pad = next_pow2(n)
        rng = make_rng(seed)
        rows = rng.integers(0, n_pad, size=m, dtype=np.int64)
        signs = (2 * rng.integers(0, 2, size=n_pad, dtype=np.int8) - 1).astype(np.int8)
        return cls(m, n, n_pad, _readonly(rows), _readonly(signs), seed)

    def apply(self, a):
        return srht_apply(self, a)


def srht_apply(sketch, a):
    a = _columns(a)
    if a.shape[0] != sketch.n:
        raise ShapeMismatch(f"sketch expects {sketch.n} rows, got {a.shape[0]}")
    buf = np.zeros((sketch.n_pad, a.shape[1]))
    buf[: sketch.n] = a * sketch.signs[: sketch.n, None]
    backend.current().fwht_inplace(buf)
    return buf[sketch.row_indices] / math.sqrt(sketch.m)


@dataclass(frozen=True, eq=False)
class OsnapSketch:
    """Sparse embedding with exactly ``s`` entries of magnitude 1/sqrt(s) per column."""

    m: int
    n: int
    s: int
    positions: np.ndarray
    signs: np.ndarray
    seed: object = None

    @classmethod
    def draw(cls, n, m, s, seed):
        if not 1 <= s <= m:
            raise ValueError(f"sparsity s={s} must lie in [1, m={m}]")
        rng = make_rng(seed)
        positions = np.empty((n, s), dtype=np.int64)
        for j in range(n):
            positions[j] = rng.choice(m, size=s, replace=False)
        signs = (2 * rng.integers(0, 2, size=(n, s), dtype=np.int8) - 1).astype(np.int8)
        return cls(m, n, s, _readonly(positions), _readonly(signs), seed)

    def as_sparse(self):
        data = self.signs.astype(np.float64).ravel() / math.sqrt(self.s)
        indptr = np.arange(0, self.n * self.s + 1, self.s)
        return sp.csc_matrix((data, self.positions.ravel(), indptr), shape=(self.m, self.n))

    def apply(self, a):
        return osnap_apply(self, a)


def osnap_apply(sketch, a):
    a = _columns(a)
    if a.shape[0] != sketch.n:
        raise ShapeMismatch(f"sketch expects {sketch.n} rows, got {a.shape[0]}")
    return np.asarray(sketch.as_sparse() @ a)


def embedding_distortion(sketch_applied):
    """Extreme singular values ``(sigma_min, sigma_max)`` of ``S U``."""
    sa = as_matrix(sketch_applied)
    m, k = sa.shape
    if not sa.any():
        return 0.0, 0.0
    if m < k:
        # S U has a nontrivial kernel
        _, s, _ = svd_thin(sa, m)
        return 0.0, float(s[0])
    _, s, _ = svd_thin(sa, k)
    return float(s[-1]), float(s[0])
