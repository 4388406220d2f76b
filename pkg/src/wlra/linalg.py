"""Dense linear algebra kernels: QR, thin SVD, spectral and weighted norms,
pseudoinverse.

Matrices are plain 2-D float64 NumPy arrays.  QR is Householder with a
nonnegative R diagonal; the SVD is one-sided Jacobi applied to the
triangular factor of an initial QR.  Both run on the active kernel
backend (see :mod:`wlra.backend`).
"""
import math
from typing import NamedTuple

import numpy as np

from . import backend
from .errors import NegativeWeight, NoConvergence, NonFinite, RankDeficient, ShapeMismatch

_EPS = np.finfo(np.float64).eps


class QrFactors(NamedTuple):
    q: np.ndarray
    r: np.ndarray


class SvdFactors(NamedTuple):
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def as_matrix(a, name="a"):
    """Validate ``a`` as a finite 2-D float64 array (copy-free when possible)."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise NonFinite(f"{name} contains NaN or Inf")
    return a


def qr(a):
    """Householder QR of a tall matrix with full column rank.

    Raises :class:`RankDeficient` naming the first column whose pivot is
    below 1e-12 times that column's norm.
    """
    a = as_matrix(a)
    n, k = a.shape
    if n < k:
        raise ShapeMismatch(f"qr needs rows >= cols, got {a.shape}")
    q, r, bad = backend.current().householder_qr(a)
    if bad >= 0:
        raise RankDeficient(bad)
    return QrFactors(q, r)


def _complete_columns(u, good):
    """Replace the columns of ``u`` not flagged in ``good`` by an
    orthonormal completion of the good ones."""
    rows = u.shape[0]
    basis = u[:, good]
    # candidates: coordinate vectors with the known basis projected out
    cand = np.eye(rows)
    for _ in range(2):
        cand -= basis @ (basis.T @ cand)
    for j in np.flatnonzero(~good):
        # pivoted Gram-Schmidt: take the candidate with the most mass left
        norms = np.einsum("ij,ij->j", cand, cand)
        p = int(np.argmax(norms))
        vec = cand[:, p].copy()
        for _ in range(2):
            vec -= basis @ (basis.T @ vec)
        vec /= math.sqrt(float(vec @ vec))
        u[:, j] = vec
        basis = np.column_stack([basis, vec])
        cand -= np.outer(vec, vec @ cand)
    return u


def _jacobi_svd(a):
    # full thin SVD of a tall (or square) matrix
    kern = backend.current()
    n, d = a.shape
    if n > d:
        q, r, _ = kern.householder_qr(a)
        work = r
    else:
        q = None
        work = a
    rows = work.shape[0]
    at = np.ascontiguousarray(work.T)
    vt = np.eye(d)
    tol = max(1e-15, rows * _EPS)
    cap = 100 * max(d, 1)
    sweeps = kern.jacobi_rotate(at, vt, tol, cap)
    if sweeps < 0:
        raise NoConvergence(cap, "Jacobi SVD did not converge")
    s = np.sqrt(np.einsum("ij,ij->i", at, at))
    order = np.argsort(-s, kind="stable")
    s = s[order]
    at = at[order]
    vt = vt[order]
    null = 1e-14 * math.sqrt(float(s @ s)) if s.size else 0.0
    good = s > max(null, np.finfo(np.float64).tiny)
    u = np.zeros((rows, d))
    u[:, good] = (at[good] / s[good, None]).T
    if not good.all():
        u = _complete_columns(u, good)
    s = np.where(good, s, 0.0)
    if q is not None:
        u = q @ u
    v = vt.T.copy()
    # sign convention: largest-magnitude entry of each right vector positive
    for j in range(d):
        col = v[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            v[:, j] = -col
            u[:, j] = -u[:, j]
    return u, s, v


def svd_thin(a, k):
    """Top-``k`` singular triplets with ``sigma`` sorted nonincreasing."""
    a = as_matrix(a)
    n, d = a.shape
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k={k} must lie in [1, {min(n, d)}]")
    if n >= d:
        u, s, v = _jacobi_svd(a)
    else:
        v, s, u = _jacobi_svd(a.T)
    return SvdFactors(u[:, :k].copy(), s[:k].copy(), v[:, :k].copy())


def frobenius(a):
    a = np.asarray(a, dtype=np.float64)
    return math.sqrt(float(np.sum(a * a)))


def spectral_norm(a, tol=1e-10, max_iter=10000):
    """Largest singular value by power iteration on ``a^T a``.

    The start vector is drawn from a fixed-seed generator so results are
    deterministic.  A zero matrix returns 0.
    """
    a = as_matrix(a)
    if not a.any():
        return 0.0
    rng = np.random.Generator(np.random.Philox(0))
    v = rng.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    sigma_prev = 0.0
    for _ in range(max_iter):
        w = a @ v
        sigma = math.sqrt(float(w @ w))
        v = a.T @ w
        nv = math.sqrt(float(v @ v))
        if nv == 0.0:
            return sigma
        v /= nv
        if abs(sigma - sigma_prev) <= tol * sigma:
            return sigma
        sigma_prev = sigma
    raise NoConvergence(max_iter, "power iteration did not converge")


def weighted_frobenius(a, w):
    """``sqrt(sum_ij w_ij a_ij^2)``."""
    a = as_matrix(a)
    w = as_matrix(w, "w")
    if a.shape != w.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {w.shape}")
    neg = np.argwhere(w < 0)
    if neg.size:
        raise NegativeWeight(int(neg[0, 0]), int(neg[0, 1]))
    return math.sqrt(float(np.sum(w * a * a)))


def pseudoinverse(a):
    """Moore-Penrose inverse; singular values below 1e-12 * sigma_max count as zero."""
    a = as_matrix(a)
    n, k = a.shape
    if a.size == 0 or not a.any():
        return np.zeros((k, n))
    u, s, v = svd_thin(a, min(n, k))
    keep = s > 1e-12 * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (v * inv) @ u.T
