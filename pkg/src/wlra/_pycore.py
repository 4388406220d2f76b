"""Pure NumPy implementations of the hot kernels.

Mirrors the API of the compiled ``wlra._core`` extension exactly; the
package falls back to this module when the extension is unavailable or
``WLRA_BACKEND=python`` is set.
"""
import math

import numpy as np
from scipy.linalg import solve_triangular

NAME = "python"

OK = 0
RANK = 1
NOCONV = 2

_MACH_EPS = np.finfo(np.float64).eps
RANK_TOL = 1e-12


def fwht_inplace(x):
    """Unnormalized Walsh-Hadamard transform of each column of ``x``.

    ``x`` must be a C-contiguous float64 array of shape (n, d) with n a
    power of two; it is overwritten.
    """
    n = x.shape[0]
    d = x.shape[1]
    h = 1
    while h < n:
        y = x.reshape(n // (2 * h), 2, h, d)
        top = y[:, 0].copy()
        y[:, 0] += y[:, 1]
        y[:, 1] = top - y[:, 1]
        h *= 2
    return x


def householder_qr(a):
    """Thin Householder QR with a nonnegative diagonal in R.

    Returns ``(q, r, bad)`` where ``bad`` is the first column whose pivot
    fell below ``RANK_TOL`` times its original norm, or -1.
    """
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    n, k = a.shape
    col_norms = np.sqrt(np.einsum("ij,ij->j", a, a))
    vs = []
    betas = np.zeros(k)
    bad = -1
    for j in range(k):
        x = a[j:, j]
        alpha = math.sqrt(float(x @ x))
        if alpha <= RANK_TOL * col_norms[j] or alpha == 0.0:
            if bad < 0:
                bad = j
            vs.append(None)
            a[j + 1:, j] = 0.0
            continue
        v = x.copy()
        sgn = 1.0 if v[0] >= 0 else -1.0
        v[0] += sgn * alpha
        beta = 1.0 / (alpha * (alpha + abs(x[0])))
        sub = a[j:, j:]
        sub -= beta * np.outer(v, v @ sub)
        a[j, j] = -sgn * alpha
        a[j + 1:, j] = 0.0
        vs.append(v)
        betas[j] = beta
    r = np.triu(a[:k, :k])
    q = np.eye(n, k)
    for j in range(k - 1, -1, -1):
        v = vs[j]
        if v is None:
            continue
        q[j:, :] -= betas[j] * np.outer(v, v @ q[j:, :])
    neg = np.diag(r) < 0
    r[neg, :] *= -1.0
    q[:, neg] *= -1.0
    return q, r, bad


def _round_robin(d):
    m = d + (d % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < d and b < d:
                ps.append(min(a, b))
                qs.append(max(a, b))
        if ps:
            rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_rotate(at, vt, tol, max_sweeps):
    """One-sided Jacobi on the rows of ``at`` (the columns of A).

    Rotations are accumulated into the rows of ``vt``.  Both arrays are
    modified in place.  Returns the number of sweeps, or -1 when the
    sweep cap is exhausted.
    """
    d = at.shape[0]
    if d < 2:
        return 0
    frob2 = float(np.einsum("ij,ij->", at, at))
    null2 = (1e-14 * math.sqrt(frob2)) ** 2
    rounds = _round_robin(d)
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p, q in rounds:
            ap = at[p]
            aq = at[q]
            alpha = np.einsum("ij,ij->i", ap, ap)
            beta = np.einsum("ij,ij->i", aq, aq)
            gamma = np.einsum("ij,ij->i", ap, aq)
            act = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (alpha > null2) & (beta > null2)
            if not act.any():
                continue
            rotated = True
            p = p[act]
            q = q[act]
            g = gamma[act]
            zeta = (beta[act] - alpha[act]) / (2.0 * g)
            sgn = np.where(zeta >= 0, 1.0, -1.0)
            t = sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c = c[:, None]
            s = s[:, None]
            ap = at[p]
            aq = at[q]
            at[p] = c * ap - s * aq
            at[q] = s * ap + c * aq
            vp = vt[p]
            vq = vt[q]
            vt[p] = c * vp - s * vq
            vt[q] = s * vp + c * vq
        if not rotated:
            return sweep
    return -1


def _sketch(a, b, idx, signs, n_pad):
    n, d = a.shape
    m = idx.shape[0]
    buf = np.zeros((n_pad, d + 1))
    sg = signs[:n].astype(np.float64)
    buf[:n, :d] = a * sg[:, None]
    buf[:n, d] = b * sg
    fwht_inplace(buf)
    sel = buf[idx] / math.sqrt(m)
    return np.ascontiguousarray(sel[:, :d]), sel[:, d].copy()


def hp_solve(a, b, eps, max_iter, idx=None, signs=None, n_pad=0):
    """Sketch-preconditioned Richardson iteration for min ||a z - b||.

    With ``idx is None`` the sketch is the identity.  Returns
    ``(z, iterations, status, residual, cond_estimate)``.
    """
    n, d = a.shape
    if idx is None:
        sa, sb = a, b
    else:
        sa, sb = _sketch(a, b, idx, signs, n_pad)
    q, r, bad = householder_qr(sa)
    if bad >= 0:
        return np.zeros(d), 0, RANK, float("nan"), float("inf")
    diag = np.abs(np.diag(r))
    cond = float(diag.max() / diag.min()) if d else 1.0
    z = solve_triangular(r, q.T @ sb)
    resid = b - a @ z
    res = math.sqrt(float(resid @ resid))
    floor = 64.0 * _MACH_EPS * math.sqrt(float(b @ b))
    iters = 0
    worse = 0
    status = OK
    if res <= floor:
        return z, iters, status, res, cond
    for _ in range(max_iter):
        g = a.T @ resid
        u = solve_triangular(r, g, trans="T")
        z = z + solve_triangular(r, u)
        resid = b - a @ z
        new = math.sqrt(float(resid @ resid))
        iters += 1
        change = res - new
        if new <= floor or abs(change) <= eps * res or abs(change) <= floor:
            res = new
            break
        if change < 0:
            worse += 1
            if worse >= 3:
                res = new
                status = NOCONV
                break
        else:
            worse = 0
        res = new
    return z, iters, status, res, cond


def solve_rows(swm, y, sw, rows, eps, max_iter, idx=None, signs=None, n_pad=0):
    """Solve the weighted regressions for the requested target rows.

    ``sw`` holds square-rooted weights and ``swm`` the targets already
    scaled by them, so row ``i`` solves ``min_x || sw[i] * (y x) - swm[i] ||``.  ``idx``
    and ``signs`` hold one sketch per requested row (or None for the
    identity sketch).
    """
    k = y.shape[1]
    count = len(rows)
    out = np.zeros((count, k))
    iters = np.zeros(count, dtype=np.int32)
    status = np.zeros(count, dtype=np.int8)
    res = np.zeros(count)
    for pos, i in enumerate(rows):
        a = y * sw[i][:, None]
        b = swm[i]
        if idx is None:
            z, it, st, rr, _ = hp_solve(a, b, eps, max_iter)
        else:
            z, it, st, rr, _ = hp_solve(a, b, eps, max_iter, idx[pos], signs[pos], n_pad)
        out[pos] = z
        iters[pos] = it
        status[pos] = st
        res[pos] = rr
    return out, iters, status, res
