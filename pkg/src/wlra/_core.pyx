# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: FWHT, Householder QR, one-sided Jacobi sweeps and the
per-row sketch-preconditioned regression loop.

API-compatible with ``wlra._pycore``.  All reductions run in a fixed
left-to-right order so repeated runs are bit-identical.
"""
import numpy as np

from libc.math cimport sqrt, fabs, NAN
from libc.string cimport memset, memcpy

NAME = "compiled"

OK = 0
RANK = 1
NOCONV = 2

cdef double MACH_EPS = 2.220446049250313e-16
cdef double RANK_TOL = 1e-12


cdef void _fwht(double* x, Py_ssize_t n, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t h = 1, i, j, c, o1, o2
    cdef double a, b
    while h < n:
        i = 0
        while i < n:
            for j in range(i, i + h):
                o1 = j * d
                o2 = (j + h) * d
                for c in range(d):
                    a = x[o1 + c]
                    b = x[o2 + c]
                    x[o1 + c] = a + b
                    x[o2 + c] = a - b
            i += 2 * h
        h *= 2


def fwht_inplace(x):
    cdef double[:, ::1] mv = x
    if mv.shape[0] == 0 or mv.shape[1] == 0:
        return x
    with nogil:
        _fwht(&mv[0, 0], mv.shape[0], mv.shape[1])
    return x


cdef Py_ssize_t _house(double* a, Py_ssize_t n, Py_ssize_t k, double* beta,
                       double* rdiag, double* acc) noexcept nogil:
    """In-place Householder QR of row-major a (n x k).

    Reflector j lives in a[j:, j] (including its leading entry), R's
    strict upper part in a[i, j] for i < j and its diagonal in rdiag.
    Returns the first rank-deficient column or -1.
    """
    cdef Py_ssize_t i, j, c, bad = -1
    cdef double alpha, x0, sgn, s, v
    # original column norms, accumulated row by row
    for c in range(k):
        acc[c] = 0.0
    for i in range(n):
        for c in range(k):
            acc[c] += a[i * k + c] * a[i * k + c]
    for c in range(k):
        acc[k + c] = sqrt(acc[c])
    for j in range(k):
        alpha = 0.0
        for i in range(j, n):
            alpha += a[i * k + j] * a[i * k + j]
        alpha = sqrt(alpha)
        if alpha <= RANK_TOL * acc[k + j] or alpha == 0.0:
            if bad < 0:
                bad = j
            beta[j] = 0.0
            rdiag[j] = a[j * k + j]
            continue
        x0 = a[j * k + j]
        sgn = 1.0 if x0 >= 0 else -1.0
        a[j * k + j] = x0 + sgn * alpha
        beta[j] = 1.0 / (alpha * (alpha + fabs(x0)))
        rdiag[j] = -sgn * alpha
        for c in range(j + 1, k):
            acc[c] = 0.0
        for i in range(j, n):
            v = a[i * k + j]
            for c in range(j + 1, k):
                acc[c] += v * a[i * k + c]
        for c in range(j + 1, k):
            acc[c] *= beta[j]
        for i in range(j, n):
            v = a[i * k + j]
            for c in range(j + 1, k):
                a[i * k + c] -= acc[c] * v
    return bad


cdef void _apply_qt(double* a, Py_ssize_t n, Py_ssize_t k, double* beta,
                    double* y) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s
    for j in range(k):
        if beta[j] == 0.0:
            continue
        s = 0.0
        for i in range(j, n):
            s += a[i * k + j] * y[i]
        s *= beta[j]
        for i in range(j, n):
            y[i] -= s * a[i * k + j]


cdef void _solve_r(double* a, Py_ssize_t k, double* rdiag, double* x) noexcept nogil:
    # R x = x, back substitution
    cdef Py_ssize_t i, j
    cdef double s
    i = k - 1
    while i >= 0:
        s = x[i]
        for j in range(i + 1, k):
            s -= a[i * k + j] * x[j]
        x[i] = s / rdiag[i]
        i -= 1


cdef void _solve_rt(double* a, Py_ssize_t k, double* rdiag, double* x) noexcept nogil:
    # R^T x = x, forward substitution
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(k):
        s = x[i]
        for j in range(i):
            s -= a[j * k + i] * x[j]
        x[i] = s / rdiag[i]


def householder_qr(a_in):
    cdef double[:, ::1] a = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0], k = a.shape[1], i, j, c
    cdef double[::1] beta = np.zeros(k)
    cdef double[::1] rdiag = np.zeros(k)
    cdef double[::1] acc = np.zeros(2 * k + 1)
    cdef double[:, ::1] q = np.eye(n, k)
    cdef double[:, ::1] r = np.zeros((k, k))
    cdef Py_ssize_t bad = -1
    cdef double s, v
    if k == 0:
        return np.asarray(q), np.asarray(r), -1
    with nogil:
        bad = _house(&a[0, 0], n, k, &beta[0], &rdiag[0], &acc[0])
        for i in range(k):
            r[i, i] = rdiag[i]
            for j in range(i + 1, k):
                r[i, j] = a[i, j]
        j = k - 1
        while j >= 0:
            if beta[j] != 0.0:
                for c in range(k):
                    acc[c] = 0.0
                for i in range(j, n):
                    v = a[i, j]
                    for c in range(k):
                        acc[c] += v * q[i, c]
                for c in range(k):
                    acc[c] *= beta[j]
                for i in range(j, n):
                    v = a[i, j]
                    for c in range(k):
                        q[i, c] -= acc[c] * v
            j -= 1
        for i in range(k):
            if r[i, i] < 0:
                for j in range(k):
                    r[i, j] = -r[i, j]
                for j in range(n):
                    q[j, i] = -q[j, i]
    return np.asarray(q), np.asarray(r), int(bad)


def jacobi_rotate(at_in, vt_in, double tol, int max_sweeps):
    cdef double[:, ::1] at = at_in
    cdef double[:, ::1] vt = vt_in
    cdef Py_ssize_t d = at.shape[0], n = at.shape[1], dv = vt.shape[1]
    cdef Py_ssize_t p, q, i
    cdef int sweep, result = -1
    cdef bint rotated
    cdef double frob2 = 0.0, null2, alpha, beta, gamma, zeta, t, c, s, x, y
    if d < 2:
        return 0
    with nogil:
        for p in range(d):
            for i in range(n):
                frob2 += at[p, i] * at[p, i]
        null2 = (1e-14 * sqrt(frob2)) ** 2
        for sweep in range(1, max_sweeps + 1):
            rotated = False
            for p in range(d - 1):
                for q in range(p + 1, d):
                    alpha = 0.0
                    beta = 0.0
                    gamma = 0.0
                    for i in range(n):
                        x = at[p, i]
                        y = at[q, i]
                        alpha += x * x
                        beta += y * y
                        gamma += x * y
                    if alpha <= null2 or beta <= null2:
                        continue
                    if fabs(gamma) <= tol * sqrt(alpha * beta):
                        continue
                    rotated = True
                    zeta = (beta - alpha) / (2.0 * gamma)
                    if zeta >= 0:
                        t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                    else:
                        t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = c * t
                    for i in range(n):
                        x = at[p, i]
                        y = at[q, i]
                        at[p, i] = c * x - s * y
                        at[q, i] = s * x + c * y
                    for i in range(dv):
                        x = vt[p, i]
                        y = vt[q, i]
                        vt[p, i] = c * x - s * y
                        vt[q, i] = s * x + c * y
            if not rotated:
                result = sweep
                break
    return result


cdef int _hp(double* A, double* b, Py_ssize_t n, Py_ssize_t d, double eps, int max_iter,
             const long long* idx, const signed char* signs, Py_ssize_t m, Py_ssize_t n_pad,
             double* sa, double* sb, double* buf, double* beta, double* rdiag,
             double* acc, double* g, double* resid, double* z,
             int* iters_out, double* res_out, double* cond_out) noexcept nogil:
    cdef Py_ssize_t rows, r, c, t, w = d + 1, src
    cdef Py_ssize_t bad
    cdef double sg, scale, res, new, change, floor, bnorm, dmax, dmin, s
    cdef int iters = 0, worse = 0, status = 0, it
    if idx == NULL:
        memcpy(sa, A, n * d * sizeof(double))
        memcpy(sb, b, n * sizeof(double))
        rows = n
    else:
        memset(buf, 0, n_pad * w * sizeof(double))
        for r in range(n):
            sg = <double> signs[r]
            for c in range(d):
                buf[r * w + c] = sg * A[r * d + c]
            buf[r * w + d] = sg * b[r]
        _fwht(buf, n_pad, w)
        scale = 1.0 / sqrt(<double> m)
        for t in range(m):
            src = idx[t]
            for c in range(d):
                sa[t * d + c] = buf[src * w + c] * scale
            sb[t] = buf[src * w + d] * scale
        rows = m
    bad = _house(sa, rows, d, beta, rdiag, acc)
    if bad >= 0:
        iters_out[0] = 0
        res_out[0] = NAN
        cond_out[0] = 0.0
        for c in range(d):
            z[c] = 0.0
        return 1
    dmax = 0.0
    dmin = fabs(rdiag[0])
    for c in range(d):
        if fabs(rdiag[c]) > dmax:
            dmax = fabs(rdiag[c])
        if fabs(rdiag[c]) < dmin:
            dmin = fabs(rdiag[c])
    cond_out[0] = dmax / dmin
    _apply_qt(sa, rows, d, beta, sb)
    for c in range(d):
        z[c] = sb[c]
    _solve_r(sa, d, rdiag, z)
    res = 0.0
    bnorm = 0.0
    for r in range(n):
        s = b[r]
        bnorm += s * s
        for c in range(d):
            s -= A[r * d + c] * z[c]
        resid[r] = s
        res += s * s
    res = sqrt(res)
    floor = 64.0 * MACH_EPS * sqrt(bnorm)
    if res > floor:
        for it in range(max_iter):
            for c in range(d):
                g[c] = 0.0
            for r in range(n):
                s = resid[r]
                for c in range(d):
                    g[c] += A[r * d + c] * s
            _solve_rt(sa, d, rdiag, g)
            _solve_r(sa, d, rdiag, g)
            for c in range(d):
                z[c] += g[c]
            new = 0.0
            for r in range(n):
                s = b[r]
                for c in range(d):
                    s -= A[r * d + c] * z[c]
                resid[r] = s
                new += s * s
            new = sqrt(new)
            iters += 1
            change = res - new
            if new <= floor or fabs(change) <= eps * res or fabs(change) <= floor:
                res = new
                break
            if change < 0:
                worse += 1
                if worse >= 3:
                    res = new
                    status = 2
                    break
            else:
                worse = 0
            res = new
    iters_out[0] = iters
    res_out[0] = res
    return status


cdef class _Work:
    cdef double[::1] sa, sb, buf, beta, rdiag, acc, g, resid, a, b

    def __init__(self, Py_ssize_t n, Py_ssize_t d, Py_ssize_t m, Py_ssize_t n_pad):
        cdef Py_ssize_t rows = n if m < n else m
        self.sa = np.zeros(rows * d + 1)
        self.sb = np.zeros(rows + 1)
        self.buf = np.zeros(n_pad * (d + 1) + 1)
        self.beta = np.zeros(d + 1)
        self.rdiag = np.zeros(d + 1)
        self.acc = np.zeros(2 * d + 2)
        self.g = np.zeros(d + 1)
        self.resid = np.zeros(n + 1)
        self.a = np.zeros(n * d + 1)
        self.b = np.zeros(n + 1)


def hp_solve(a_in, b_in, double eps, int max_iter, idx=None, signs=None, Py_ssize_t n_pad=0):
    cdef double[:, ::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], d = a.shape[1], m = 0
    cdef const long long[::1] ix
    cdef const signed char[::1] sg
    cdef const long long* pix = NULL
    cdef const signed char* psg = NULL
    if idx is not None:
        ix = np.ascontiguousarray(idx, dtype=np.int64)
        sg = np.ascontiguousarray(signs, dtype=np.int8)
        m = ix.shape[0]
        pix = &ix[0]
        psg = &sg[0]
    cdef _Work wk = _Work(n, d, m, n_pad)
    cdef double[::1] z = np.zeros(d)
    cdef int iters = 0, status
    cdef double res = 0.0, cond = 0.0
    with nogil:
        status = _hp(&a[0, 0], &b[0], n, d, eps, max_iter, pix, psg, m, n_pad,
                     &wk.sa[0], &wk.sb[0], &wk.buf[0], &wk.beta[0], &wk.rdiag[0],
                     &wk.acc[0], &wk.g[0], &wk.resid[0], &z[0], &iters, &res, &cond)
    if status == 1:
        return np.zeros(d), 0, RANK, float("nan"), float("inf")
    return np.asarray(z), iters, status, res, cond


def solve_rows(swm_in, y_in, sw_in, rows_in, double eps, int max_iter,
               idx=None, signs=None, Py_ssize_t n_pad=0):
    cdef const double[:, ::1] SM = np.ascontiguousarray(swm_in, dtype=np.float64)
    cdef const double[:, ::1] Y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const double[:, ::1] SW = np.ascontiguousarray(sw_in, dtype=np.float64)
    cdef const long long[::1] rows = np.ascontiguousarray(rows_in, dtype=np.int64)
    cdef Py_ssize_t n = Y.shape[0], k = Y.shape[1], count = rows.shape[0]
    cdef Py_ssize_t m = 0, pos, i, r, c
    cdef const long long[:, ::1] ix
    cdef const signed char[:, ::1] sg
    cdef bint sketched = idx is not None
    if sketched:
        ix = np.ascontiguousarray(idx, dtype=np.int64)
        sg = np.ascontiguousarray(signs, dtype=np.int8)
        m = ix.shape[1]
    cdef _Work wk = _Work(n, k, m, n_pad)
    out_arr = np.zeros((count, k))
    it_arr = np.zeros(count, dtype=np.int32)
    st_arr = np.zeros(count, dtype=np.int8)
    res_arr = np.zeros(count)
    cdef double[:, ::1] out = out_arr
    cdef int[::1] its = it_arr
    cdef signed char[::1] st = st_arr
    cdef double[::1] res = res_arr
    cdef double sw, cond
    cdef int iters
    cdef double rr
    if count == 0 or k == 0:
        return out_arr, it_arr, st_arr, res_arr
    with nogil:
        for pos in range(count):
            i = rows[pos]
            for r in range(n):
                sw = SW[i, r]
                wk.b[r] = SM[i, r]
                for c in range(k):
                    wk.a[r * k + c] = sw * Y[r, c]
            if sketched:
                st[pos] = _hp(&wk.a[0], &wk.b[0], n, k, eps, max_iter, &ix[pos, 0], &sg[pos, 0],
                              m, n_pad, &wk.sa[0], &wk.sb[0], &wk.buf[0], &wk.beta[0],
                              &wk.rdiag[0], &wk.acc[0], &wk.g[0], &wk.resid[0], &out[pos, 0],
                              &iters, &rr, &cond)
            else:
                st[pos] = _hp(&wk.a[0], &wk.b[0], n, k, eps, max_iter, NULL, NULL,
                              0, 0, &wk.sa[0], &wk.sb[0], &wk.buf[0], &wk.beta[0],
                              &wk.rdiag[0], &wk.acc[0], &wk.g[0], &wk.resid[0], &out[pos, 0],
                              &iters, &rr, &cond)
            its[pos] = iters
            res[pos] = rr
    return out_arr, it_arr, st_arr, res_arr
