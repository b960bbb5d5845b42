# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled soliton evaluation kernels (hot path).

Same contract and same scaled formulation as `_kernels_py`; see that module
for the algebra.  Here the batch is walked point by point with small dense
factorizations: Cholesky of the Hermitian matrix i*Mt, with a pivoted-LU
fallback when a pivot is not strictly positive.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, isfinite, sin, sqrt

from .errors import OverflowRisk

BACKEND_NAME = "cython"

ctypedef double complex cplx


cdef inline cplx _cexp(double re, double im) noexcept:
    cdef double m = exp(re)
    return m * cos(im) + 1j * (m * sin(im))


cdef int _cholesky(cplx[:, ::1] herm, cplx[:, ::1] low, int n) noexcept:
    cdef int i, j, k
    cdef cplx acc
    cdef double d
    for j in range(n):
        acc = herm[j, j]
        for k in range(j):
            acc = acc - low[j, k] * low[j, k].conjugate()
        d = acc.real
        if not isfinite(d) or d <= 0.0:
            return 1
        low[j, j] = sqrt(d)
        for i in range(j + 1, n):
            acc = herm[i, j]
            for k in range(j):
                acc = acc - low[i, k] * low[j, k].conjugate()
            low[i, j] = acc / low[j, j]
    return 0


cdef void _chol_solve(cplx[:, ::1] low, cplx[::1] rhs, cplx[::1] out, int n) noexcept:
    cdef int i, k
    cdef cplx acc
    for i in range(n):
        acc = rhs[i]
        for k in range(i):
            acc = acc - low[i, k] * out[k]
        out[i] = acc / low[i, i]
    for i in range(n - 1, -1, -1):
        acc = out[i]
        for k in range(i + 1, n):
            acc = acc - low[k, i].conjugate() * out[k]
        out[i] = acc / low[i, i].conjugate()


cdef int _lu(cplx[:, ::1] lu, int[::1] piv, int n) noexcept:
    cdef int i, j, k, p
    cdef double best, mag
    cdef cplx factor, tmp
    for k in range(n):
        best = -1.0
        p = k
        for i in range(k, n):
            mag = fabs(lu[i, k].real) + fabs(lu[i, k].imag)
            if mag > best:
                best = mag
                p = i
        if best <= 0.0 or not isfinite(best):
            return 1
        piv[k] = p
        if p != k:
            for j in range(n):
                tmp = lu[k, j]
                lu[k, j] = lu[p, j]
                lu[p, j] = tmp
        for i in range(k + 1, n):
            factor = lu[i, k] / lu[k, k]
            lu[i, k] = factor
            for j in range(k + 1, n):
                lu[i, j] = lu[i, j] - factor * lu[k, j]
    return 0


cdef void _lu_solve(cplx[:, ::1] lu, int[::1] piv, cplx[::1] b, int n) noexcept:
    cdef int i, k
    cdef cplx tmp, acc
    for k in range(n):
        if piv[k] != k:
            tmp = b[k]
            b[k] = b[piv[k]]
            b[piv[k]] = tmp
    for i in range(n):
        acc = b[i]
        for k in range(i):
            acc = acc - lu[i, k] * b[k]
        b[i] = acc
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for k in range(i + 1, n):
            acc = acc - lu[i, k] * b[k]
        b[i] = acc / lu[i, i]


cdef class _Workspace:
    cdef cplx[:, ::1] mt, imt, low, lu
    cdef cplx[::1] ghat, what, zhat, rhs, gw, zg
    cdef double[::1] er
    cdef int[::1] piv

    def __cinit__(self, int n):
        self.mt = np.empty((n, n), dtype=np.complex128)
        self.imt = np.empty((n, n), dtype=np.complex128)
        self.low = np.empty((n, n), dtype=np.complex128)
        self.lu = np.empty((n, n), dtype=np.complex128)
        self.ghat = np.empty(n, dtype=np.complex128)
        self.what = np.empty(n, dtype=np.complex128)
        self.zhat = np.empty(n, dtype=np.complex128)
        self.rhs = np.empty(n, dtype=np.complex128)
        self.gw = np.empty(n, dtype=np.complex128)
        self.zg = np.empty(n, dtype=np.complex128)
        self.er = np.empty(n, dtype=np.float64)
        self.piv = np.empty(n, dtype=np.int32)


cdef int _point_solve(_Workspace ws, double xm, double[::1] a, double[::1] v,
                      double[::1] theta, double[::1] mu, cplx[:, ::1] inv_denom,
                      double exp_cap, int n) except -1:
    """Fill ws.ghat/er/mt and solve for ws.what, ws.zhat at one point."""
    cdef int i, j, k, bad
    cdef double phi, rho, r
    cdef cplx acc
    for j in range(n):
        phi = v[j] * (xm - a[j]) + theta[j]
        rho = mu[j] * (a[j] - xm)
        if fabs(rho) > exp_cap:
            raise OverflowRisk(
                f"|mu*(a-x)| reaches {fabs(rho):.1f}, beyond the exponent cap {exp_cap:g}"
            )
        r = rho if rho > 0.0 else 0.0
        ws.ghat[j] = _cexp(rho - r, phi)
        ws.er[j] = exp(-r)
    for j in range(n):
        for k in range(n):
            ws.mt[j, k] = (ws.er[j] * ws.er[k]
                           + ws.ghat[j] * ws.ghat[k].conjugate()) * inv_denom[j, k]
            ws.imt[j, k] = 1j * ws.mt[j, k]
    bad = _cholesky(ws.imt, ws.low, n)
    if bad == 0:
        for j in range(n):
            ws.rhs[j] = 1j * ws.ghat[j]
        _chol_solve(ws.low, ws.rhs, ws.what, n)
        for j in range(n):
            ws.rhs[j] = -1j * ws.er[j]
        _chol_solve(ws.low, ws.rhs, ws.zhat, n)
    else:
        for j in range(n):
            for k in range(n):
                ws.lu[j, k] = ws.imt[j, k]
        if _lu(ws.lu, ws.piv, n) != 0:
            # singular beyond pivoting: surface as NaN, caller-level checks react
            for j in range(n):
                ws.what[j] = float("nan")
                ws.zhat[j] = float("nan")
            return 0
        for j in range(n):
            ws.what[j] = 1j * ws.ghat[j]
        _lu_solve(ws.lu, ws.piv, ws.what, n)
        for j in range(n):
            ws.zhat[j] = -1j * ws.er[j]
        _lu_solve(ws.lu, ws.piv, ws.zhat, n)
    for j in range(n):
        ws.zhat[j] = ws.zhat[j].conjugate()
    return 0


def qn_profile(x, a, v, theta, mu, double exp_cap=600.0):
    """N-soliton profile at a batch of points, shape (len(x),)."""
    x_arr = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    a_arr = np.ascontiguousarray(a, dtype=np.float64)
    v_arr = np.ascontiguousarray(v, dtype=np.float64)
    t_arr = np.ascontiguousarray(theta, dtype=np.float64)
    m_arr = np.ascontiguousarray(mu, dtype=np.float64)
    cdef int n = a_arr.shape[0]
    cdef int nx = x_arr.shape[0]
    lam = v_arr + 1j * m_arr
    denom_arr = lam[:, None] - np.conj(lam)[None, :]
    inv_denom_arr = np.ascontiguousarray(1.0 / denom_arr)
    out = np.empty(nx, dtype=np.complex128)

    cdef double[::1] xv = x_arr, av = a_arr, vv = v_arr, tv = t_arr, mv = m_arr
    cdef cplx[:, ::1] inv_denom = inv_denom_arr
    cdef cplx[::1] q = out
    cdef _Workspace ws = _Workspace(n)
    cdef int m, j
    cdef cplx acc
    for m in range(nx):
        _point_solve(ws, xv[m], av, vv, tv, mv, inv_denom, exp_cap, n)
        acc = 0
        for j in range(n):
            acc = acc + ws.er[j] * ws.what[j]
        q[m] = -acc
    return out


def qn_profile_gradient(x, a, v, theta, mu, double exp_cap=600.0):
    """Profile plus all 4N parameter derivatives, grad shape (4N, len(x))."""
    x_arr = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    a_arr = np.ascontiguousarray(a, dtype=np.float64)
    v_arr = np.ascontiguousarray(v, dtype=np.float64)
    t_arr = np.ascontiguousarray(theta, dtype=np.float64)
    m_arr = np.ascontiguousarray(mu, dtype=np.float64)
    cdef int n = a_arr.shape[0]
    cdef int nx = x_arr.shape[0]
    lam_arr = v_arr + 1j * m_arr
    denom_arr = lam_arr[:, None] - np.conj(lam_arr)[None, :]
    inv_denom_arr = np.ascontiguousarray(1.0 / denom_arr)
    q_out = np.empty(nx, dtype=np.complex128)
    g_out = np.empty((4 * n, nx), dtype=np.complex128)

    cdef double[::1] xv = x_arr, av = a_arr, vv = v_arr, tv = t_arr, mv = m_arr
    cdef cplx[:, ::1] inv_denom = inv_denom_arr
    cdef cplx[::1] q = q_out
    cdef cplx[:, ::1] grad = g_out
    cdef cplx[::1] lam = np.ascontiguousarray(lam_arr)
    cdef _Workspace ws = _Workspace(n)
    cdef int m, j, k, l
    cdef cplx acc, s1, s2, row, col, t1, t2, c, blk, dv_extra
    for m in range(nx):
        _point_solve(ws, xv[m], av, vv, tv, mv, inv_denom, exp_cap, n)
        acc = 0
        for j in range(n):
            acc = acc + ws.er[j] * ws.what[j]
            ws.gw[j] = ws.ghat[j].conjugate() * ws.what[j]
            ws.zg[j] = ws.zhat[j] * ws.ghat[j]
        q[m] = -acc
        for l in range(n):
            s1 = 0
            row = 0
            for k in range(n):
                s1 = s1 + ws.gw[k] * inv_denom[l, k]
                row = row + ws.mt[l, k] * ws.what[k] * inv_denom[l, k]
            s2 = 0
            col = 0
            for j in range(n):
                s2 = s2 + ws.zg[j] * inv_denom[j, l]
                col = col + ws.zhat[j] * ws.mt[j, l] * inv_denom[j, l]
            t1 = ws.zg[l]
            t2 = ws.gw[l]
            # a_l:  dgamma = -i*lam_l * gamma
            c = -1j * lam[l]
            grad[l, m] = c * t1 * (s1 - 1.0) + c.conjugate() * t2 * s2
            # v_l:  dgamma = i*(x - a_l)*gamma, plus denominator variation
            c = 1j * (xv[m] - av[l])
            blk = c * t1 * (s1 - 1.0) + c.conjugate() * t2 * s2
            grad[n + l, m] = blk - (ws.zhat[l] * row - ws.what[l] * col)
            # theta_l: dgamma = i*gamma
            c = 1j
            grad[2 * n + l, m] = c * t1 * (s1 - 1.0) + c.conjugate() * t2 * s2
            # mu_l:  dgamma = (a_l - x)*gamma, plus denominator variation
            c = av[l] - xv[m]
            blk = c * t1 * (s1 - 1.0) + c.conjugate() * t2 * s2
            grad[3 * n + l, m] = blk - 1j * (ws.zhat[l] * row + ws.what[l] * col)
    return q_out, g_out
