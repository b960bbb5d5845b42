"""Pure-numpy soliton evaluation kernels (fallback backend).

Evaluates the N-soliton profile q(x) = -1.(M^-1 g) and its derivatives with
respect to all 4N manifold parameters, vectorized over a batch of points.

The exponential factors g_j(x) grow like exp(mu_j*(a_j - x)), so |g_j g_k|
overflows double precision long before the profile itself becomes
meaningless.  All entries are therefore computed in a symmetrically scaled
form: with r_j = max(0, mu_j*(a_j - x)) and the bounded factors

    ghat_j = g_j * exp(-r_j)   (|ghat_j| <= 1),   e_j = exp(-r_j),

the matrix Mt = diag(e) M diag(e) has entries (e_j e_k + ghat_j ghat_k*)/D_jk
with D_jk = lam_j - conj(lam_k), and

    q = - sum_j e_j * what_j,      Mt what = i * (i Mt)^-1 ... (see below).

i*Mt is Hermitian with positive diagonal; a Cholesky factorization is
attempted first and a pivoted-LU solve is used if it fails.

Derivatives use d(q)/dp = -z.(dg/dp - dM/dp . w) with M w = g and M^T z = 1;
the rank-structure of dM/dp reduces each parameter to O(N) contractions.
"""

from __future__ import annotations

import numpy as np

from .errors import OverflowRisk

BACKEND_NAME = "python"


def _scaled_system(x, a, v, theta, mu, exp_cap):
    """Common setup: bounded factors, scaled matrix, denominators."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phi = v[None, :] * (x[:, None] - a[None, :]) + theta[None, :]
    rho = mu[None, :] * (a[None, :] - x[:, None])
    worst = float(np.abs(rho).max()) if rho.size else 0.0
    if worst > exp_cap:
        raise OverflowRisk(
            f"|mu*(a-x)| reaches {worst:.1f}, beyond the exponent cap {exp_cap:g}"
        )
    r = np.maximum(rho, 0.0)
    ghat = np.exp(1j * phi + (rho - r))
    er = np.exp(-r)
    lam = v + 1j * mu
    denom = lam[:, None] - np.conj(lam)[None, :]
    mt = (
        er[:, :, None] * er[:, None, :]
        + ghat[:, :, None] * np.conj(ghat)[:, None, :]
    ) / denom[None, :, :]
    return x, ghat, er, mt, denom, lam


def _chol_solve(low, b):
    """Solve L L^H y = b for batches of small lower-triangular L."""
    n = low.shape[-1]
    y = np.empty_like(b)
    for j in range(n):
        acc = b[:, j].copy()
        for k in range(j):
            acc -= low[:, j, k] * y[:, k]
        y[:, j] = acc / low[:, j, j]
    z = np.empty_like(b)
    for j in range(n - 1, -1, -1):
        acc = y[:, j].copy()
        for k in range(j + 1, n):
            acc -= np.conj(low[:, k, j]) * z[:, k]
        z[:, j] = acc / np.conj(low[:, j, j])
    return z


def _hermitian_solve(imt, rhs1, rhs2):
    """Solve i*Mt against two right-hand sides, Cholesky first, LU fallback."""
    try:
        low = np.linalg.cholesky(imt)
    except np.linalg.LinAlgError:
        both = np.stack([rhs1, rhs2], axis=-1)
        sol = np.linalg.solve(imt, both)
        return sol[..., 0], sol[..., 1]
    return _chol_solve(low, rhs1), _chol_solve(low, rhs2)


def _solves(ghat, er, mt):
    """what = Mt^-1 ghat and zhat = Mt^-T e, via the Hermitian matrix i*Mt."""
    imt = 1j * mt
    what, tmp = _hermitian_solve(imt, 1j * ghat, -1j * er.astype(np.complex128))
    zhat = np.conj(tmp)
    return what, zhat


def qn_profile(x, a, v, theta, mu, exp_cap=600.0):
    """N-soliton profile at a batch of points, shape (len(x),)."""
    _, ghat, er, mt, _, _ = _scaled_system(x, a, v, theta, mu, exp_cap)
    what, _ = _solves(ghat, er, mt)
    return -np.sum(er * what, axis=1)


def qn_profile_gradient(x, a, v, theta, mu, exp_cap=600.0):
    """Profile plus all 4N parameter derivatives.

    Returns (q, grad) with grad of shape (4N, len(x)) ordered as the
    (a | v | theta | mu) blocks.
    """
    x, ghat, er, mt, denom, lam = _scaled_system(x, a, v, theta, mu, exp_cap)
    what, zhat = _solves(ghat, er, mt)
    q = -np.sum(er * what, axis=1)

    inv_d = 1.0 / denom[None, :, :]
    gw = np.conj(ghat) * what
    zg = zhat * ghat
    s1 = np.sum(gw[:, None, :] * inv_d, axis=2)          # row sums over k
    s2 = np.sum(zg[:, :, None] * inv_d, axis=1)          # column sums over j
    mt_d = mt * inv_d
    row = np.einsum("xlk,xk->xl", mt_d, what)
    col = np.einsum("xj,xjl->xl", zhat, mt_d)

    t1 = zg
    t2 = gw

    def block(c):
        return c * t1 * (s1 - 1.0) + np.conj(c) * t2 * s2

    d_a = block(-1j * lam[None, :])
    d_v = block(1j * (x[:, None] - a[None, :])) - (zhat * row - what * col)
    d_th = block(1j)
    d_mu = block(a[None, :] - x[:, None]) - 1j * (zhat * row + what * col)

    grad = np.concatenate([d_a, d_v, d_th, d_mu], axis=1).T
    return q, np.ascontiguousarray(grad)
