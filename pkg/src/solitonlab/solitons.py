"""N-soliton states of the cubic NLS equation.

The profile is the ratio of determinants

    q(x) = det M1(x) / det M(x),
    M_jk = (1 + g_j conj(g_k)) / (lam_j - conj(lam_k)),
    g_j(x) = exp(i lam_j x) exp(i (theta_j - v_j a_j)) exp(mu_j a_j),

with lam_j = v_j + i mu_j and M1 the bordered (N+1) matrix; equivalently
q(x) = -1.(M^-1 g).  See Faddeev & Takhtajan, "Hamiltonian Methods in the
Theory of Solitons", for the construction.  Production evaluation goes
through the linear-solve form (kernels module); the determinant form is kept
as an independent cross-check.

Parameter vectors are always ordered as the four blocks (a | v | theta | mu).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateParams
from .grid import Grid, SpectralField, decay_guard, mode_tail_ok

#: minimum pairwise distance between the complex parameters lam_j = v_j + i*mu_j
LAMBDA_SEPARATION = 1e-8

#: largest |mu_j*(a_j - x)| the evaluators accept before raising OverflowRisk
DEFAULT_EXP_CAP = 600.0


@dataclass(frozen=True)
class SolitonParams:
    """Point on the 4N-dimensional soliton manifold: (a, v, theta, mu)."""

    a: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        for name in ("a", "v", "theta", "mu"):
            object.__setattr__(
                self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            )
        n = self.a.size
        if not (self.v.size == self.theta.size == self.mu.size == n) or n == 0:
            raise ValueError("a, v, theta, mu must be equal-length nonempty vectors")
        if np.any(self.mu <= 0):
            raise DegenerateParams("all soliton masses mu_j must be positive")
        lam = self.v + 1j * self.mu
        for j in range(n):
            for k in range(j + 1, n):
                if abs(lam[j] - lam[k]) < LAMBDA_SEPARATION:
                    raise DegenerateParams(
                        f"spectral parameters {j} and {k} coincide within "
                        f"{LAMBDA_SEPARATION:g}"
                    )

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def lam(self) -> np.ndarray:
        return self.v + 1j * self.mu

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.v, self.theta, self.mu])

    @classmethod
    def from_vector(cls, vec) -> "SolitonParams":
        vec = np.asarray(vec, dtype=float)
        n = vec.size // 4
        return cls(vec[:n], vec[n : 2 * n], vec[2 * n : 3 * n], vec[3 * n :])


def eval_qN_solve(x, p: SolitonParams, exp_cap: float = DEFAULT_EXP_CAP):
    """Profile via the factorized linear-solve form (production path)."""
    q = kernels.qn_profile(x, p.a, p.v, p.theta, p.mu, exp_cap)
    return q[0] if np.isscalar(x) else q


def eval_qN_det(x, p: SolitonParams, exp_cap: float = DEFAULT_EXP_CAP):
    """Profile via the determinant ratio (independent cross-check path).

    Uses the same symmetric rescaling of the exponential factors as the
    solve path (exact algebra, applied to both determinants) so that large
    exponents stay representable.
    """
    from .errors import OverflowRisk

    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a, v, theta, mu = p.a, p.v, p.theta, p.mu
    phi = v[None, :] * (x[:, None] - a[None, :]) + theta[None, :]
    rho = mu[None, :] * (a[None, :] - x[:, None])
    worst = float(np.abs(rho).max())
    if worst > exp_cap:
        raise OverflowRisk(
            f"|mu*(a-x)| reaches {worst:.1f}, beyond the exponent cap {exp_cap:g}"
        )
    r = np.maximum(rho, 0.0)
    ghat = np.exp(1j * phi + (rho - r))
    er = np.exp(-r)
    lam = p.lam
    denom = lam[:, None] - np.conj(lam)[None, :]
    mt = (
        er[:, :, None] * er[:, None, :]
        + ghat[:, :, None] * np.conj(ghat)[:, None, :]
    ) / denom[None, :, :]
    n = p.n
    bordered = np.zeros((x.size, n + 1, n + 1), dtype=np.complex128)
    bordered[:, :n, :n] = mt
    bordered[:, :n, n] = ghat
    bordered[:, n, :n] = er
    q = np.linalg.det(bordered) / np.linalg.det(mt)
    return q[0] if scalar else q


def qN_param_gradient(x, p: SolitonParams, exp_cap: float = DEFAULT_EXP_CAP):
    """All 4N partial derivatives of q at x, in (a | v | theta | mu) order.

    Returns shape (4N,) for scalar x, else (4N, len(x)).
    """
    _, grad = kernels.qn_profile_gradient(x, p.a, p.v, p.theta, p.mu, exp_cap)
    return grad[:, 0] if np.isscalar(x) else grad


def eval_with_gradient(x, p: SolitonParams, exp_cap: float = DEFAULT_EXP_CAP):
    """Profile and gradient in one pass (what the effective dynamics uses)."""
    return kernels.qn_profile_gradient(x, p.a, p.v, p.theta, p.mu, exp_cap)


def exact_flow(p: SolitonParams, t: float) -> SolitonParams:
    """Free (V = 0) evolution: a + t*v, theta + (t/2)(mu^2 + v^2) mod 2*pi."""
    theta = np.mod(p.theta + 0.5 * t * (p.mu**2 + p.v**2), 2.0 * np.pi)
    return SolitonParams(p.a + t * p.v, p.v.copy(), theta, p.mu.copy())


def sample_on_grid(
    p: SolitonParams, g: Grid, exp_cap: float = DEFAULT_EXP_CAP
) -> SpectralField:
    """Evaluate the profile on all grid nodes."""
    return SpectralField.from_values(g, eval_qN_solve(g.x, p, exp_cap))


def choose_grid(p: SolitonParams, base: int = 4096, max_n: int = 1 << 17) -> Grid:
    """Smallest power-of-two grid (at least `base`) resolving the profile.

    Starts from a width-based estimate and raises n until the sampled field
    passes both the endpoint-decay and the mode-tail checks, or max_n is hit.
    """
    # sech(mu x) modes decay like exp(-pi k/(2 mu)); roundoff by k ~ 24*mu,
    # and the tail check sits at (7/8)(n/2)
    need = int(np.ceil(24.0 * float(p.mu.max()) * 2.0 * 8.0 / 7.0))
    n = base
    while n < need and n < max_n:
        n *= 2
    while n <= max_n:
        g = Grid(n)
        f = sample_on_grid(p, g)
        if decay_guard(f)[0] and mode_tail_ok(f):
            return g
        n *= 2
    return Grid(max_n)


def rescale_soliton_params(p: SolitonParams, alpha: float) -> SolitonParams:
    """Scaling map (a, v, theta, mu) -> (alpha*a, v/alpha, theta, mu/alpha).

    Consistency: q(x; p)/alpha = q(alpha*x; rescaled p) pointwise.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return SolitonParams(alpha * p.a, p.v / alpha, p.theta.copy(), p.mu / alpha)


def params_distance(p1: SolitonParams, p2: SolitonParams) -> float:
    """Max-abs parameter difference, phases compared modulo 2*pi."""
    dth = np.angle(np.exp(1j * (p1.theta - p2.theta)))
    return float(
        max(
            np.abs(p1.a - p2.a).max(),
            np.abs(p1.v - p2.v).max(),
            np.abs(dth).max(),
            np.abs(p1.mu - p2.mu).max(),
        )
    )
