"""Effective dynamics: the GP Hamiltonian restricted to the soliton manifold.

The restricted Hamiltonian is

    H(a, v, theta, mu) = sum_j (mu_j v_j^2 / 2 - mu_j^3 / 6) + U(a, v, theta, mu),
    U = (1/2) * integral V(x) |q(x)|^2 dx,

and the flow of its Hamilton vector field with respect to the restricted
symplectic form

    omega = sum_j (mu_j dv_j ^ da_j + v_j dmu_j ^ da_j + dtheta_j ^ dmu_j)

reads, per soliton,

    da/dt     = v + dU/dv / mu
    dv/dt     = -(dU/da + v * dU/dtheta) / mu
    dtheta/dt = v^2/2 + mu^2/2 + v * dU/dv / mu - dU/dmu
    dmu/dt    = dU/dtheta .

U and its gradient are evaluated by periodic trapezoidal quadrature on the
PDE grid, with the analytic parameter derivatives of q (finite differences
of the profile would be the expensive alternative and are kept as a test
oracle only).  Phases are stored unwrapped along trajectories.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DecayViolation, MassCollapse, NonFiniteDetected
from .grid import Grid
from .potential import PotentialExpr, eval_on_grid
from .solitons import DEFAULT_EXP_CAP, SolitonParams

#: integration aborts when any soliton mass drops below this
MU_MIN = 1e-6

#: endpoint value of |q|^2 above which the quadrature warns
ENDPOINT_DECAY = 1e-14


@dataclass
class HamiltonianContext:
    """Potential V(x) = W(h x) sampled on the quadrature grid."""

    potential: PotentialExpr | None
    grid: Grid
    h: float = 1.0
    mu_min: float = MU_MIN
    exp_cap: float = DEFAULT_EXP_CAP
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.potential is None:
            self.values = np.zeros(self.grid.n)
        else:
            self.values = eval_on_grid(self.potential, self.grid, self.h)
        self.is_zero = not np.any(self.values)
        self.decay_warned = False

    @property
    def weight(self) -> float:
        return 2.0 * np.pi / self.grid.n


@dataclass(frozen=True)
class EffectiveState:
    params: SolitonParams
    time: float


def _check_endpoint_decay(q: np.ndarray, ctx: HamiltonianContext):
    """Warn (once per context) when the quadrature integrand has not decayed."""
    if ctx.potential is None or ctx.decay_warned:
        return
    edge = max(abs(q[0]) ** 2, abs(q[-1]) ** 2)
    if edge > ENDPOINT_DECAY:
        ctx.decay_warned = True
        warnings.warn(
            f"|q|^2 = {edge:.3e} at the domain endpoints; quadrature of V|q|^2 "
            "may see the periodic wrap",
            DecayViolation,
            stacklevel=3,
        )


def compute_VN(p: SolitonParams, ctx: HamiltonianContext) -> float:
    """(1/2) * integral V |q|^2 by the periodic trapezoid rule."""
    if ctx.is_zero:
        return 0.0
    q = kernels.qn_profile(ctx.grid.x, p.a, p.v, p.theta, p.mu, ctx.exp_cap)
    _check_endpoint_decay(q, ctx)
    return float(0.5 * ctx.weight * np.sum(ctx.values * np.abs(q) ** 2))


def compute_VN_gradient(p: SolitonParams, ctx: HamiltonianContext) -> np.ndarray:
    """All 4N partials of the potential term, via the analytic q gradient."""
    if ctx.is_zero:
        return np.zeros(4 * p.n)
    q, grad = kernels.qn_profile_gradient(
        ctx.grid.x, p.a, p.v, p.theta, p.mu, ctx.exp_cap
    )
    _check_endpoint_decay(q, ctx)
    return ctx.weight * (grad * (ctx.values * np.conj(q))[None, :]).real.sum(axis=1)


def restricted_hamiltonian(p: SolitonParams, ctx: HamiltonianContext) -> float:
    kinetic = float(np.sum(0.5 * p.mu * p.v**2 - p.mu**3 / 6.0))
    return kinetic + compute_VN(p, ctx)


def hamiltonian_gradient(p: SolitonParams, ctx: HamiltonianContext) -> np.ndarray:
    """Gradient of the restricted Hamiltonian in (a | v | theta | mu) order."""
    g = compute_VN_gradient(p, ctx)
    n = p.n
    g = g.copy()
    g[n : 2 * n] += p.mu * p.v
    g[3 * n :] += 0.5 * p.v**2 - 0.5 * p.mu**2
    return g


def symplectic_matrix(p: SolitonParams) -> np.ndarray:
    """Matrix of the restricted form in (a | v | theta | mu) coordinates."""
    n = p.n
    omega = np.zeros((4 * n, 4 * n))
    for j in range(n):
        aj, vj, tj, mj = j, n + j, 2 * n + j, 3 * n + j
        omega[vj, aj] = p.mu[j]
        omega[aj, vj] = -p.mu[j]
        omega[mj, aj] = p.v[j]
        omega[aj, mj] = -p.v[j]
        omega[tj, mj] = 1.0
        omega[mj, tj] = -1.0
    return omega


def _rhs_vector(vec: np.ndarray, n: int, ctx: HamiltonianContext) -> np.ndarray:
    a = vec[:n]
    v = vec[n : 2 * n]
    theta = vec[2 * n : 3 * n]
    mu = vec[3 * n :]
    if np.any(mu < ctx.mu_min):
        raise MassCollapse(
            f"a soliton mass dropped below mu_min = {ctx.mu_min:g}"
        )
    out = np.empty_like(vec)
    if ctx.is_zero:
        out[:n] = v
        out[n : 2 * n] = 0.0
        out[2 * n : 3 * n] = 0.5 * v**2 + 0.5 * mu**2
        out[3 * n :] = 0.0
        return out
    q, grad = kernels.qn_profile_gradient(ctx.grid.x, a, v, theta, mu, ctx.exp_cap)
    _check_endpoint_decay(q, ctx)
    gv = ctx.weight * (grad * (ctx.values * np.conj(q))[None, :]).real.sum(axis=1)
    ga, gvel, gth, gmu = gv[:n], gv[n : 2 * n], gv[2 * n : 3 * n], gv[3 * n :]
    out[:n] = v + gvel / mu
    out[n : 2 * n] = -(ga + v * gth) / mu
    out[2 * n : 3 * n] = 0.5 * v**2 + 0.5 * mu**2 + v * gvel / mu - gmu
    out[3 * n :] = gth
    return out


def effective_rhs(p: SolitonParams, ctx: HamiltonianContext) -> np.ndarray:
    """Time derivative of (a | v | theta | mu) under the restricted flow."""
    return _rhs_vector(p.as_vector(), p.n, ctx)


@dataclass
class EffectiveTrajectory:
    """States emitted every `stride` steps of a fixed-step RK4 integration."""

    n: int
    times: np.ndarray
    vectors: np.ndarray  # shape (len(times), 4n), theta unwrapped

    def params_at(self, i: int) -> SolitonParams:
        return SolitonParams.from_vector(self.vectors[i])

    def states(self):
        return [
            EffectiveState(self.params_at(i), float(self.times[i]))
            for i in range(len(self.times))
        ]

    def component(self, name: str, j: int = 0) -> np.ndarray:
        block = {"a": 0, "v": 1, "theta": 2, "mu": 3}[name]
        return self.vectors[:, block * self.n + j]

    def write_csv(self, path, ctx: HamiltonianContext | None = None):
        from .artifacts import write_trajectory_csv

        write_trajectory_csv(path, self, ctx)


def integrate_effective(
    p0: SolitonParams,
    ctx: HamiltonianContext,
    t_final: float,
    dt: float,
    stride: int = 1,
) -> EffectiveTrajectory:
    """Classical fixed-step RK4 for the restricted flow.

    The step count is round(t_final/dt); states (with unwrapped phases) are
    recorded every `stride` steps, always including the initial and final
    states.  MassCollapse / NonFiniteDetected carry the failure time.
    """
    if dt <= 0 or t_final <= 0:
        raise ValueError("dt and t_final must be positive")
    n = p0.n
    steps = max(1, int(round(t_final / dt)))
    dt = t_final / steps
    y = p0.as_vector()
    times = [0.0]
    vectors = [y.copy()]
    for m in range(steps):
        t = m * dt
        try:
            k1 = _rhs_vector(y, n, ctx)
            k2 = _rhs_vector(y + 0.5 * dt * k1, n, ctx)
            k3 = _rhs_vector(y + 0.5 * dt * k2, n, ctx)
            k4 = _rhs_vector(y + dt * k3, n, ctx)
        except MassCollapse as exc:
            raise MassCollapse(str(exc), time=t) from None
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteDetected(
                "effective state became non-finite", time=t + dt
            )
        if (m + 1) % stride == 0 or m == steps - 1:
            times.append((m + 1) * dt)
            vectors.append(y.copy())
    return EffectiveTrajectory(n, np.asarray(times), np.asarray(vectors))
