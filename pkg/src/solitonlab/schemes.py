"""Fourth-order time steppers for the semilinear mode system u_t = L u + N(u).

L is a diagonal (per Fourier mode) linear symbol; N is evaluated
pseudospectrally by the caller and passed in as a closure on mode arrays.

* ETDRK4: the exponential time differencing scheme of Cox & Matthews (J.
  Comput. Phys. 176, 2002), with the phi-function coefficients evaluated by
  the contour-averaging trick of Kassam & Trefethen (SIAM J. Sci. Comput.
  26, 2005).  Near the origin (|z| < 0.5) a truncated Taylor series is used
  instead; both evaluations are exposed for cross-checking.

* ARK4(3)6L[2]SA: the 6-stage additive implicit-explicit Runge-Kutta pair
  of Kennedy & Carpenter (Appl. Numer. Math. 44, 2003).  The implicit part
  is an ESDIRK with diagonal 1/4, so each stage solve is a division by
  (1 - dt/4 * L) per mode.  The coefficients are kept as exact fractions in
  this one file and checksummed by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction as Fr

import numpy as np

from .grid import Grid

#: switch radius between series and contour evaluation of the phi weights
PHI_SWITCH = 0.5

#: contour parameters for the Kassam-Trefethen evaluation
PHI_CONTOUR_POINTS = 32
PHI_CONTOUR_RADIUS = 1.0

_SERIES_TERMS = 30


def phi_series(z, m: int):
    """phi_m(z) = sum_{k>=0} z^k / (k+m)! truncated; accurate for |z| < 1."""
    z = np.asarray(z, dtype=np.complex128)
    acc = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(_SERIES_TERMS):
        acc = acc + term / math.factorial(k + m)
        term = term * z
    return acc


def phi_direct(z, m: int):
    """Closed-form evaluation of phi_m; cancels badly near z = 0."""
    z = np.asarray(z, dtype=np.complex128)
    ez = np.exp(z)
    if m == 1:
        return (ez - 1.0) / z
    if m == 2:
        return (ez - 1.0 - z) / z**2
    if m == 3:
        return (ez - 1.0 - z - 0.5 * z**2) / z**3
    raise ValueError("phi order must be 1, 2 or 3")


def phi_contour(z, m: int, radius=PHI_CONTOUR_RADIUS, points=PHI_CONTOUR_POINTS):
    """Average of the closed form over a circle centred at z (stable everywhere
    the circle keeps clear of the origin-cancellation region)."""
    z = np.asarray(z, dtype=np.complex128)
    theta = np.pi * (2.0 * np.arange(points) + 1.0) / points
    circle = radius * np.exp(1j * theta)
    return phi_direct(z[..., None] + circle, m).mean(axis=-1)


def phi(z, m: int):
    """Hybrid evaluation: series inside |z| < PHI_SWITCH, contour outside."""
    z = np.asarray(z, dtype=np.complex128)
    small = np.abs(z) < PHI_SWITCH
    out = np.empty_like(z)
    if np.any(small):
        out[small] = phi_series(z[small], m)
    if np.any(~small):
        out[~small] = phi_contour(z[~small], m)
    return out


@dataclass
class EtdTableau:
    """Per-mode ETDRK4 coefficients for a fixed grid, symbol and step."""

    dt: float
    exp_full: np.ndarray
    exp_half: np.ndarray
    stage_q: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray

    kind = "etdrk4"


def etd_coefficients(symbol: np.ndarray, dt: float) -> EtdTableau:
    """Build the ETDRK4 tableau for a diagonal linear symbol.

    The update weights are the Cox-Matthews combinations
        w1 = dt*(phi1 - 3 phi2 + 4 phi3),
        w2 = dt*(phi2 - 2 phi3),
        w3 = dt*(4 phi3 - phi2),
    evaluated at z = dt*L, and the stage coefficient is (dt/2) phi1(z/2).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    z = dt * np.asarray(symbol, dtype=np.complex128)
    p1, p2, p3 = phi(z, 1), phi(z, 2), phi(z, 3)
    return EtdTableau(
        dt=dt,
        exp_full=np.exp(z),
        exp_half=np.exp(0.5 * z),
        stage_q=0.5 * dt * phi(0.5 * z, 1),
        w1=dt * (p1 - 3.0 * p2 + 4.0 * p3),
        w2=dt * (p2 - 2.0 * p3),
        w3=dt * (4.0 * p3 - p2),
    )


def etdrk4_step(u: np.ndarray, tab: EtdTableau, nonlinear) -> np.ndarray:
    """One ETDRK4 step on a mode array; `nonlinear` maps modes to N-modes."""
    n0 = nonlinear(u)
    a = tab.exp_half * u + tab.stage_q * n0
    na = nonlinear(a)
    b = tab.exp_half * u + tab.stage_q * na
    nb = nonlinear(b)
    c = tab.exp_half * a + tab.stage_q * (2.0 * nb - n0)
    nc = nonlinear(c)
    return tab.exp_full * u + tab.w1 * n0 + 2.0 * tab.w2 * (na + nb) + tab.w3 * nc


# --- ARK4(3)6L[2]SA additive pair (Kennedy & Carpenter 2003) ----------------

ARK436_C = [Fr(0), Fr(1, 2), Fr(83, 250), Fr(31, 50), Fr(17, 20), Fr(1)]

ARK436_B = [
    Fr(82889, 524892),
    Fr(0),
    Fr(15625, 83664),
    Fr(69875, 102672),
    Fr(-2260, 8211),
    Fr(1, 4),
]

# implicit (ESDIRK, diagonal 1/4 from stage 2 on, stiffly accurate)
ARK436_A_IMPLICIT = [
    [Fr(0), Fr(0), Fr(0), Fr(0), Fr(0), Fr(0)],
    [Fr(1, 4), Fr(1, 4), Fr(0), Fr(0), Fr(0), Fr(0)],
    [Fr(8611, 62500), Fr(-1743, 31250), Fr(1, 4), Fr(0), Fr(0), Fr(0)],
    [
        Fr(5012029, 34652500),
        Fr(-654441, 2922500),
        Fr(174375, 388108),
        Fr(1, 4),
        Fr(0),
        Fr(0),
    ],
    [
        Fr(15267082809, 155376265600),
        Fr(-71443401, 120774400),
        Fr(730878875, 902184768),
        Fr(2285395, 8070912),
        Fr(1, 4),
        Fr(0),
    ],
    [
        Fr(82889, 524892),
        Fr(0),
        Fr(15625, 83664),
        Fr(69875, 102672),
        Fr(-2260, 8211),
        Fr(1, 4),
    ],
]

# explicit (strictly lower triangular)
ARK436_A_EXPLICIT = [
    [Fr(0), Fr(0), Fr(0), Fr(0), Fr(0), Fr(0)],
    [Fr(1, 2), Fr(0), Fr(0), Fr(0), Fr(0), Fr(0)],
    [Fr(13861, 62500), Fr(6889, 62500), Fr(0), Fr(0), Fr(0), Fr(0)],
    [
        Fr(-116923316275, 2393684061468),
        Fr(-2731218467317, 15368042101831),
        Fr(9408046702089, 11113171139209),
        Fr(0),
        Fr(0),
        Fr(0),
    ],
    [
        Fr(-451086348788, 2902428689909),
        Fr(-2682348792572, 7519795681897),
        Fr(12662868775082, 11960479115383),
        Fr(3355817975965, 11060851509271),
        Fr(0),
        Fr(0),
    ],
    [
        Fr(647845179188, 3216320057751),
        Fr(73281519250, 8382639484533),
        Fr(552539513391, 3454668386233),
        Fr(3354512671639, 8306763924573),
        Fr(4040, 17871),
        Fr(0),
    ],
]


def _to_float(rows):
    return np.array([[float(v) for v in row] for row in rows])


def ark436_checksums() -> dict:
    """Residuals of the tableau sanity checks (all should be ~roundoff):

    row sums equal the abscissae for both tables, the weights sum to 1, and
    the shared quadrature conditions sum(b c^(p-1)) = 1/p hold for p <= 4.
    """
    a_im = _to_float(ARK436_A_IMPLICIT)
    a_ex = _to_float(ARK436_A_EXPLICIT)
    b = np.array([float(v) for v in ARK436_B])
    c = np.array([float(v) for v in ARK436_C])
    res = {
        "implicit_row_sums": float(np.abs(a_im.sum(axis=1) - c).max()),
        "explicit_row_sums": float(np.abs(a_ex.sum(axis=1) - c).max()),
        "weights_sum": abs(b.sum() - 1.0),
        "order1": abs(b.sum() - 1.0),
        "order2": abs(float(b @ c) - 0.5),
        "order3": abs(float(b @ c**2) - 1.0 / 3.0),
        "order4": abs(float(b @ c**3) - 0.25),
        "implicit_coupling": abs(float(b @ a_im @ c) - 1.0 / 6.0),
        "explicit_coupling": abs(float(b @ a_ex @ c) - 1.0 / 6.0),
        "explicit_diag": float(np.abs(np.diag(a_ex)).max()),
    }
    return res


@dataclass
class ArkTableau:
    """ARK4(3)6L[2]SA data plus per-mode implicit stage denominators."""

    dt: float
    symbol: np.ndarray
    a_implicit: np.ndarray
    a_explicit: np.ndarray
    b: np.ndarray
    denominators: np.ndarray  # shape (6, n_modes): 1 - dt*A_ii*L

    kind = "ark436"


def ark436_coefficients(symbol: np.ndarray, dt: float) -> ArkTableau:
    if dt <= 0:
        raise ValueError("dt must be positive")
    symbol = np.asarray(symbol, dtype=np.complex128)
    a_im = _to_float(ARK436_A_IMPLICIT)
    dens = 1.0 - dt * np.diag(a_im)[:, None] * symbol[None, :]
    return ArkTableau(
        dt=dt,
        symbol=symbol,
        a_implicit=a_im,
        a_explicit=_to_float(ARK436_A_EXPLICIT),
        b=np.array([float(v) for v in ARK436_B]),
        denominators=dens,
    )


def ark436_step(u: np.ndarray, tab: ArkTableau, nonlinear) -> np.ndarray:
    """One additive IMEX step; each implicit solve is a per-mode division."""
    dt = tab.dt
    lin = []
    non = []
    for i in range(6):
        rhs = u.copy()
        for j in range(i):
            if tab.a_implicit[i, j] != 0.0:
                rhs += (dt * tab.a_implicit[i, j]) * lin[j]
            if tab.a_explicit[i, j] != 0.0:
                rhs += (dt * tab.a_explicit[i, j]) * non[j]
        stage = rhs / tab.denominators[i]
        lin.append(tab.symbol * stage)
        non.append(nonlinear(stage))
    out = u.copy()
    for i in range(6):
        if tab.b[i] != 0.0:
            out += (dt * tab.b[i]) * (lin[i] + non[i])
    return out


def gp_linear_symbol(g: Grid) -> np.ndarray:
    """Diagonal GP symbol -(i/2) k^2 per mode."""
    return -0.5j * g.k.astype(np.complex128) ** 2


def mkdv_linear_symbol(g: Grid) -> np.ndarray:
    """Diagonal mKdV symbol i k^3 per mode (Nyquist zeroed: odd derivative)."""
    k = g.k.copy()
    k[g.n // 2] = 0.0
    return 1j * k.astype(np.complex128) ** 3
