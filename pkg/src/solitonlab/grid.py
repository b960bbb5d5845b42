"""Periodic grid and spectral fields on the domain [-pi, pi).

FFT convention (fixed project-wide): for samples ``u_m = u(x_m)`` on the
uniform nodes ``x_m = -pi + 2*pi*m/n`` the mode array is

    modes[k] = fft(values)[k] / n ,

so that ``u(x_m) = sum_k modes[k] * exp(2j*pi*k*m/n)`` with the integer
wavenumbers ``k = fftfreq(n, 1/n)``.  Relative to the continuum basis
``exp(i*k*x)`` the coefficient of mode k is ``modes[k] * exp(i*k*pi)``; the
extra phase drops out of every diagonal operation (derivatives, propagators,
norms) and is applied explicitly by `eval_at` when interpolating off-grid.

Parseval in this convention:

    sum_m |values_m|^2 = n * sum_k |modes_k|^2 ,

so the discrete L^2 norm is ``||u||^2 = (2*pi/n)*sum|values|^2
= 2*pi*sum|modes|^2`` and the derivative adds a ``k^2`` weight.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasRisk, DecayViolation

#: |u| on the outer 1% of nodes must stay below this times max|u|.
DECAY_RATIO = 1e-12

#: mode magnitude at |k| = (7/8)*(n/2) must stay below this times the peak mode.
TAIL_RATIO = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-pi, pi) with a power-of-two node count."""

    n: int

    def __post_init__(self):
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n}")

    @property
    def x(self) -> np.ndarray:
        return -np.pi + 2.0 * np.pi * np.arange(self.n) / self.n

    @property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @property
    def dx(self) -> float:
        return 2.0 * np.pi / self.n


@dataclass
class SpectralField:
    """Complex field samples plus a consistent Fourier-mode view."""

    grid: Grid
    values: np.ndarray
    _modes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n,):
            raise ValueError("field length does not match grid size")

    @classmethod
    def from_values(cls, grid: Grid, values) -> "SpectralField":
        return cls(grid, np.array(values, dtype=np.complex128))

    @classmethod
    def from_modes(cls, grid: Grid, modes) -> "SpectralField":
        modes = np.asarray(modes, dtype=np.complex128)
        f = cls(grid, np.fft.ifft(modes * grid.n))
        f._modes = modes.copy()
        return f

    @property
    def modes(self) -> np.ndarray:
        if self._modes is None:
            self._modes = np.fft.fft(self.values) / self.grid.n
        return self._modes

    def eval_at(self, x) -> np.ndarray:
        """Trigonometric interpolation at arbitrary points (periodic wrap)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        c = self.modes
        k = self.grid.k
        out = np.empty(x.shape, dtype=np.complex128)
        # blockwise outer product keeps memory bounded on big grids
        step = max(1, 2**22 // self.grid.n)
        for lo in range(0, x.size, step):
            xs = x[lo : lo + step, None]
            out[lo : lo + step] = np.exp(1j * (xs + np.pi) * k[None, :]) @ c
        return out


def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(2.0 * np.pi / f.grid.n * np.sum(np.abs(f.values) ** 2)))


def h1_norm(f: SpectralField) -> float:
    c2 = np.abs(f.modes) ** 2
    return float(np.sqrt(2.0 * np.pi * np.sum((1.0 + f.grid.k**2) * c2)))


def sobolev_norm(f: SpectralField, order: str = "H1") -> float:
    """Discrete L2 or H1 norm, evaluated spectrally."""
    if order == "L2":
        return l2_norm(f)
    if order == "H1":
        return h1_norm(f)
    raise ValueError(f"unknown norm order {order!r}")


def decay_guard(f: SpectralField, warn: bool = False) -> tuple[bool, float]:
    """Check that |u| is negligible on the outer 1% of nodes.

    Returns (passed, measured ratio).  With ``warn=True`` a DecayViolation
    warning carrying the ratio is emitted on failure.
    """
    a = np.abs(f.values)
    peak = float(a.max())
    if peak == 0.0:
        return True, 0.0
    m = max(1, f.grid.n // 100)
    edge = max(float(a[:m].max()), float(a[-m:].max()))
    ratio = edge / peak
    ok = ratio <= DECAY_RATIO
    if not ok and warn:
        warnings.warn(
            f"field does not decay near the domain ends (ratio {ratio:.3e})",
            DecayViolation,
            stacklevel=2,
        )
    return ok, ratio


def mode_tail_ok(f: SpectralField) -> bool:
    """True if the mode magnitude at |k| = (7/8)(n/2) is below TAIL_RATIO of the peak."""
    c = np.abs(f.modes)
    peak = float(c.max())
    if peak == 0.0:
        return True
    kcut = (f.grid.n // 2) * 7 // 8
    mask = np.abs(f.grid.k) >= kcut
    return float(c[mask].max()) <= TAIL_RATIO * peak


def resample(f: SpectralField, target: Grid) -> SpectralField:
    """Exact spectral resampling onto another power-of-two grid."""
    if target.n == f.grid.n:
        return SpectralField.from_values(f.grid, f.values.copy())
    c = f.modes
    n, m = f.grid.n, target.n
    cm = np.zeros(m, dtype=np.complex128)
    half = min(n, m) // 2
    cm[:half] = c[:half]
    cm[-half:] = c[-half:]
    return SpectralField.from_modes(target, cm)


def rescale_field(f: SpectralField, alpha: float, target: Grid) -> SpectralField:
    """Width rescaling u -> u(x/alpha)/alpha, resampled on the target grid.

    Raises AliasRisk when the rescaled field is not spectrally resolved on
    the target grid (tail above 1e-10 of the peak mode).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    vals = f.eval_at(target.x / alpha) / alpha
    out = SpectralField.from_values(target, vals)
    c = np.abs(out.modes)
    peak = float(c.max())
    if peak > 0.0:
        kcut = (target.n // 2) * 7 // 8
        tail = float(c[np.abs(target.k) >= kcut].max())
        if tail > 1e-10 * peak:
            raise AliasRisk(
                f"rescaling by alpha={alpha} leaves mode tail {tail/peak:.3e} of peak"
            )
    return out
