"""Error metrics and deterministic curve fits for the quantitative studies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitDiverged, InsufficientData, WindowNotReached
from .grid import Grid, SpectralField, h1_norm
from .solitons import SolitonParams, sample_on_grid


@dataclass
class ErrorSeries:
    """Relative H1 error against the reduced dynamics along one run."""

    t: np.ndarray
    err: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.err = np.asarray(self.err, dtype=float)
        if self.t.size != self.err.size:
            raise ValueError("t and err must have equal length")
        if self.t.size and np.any(np.diff(self.t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.err < 0):
            raise ValueError("errors must be non-negative")


@dataclass(frozen=True)
class FitResult:
    kind: str  # "loglog-line" | "exp-ABC" | "order"
    coefficients: dict
    residual: float
    window: tuple


def relative_h1_error(
    u: SpectralField, p: SolitonParams, g: Grid, norm0: float
) -> float:
    """|| u - q(p) ||_H1 / norm0 on the grid."""
    if norm0 <= 0:
        raise ValueError("norm0 must be positive")
    diff = SpectralField.from_values(g, u.values - sample_on_grid(p, g).values)
    return h1_norm(diff) / norm0


def relative_h1_distance(u: SpectralField, v: SpectralField, norm0: float) -> float:
    diff = SpectralField.from_values(u.grid, u.values - v.values)
    return h1_norm(diff) / norm0


def fit_loglog_slope(points, k: int) -> FitResult:
    """Least-squares line through (log h, log err) on the k smallest h."""
    pts = sorted((float(h), float(e)) for h, e in points)
    if len(pts) < k or k < 2:
        raise InsufficientData(f"need at least {k} points, got {len(pts)}")
    if any(h <= 0 or e <= 0 for h, e in pts):
        raise InsufficientData("log-log fit requires positive h and err")
    sel = pts[:k]
    lh = np.log([h for h, _ in sel])
    le = np.log([e for _, e in sel])
    slope, intercept = np.polyfit(lh, le, 1)
    resid = float(np.sqrt(np.mean((slope * lh + intercept - le) ** 2)))
    return FitResult(
        "loglog-line",
        {"slope": float(slope), "intercept": float(intercept)},
        resid,
        (sel[0][0], sel[-1][0]),
    )


def _exp_profile_residual(t, y, b):
    """Best A, A*C for fixed B, and the least-squares residual.

    Both the growing amplitude A and the floor A*C are kept non-negative
    (C is the non-growing error background); a negative unconstrained floor
    collapses onto the C = 0 model, which keeps the profile well posed on
    windows with few e-folds of growth.
    """
    e = np.exp(b * t)
    basis = np.column_stack([e, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    if coef[1] < 0.0 or coef[0] < 0.0:
        amp = float(e @ y / (e @ e))
        coef = np.array([amp, 0.0])
    r = basis @ coef - y
    return float(np.sqrt(np.mean(r**2))), coef


def fit_exponential(series, window: tuple) -> FitResult:
    """Fit A*(exp(B*t) + C) on a time window.

    B is profiled out: for each candidate B the pair (A, A*C) is a linear
    least-squares solve; the residual over B is minimised on a coarse
    log-spaced scan and then refined by golden-section to relative 1e-6.
    Deterministic for identical inputs.
    """
    if isinstance(series, ErrorSeries):
        t_all, y_all = series.t, series.err
    else:
        t_all, y_all = (np.asarray(a, dtype=float) for a in series)
    lo, hi = window
    mask = (t_all >= lo) & (t_all <= hi)
    t, y = t_all[mask], y_all[mask]
    if t.size < 10:
        raise InsufficientData(
            f"need at least 10 points in the window, got {t.size}"
        )
    span = float(t[-1] - t[0])
    pos = y[y > 0]
    if span <= 0 or pos.size < 2:
        raise FitDiverged("window carries no usable growth data")
    ratio = max(float(pos[-1] / pos[0]), 1.0 + 1e-9)
    b_guess = max(np.log(ratio) / span, 1e-12)
    # keep exp(B*t) representable
    b_max_repr = 600.0 / max(abs(float(t[-1])), 1e-12)

    candidates = b_guess * np.logspace(-2, 2, 81)
    candidates = candidates[candidates <= b_max_repr]
    if candidates.size < 3:
        raise FitDiverged("no representable growth-rate candidates")
    resids = np.array([_exp_profile_residual(t, y, b)[0] for b in candidates])
    i = int(np.argmin(resids))
    if i == 0 or i == candidates.size - 1:
        raise FitDiverged("growth-rate bracket exhausted at the scan boundary")
    blo, bhi = candidates[i - 1], candidates[i + 1]

    gr = (np.sqrt(5.0) - 1.0) / 2.0
    b1 = bhi - gr * (bhi - blo)
    b2 = blo + gr * (bhi - blo)
    f1 = _exp_profile_residual(t, y, b1)[0]
    f2 = _exp_profile_residual(t, y, b2)[0]
    while (bhi - blo) > 1e-6 * abs(blo + bhi) / 2.0 + 1e-15:
        if f1 <= f2:
            bhi, b2, f2 = b2, b1, f1
            b1 = bhi - gr * (bhi - blo)
            f1 = _exp_profile_residual(t, y, b1)[0]
        else:
            blo, b1, f1 = b1, b2, f2
            b2 = blo + gr * (bhi - blo)
            f2 = _exp_profile_residual(t, y, b2)[0]
    b = 0.5 * (blo + bhi)
    resid, coef = _exp_profile_residual(t, y, b)
    a = float(coef[0])
    c = float(coef[1] / coef[0]) if coef[0] != 0 else 0.0
    return FitResult(
        "exp-ABC",
        {"A": a, "B": float(b), "C": c},
        resid,
        (float(lo), float(hi)),
    )


def ehrenfest_window(times, positions, h: float, lo=0.15, hi=1.2) -> tuple:
    """First times at which the position crosses lo/h and hi/h.

    Crossing times are linearly interpolated between samples; raises
    WindowNotReached if the trajectory ends before the upper crossing.
    """
    times = np.asarray(times, dtype=float)
    a = np.asarray(positions, dtype=float)

    def first_crossing(level):
        above = a >= level
        if not above.any():
            return None
        i = int(np.argmax(above))
        if i == 0:
            return float(times[0])
        t0, t1 = times[i - 1], times[i]
        a0, a1 = a[i - 1], a[i]
        return float(t0 + (level - a0) / (a1 - a0) * (t1 - t0))

    t_lo = first_crossing(lo / h)
    t_hi = first_crossing(hi / h)
    if t_lo is None or t_hi is None:
        raise WindowNotReached(
            f"trajectory ends before the position reaches {hi}/h = {hi / h:g}"
        )
    return t_lo, t_hi


def estimate_convergence_order(pairs) -> float:
    """Slope of log err against log dt by least squares."""
    pts = [(float(dt), float(e)) for dt, e in pairs]
    if len(pts) < 3:
        raise InsufficientData("need at least 3 (dt, err) points")
    if any(dt <= 0 or e <= 0 for dt, e in pts):
        raise InsufficientData("order estimate requires positive dt and err")
    ld = np.log([dt for dt, _ in pts])
    le = np.log([e for _, e in pts])
    slope, _ = np.polyfit(ld, le, 1)
    return float(slope)


def linear_regression_r2(x, y) -> tuple:
    """Slope, intercept and R^2 of a plain linear regression."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)
