"""Minimal deterministic SVG line plots (no timestamps, fixed formatting)."""

from __future__ import annotations

import math
from pathlib import Path

from .errors import IoError

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#17becf", "#7f7f7f")

WIDTH, HEIGHT = 800, 560
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 24, 36, 56


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, log: bool):
    if log:
        lo_d = math.floor(lo)
        hi_d = math.ceil(hi)
        step = max(1, (hi_d - lo_d) // 6)
        return [float(d) for d in range(int(lo_d), int(hi_d) + 1, int(step))]
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * abs(step):
        out.append(v)
        v += step
    return out


def _tick_label(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return f"{v:.4g}"


class LinePlot:
    """Collects curves and renders one SVG; transforms are exposed so tests
    can verify pixel positions."""

    def __init__(self, xlabel="", ylabel="", title="", logx=False, logy=False):
        self.curves = []
        self.xlabel, self.ylabel, self.title = xlabel, ylabel, title
        self.logx, self.logy = logx, logy

    def add(self, x, y, label="", dashed=False):
        xs = [float(v) for v in x]
        ys = [float(v) for v in y]
        if len(xs) != len(ys) or not xs:
            raise IoError("curve must have matching nonempty x and y")
        self.curves.append((xs, ys, label, dashed))

    def _transformed(self):
        out = []
        for xs, ys, label, dashed in self.curves:
            tx, ty = [], []
            for x, y in zip(xs, ys):
                if self.logx:
                    if x <= 0:
                        continue
                    x = math.log10(x)
                if self.logy:
                    if y <= 0:
                        continue
                    y = math.log10(y)
                tx.append(x)
                ty.append(y)
            if tx:
                out.append((tx, ty, label, dashed))
        if not out:
            raise IoError("no plottable points (log axes drop non-positive values)")
        return out

    def pixel_transform(self):
        """Returns (to_px_x, to_px_y) mapping data coords to pixels."""
        curves = self._transformed()
        xlo = min(min(c[0]) for c in curves)
        xhi = max(max(c[0]) for c in curves)
        ylo = min(min(c[1]) for c in curves)
        yhi = max(max(c[1]) for c in curves)
        if xhi <= xlo:
            xhi = xlo + 1.0
        if yhi <= ylo:
            yhi = ylo + 1.0
        pad_y = 0.05 * (yhi - ylo)
        ylo, yhi = ylo - pad_y, yhi + pad_y
        inner_w = WIDTH - MARGIN_L - MARGIN_R
        inner_h = HEIGHT - MARGIN_T - MARGIN_B

        def to_px_x(x):
            return MARGIN_L + (x - xlo) / (xhi - xlo) * inner_w

        def to_px_y(y):
            return MARGIN_T + (yhi - y) / (yhi - ylo) * inner_h

        return to_px_x, to_px_y, (xlo, xhi, ylo, yhi)

    def render(self) -> str:
        curves = self._transformed()
        to_x, to_y, (xlo, xhi, ylo, yhi) = self.pixel_transform()
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        # axes box
        parts.append(
            f'<rect x="{MARGIN_L}" y="{MARGIN_T}" '
            f'width="{WIDTH - MARGIN_L - MARGIN_R}" '
            f'height="{HEIGHT - MARGIN_T - MARGIN_B}" '
            'fill="none" stroke="black" stroke-width="1"/>'
        )
        for tv in _ticks(xlo, xhi, self.logx):
            if tv < xlo - 1e-12 or tv > xhi + 1e-12:
                continue
            px = to_x(tv)
            parts.append(
                f'<line x1="{_fmt(px)}" y1="{HEIGHT - MARGIN_B}" '
                f'x2="{_fmt(px)}" y2="{HEIGHT - MARGIN_B + 5}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN_B + 18}" '
                f'font-size="11" text-anchor="middle">{_tick_label(tv, self.logx)}</text>'
            )
        for tv in _ticks(ylo, yhi, self.logy):
            if tv < ylo - 1e-12 or tv > yhi + 1e-12:
                continue
            py = to_y(tv)
            parts.append(
                f'<line x1="{MARGIN_L - 5}" y1="{_fmt(py)}" '
                f'x2="{MARGIN_L}" y2="{_fmt(py)}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{MARGIN_L - 8}" y="{_fmt(py + 4)}" font-size="11" '
                f'text-anchor="end">{_tick_label(tv, self.logy)}</text>'
            )
        if self.xlabel:
            parts.append(
                f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" font-size="13" '
                f'text-anchor="middle">{self.xlabel}</text>'
            )
        if self.ylabel:
            parts.append(
                f'<text x="16" y="{HEIGHT // 2}" font-size="13" text-anchor="middle" '
                f'transform="rotate(-90 16 {HEIGHT // 2})">{self.ylabel}</text>'
            )
        if self.title:
            parts.append(
                f'<text x="{WIDTH // 2}" y="22" font-size="14" '
                f'text-anchor="middle">{self.title}</text>'
            )
        for i, (tx, ty, label, dashed) in enumerate(curves):
            color = _PALETTE[i % len(_PALETTE)]
            pts = " ".join(f"{_fmt(to_x(x))},{_fmt(to_y(y))}" for x, y in zip(tx, ty))
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5"'
                f'{dash} points="{pts}"/>'
            )
            if label:
                ly = MARGIN_T + 16 + 16 * i
                lx = WIDTH - MARGIN_R - 180
                parts.append(
                    f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                    f'stroke="{color}" stroke-width="1.5"{dash}/>'
                )
                parts.append(
                    f'<text x="{lx + 30}" y="{ly}" font-size="11">{label}</text>'
                )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render())
        return path
