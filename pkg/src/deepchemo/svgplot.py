"""Minimal deterministic SVG plot emission.

Hand-rolled rather than delegated to a plotting library so that identical
inputs produce identical bytes.  A generation timestamp comment is included
unless the DEEPCHEM_NO_TIMESTAMP=1 environment variable is set.
"""

from __future__ import annotations

import os
import time

import numpy as np

W, H = 640, 440
ML, MR, MT, MB = 70, 20, 40, 50  # margins
PW, PH = W - ML - MR, H - MT - MB


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _axis_range(vals) -> tuple[float, float]:
    lo, hi = float(np.min(vals)), float(np.max(vals))
    if hi == lo:
        pad = 1.0 if hi == 0 else abs(hi) * 0.1
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, xr, yr,
                 extra_attrs: str = ""):
        self.xr, self.yr = xr, yr
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}"{extra_attrs}>'
        ]
        if os.environ.get("DEEPCHEM_NO_TIMESTAMP") != "1":
            stamp = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
            self.parts.append(f"<!-- generated {stamp} -->")
        self.parts.append(f'<rect width="{W}" height="{H}" fill="white"/>')
        self.parts.append(
            f'<text x="{W / 2}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
        self.parts.append(
            f'<text x="{ML + PW / 2}" y="{H - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{xlabel}</text>'
        )
        self.parts.append(
            f'<text x="18" y="{MT + PH / 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 18 {MT + PH / 2})">{ylabel}</text>'
        )
        self._frame_and_ticks()

    def px(self, x: float) -> float:
        lo, hi = self.xr
        return ML + (x - lo) / (hi - lo) * PW

    def py(self, y: float) -> float:
        lo, hi = self.yr
        return MT + PH - (y - lo) / (hi - lo) * PH

    def _frame_and_ticks(self):
        self.parts.append(
            f'<rect x="{ML}" y="{MT}" width="{PW}" height="{PH}" '
            'fill="none" stroke="black"/>'
        )
        for i in range(5):
            fx = self.xr[0] + (self.xr[1] - self.xr[0]) * i / 4
            fy = self.yr[0] + (self.yr[1] - self.yr[0]) * i / 4
            x, y = self.px(fx), self.py(fy)
            self.parts.append(
                f'<line x1="{x:.2f}" y1="{MT + PH}" x2="{x:.2f}" '
                f'y2="{MT + PH + 5}" stroke="black"/>'
                f'<text x="{x:.2f}" y="{MT + PH + 18}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">{_fmt(fx)}</text>'
            )
            self.parts.append(
                f'<line x1="{ML - 5}" y1="{y:.2f}" x2="{ML}" y2="{y:.2f}" '
                f'stroke="black"/>'
                f'<text x="{ML - 8}" y="{y + 3:.2f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="10">{_fmt(fy)}</text>'
            )

    def finish(self) -> str:
        return "\n".join(self.parts) + "\n</svg>\n"


def line_plot(xs, ys, title: str, xlabel: str, ylabel: str,
              mark_x: float | None = None) -> str:
    """Polyline with dot markers; ``mark_x`` draws a labelled vertical rule."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    attrs = f' data-min-x="{_fmt(mark_x)}"' if mark_x is not None else ""
    c = _Canvas(title, xlabel, ylabel, _axis_range(xs), _axis_range(ys), attrs)
    pts = " ".join(f"{c.px(x):.2f},{c.py(y):.2f}" for x, y in zip(xs, ys))
    c.parts.append(
        f'<polyline points="{pts}" fill="none" stroke="blue" stroke-width="1.5"/>'
    )
    for x, y in zip(xs, ys):
        c.parts.append(
            f'<circle cx="{c.px(x):.2f}" cy="{c.py(y):.2f}" r="3" fill="blue"/>'
        )
    if mark_x is not None:
        x = c.px(mark_x)
        c.parts.append(
            f'<line x1="{x:.2f}" y1="{MT}" x2="{x:.2f}" y2="{MT + PH}" '
            'stroke="black" stroke-dasharray="4 3"/>'
        )
    return c.finish()


def scatter_plot(groups, title: str, xlabel: str = "Measured",
                 ylabel: str = "Predicted", lsline: bool = True) -> str:
    """Scatter of (label, x, y, color) groups with a least-squares line
    over all points."""
    all_x = np.concatenate([np.asarray(g[1], dtype=float) for g in groups])
    all_y = np.concatenate([np.asarray(g[2], dtype=float) for g in groups])
    c = _Canvas(title, xlabel, ylabel, _axis_range(all_x), _axis_range(all_y))
    if lsline and len(all_x) >= 2 and np.ptp(all_x) > 0:
        slope, intercept = np.polyfit(all_x, all_y, 1)
        x0, x1 = c.xr
        c.parts.append(
            f'<line x1="{c.px(x0):.2f}" y1="{c.py(slope * x0 + intercept):.2f}" '
            f'x2="{c.px(x1):.2f}" y2="{c.py(slope * x1 + intercept):.2f}" '
            'stroke="gray"/>'
        )
    for li, (label, xs, ys, color) in enumerate(groups):
        for x, y in zip(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)):
            c.parts.append(
                f'<circle cx="{c.px(x):.2f}" cy="{c.py(y):.2f}" r="4" '
                f'fill="{color}" fill-opacity="0.7"/>'
            )
        c.parts.append(
            f'<text x="{W - MR - 10}" y="{MT + 16 + 14 * li}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{color}">{label}</text>'
        )
    return c.finish()
