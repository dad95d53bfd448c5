"""Minimal deterministic SVG line charts (log-spaced n on x, log10 values on y)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
_MARGIN = dict(left=80, right=180, top=40, bottom=60)
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


@dataclass
class CurveSet:
    """x values (sample sizes) plus named series of log10 values."""

    x: np.ndarray
    series: dict = field(default_factory=dict)
    title: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.series = {k: np.asarray(v, dtype=float) for k, v in self.series.items()}
        for name, vals in self.series.items():
            if vals.shape != self.x.shape:
                raise ValueError(f"series {name!r} has {vals.size} points for {self.x.size} x values")


def _fmt(v):
    return f"{v:.2f}"


def _ticks(lo, hi, count=6):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def render_svg(curves: CurveSet) -> str:
    if curves.x.size == 0 or np.any(curves.x <= 0):
        raise ValueError("x values must be positive for a log axis")
    lx = np.log10(curves.x)
    finite = [v[np.isfinite(v)] for v in curves.series.values()]
    finite = np.concatenate(finite) if finite else np.array([])
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (-1.0, 0.0)
    if y_hi - y_lo < 1e-9:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    x_lo, x_hi = float(lx.min()), float(lx.max())
    if x_hi - x_lo < 1e-9:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5

    pw = WIDTH - _MARGIN["left"] - _MARGIN["right"]
    ph = HEIGHT - _MARGIN["top"] - _MARGIN["bottom"]

    def px(v):
        return _MARGIN["left"] + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return _MARGIN["top"] + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if curves.title:
        out.append(f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-size="16">{escape(curves.title)}</text>')
    x0, y0 = _MARGIN["left"], _MARGIN["top"] + ph
    out.append(f'<path d="M{x0},{_MARGIN["top"]} V{y0} H{x0 + pw}" stroke="black" fill="none"/>')
    for e in range(math.ceil(x_lo), math.floor(x_hi) + 1):
        out.append(f'<text x="{_fmt(px(e))}" y="{y0 + 20}" text-anchor="middle" font-size="12">1e{e}</text>')
    for v in _ticks(y_lo, y_hi):
        out.append(f'<text x="{x0 - 8}" y="{_fmt(py(v) + 4)}" text-anchor="end" font-size="12">{v:g}</text>')
    out.append(f'<text x="{x0 + pw / 2:.0f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="13">n</text>')
    out.append(
        f'<text x="18" y="{_MARGIN["top"] + ph / 2:.0f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {_MARGIN["top"] + ph / 2:.0f})">log10 value</text>'
    )

    for idx, (name, vals) in enumerate(curves.series.items()):
        color = _COLORS[idx % len(_COLORS)]
        ok = np.isfinite(vals)
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(lx[ok], vals[ok]))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = _MARGIN["top"] + 10 + 20 * idx
        lx0 = WIDTH - _MARGIN["right"] + 15
        out.append(f'<line x1="{lx0}" y1="{ly}" x2="{lx0 + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx0 + 32}" y="{ly + 4}" font-size="12">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(curves: CurveSet, path) -> str:
    """Write ``curves`` as an SVG file; identical input gives identical bytes."""
    text = render_svg(curves)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return str(path)
