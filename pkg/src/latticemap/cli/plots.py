"""Self-contained SVG plots with deterministic output.

Coordinates are printed with fixed precision so identical data always give
identical files.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)
PALETTE = ("#1f5fa8", "#d9771a", "#2f8f3a", "#b0302c", "#7450a8", "#8a5a44", "#c4489c", "#5f6b73")


def _fmt(v):
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _tick_label(v):
    return f"{v:.3g}"


def _range(values):
    values = np.asarray(values, dtype=float)
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 0.5
        return lo - pad, hi + pad
    return lo, hi


class _Canvas:
    def __init__(self, xr, yr, style):
        self.x0, self.x1 = xr
        self.y0, self.y1 = yr
        self.left = MARGIN["left"]
        self.right = WIDTH - MARGIN["right"]
        self.top = MARGIN["top"]
        self.bottom = HEIGHT - MARGIN["bottom"]
        self.style = style
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y):
        return self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)

    def axes(self):
        s = self.style
        p = self.parts
        p.append(f'<rect x="{self.left}" y="{self.top}" width="{self.right - self.left}" '
                 f'height="{self.bottom - self.top}" fill="none" stroke="black"/>')
        for v in _ticks(self.x0, self.x1):
            x = self.px(v)
            p.append(f'<line x1="{_fmt(x)}" y1="{self.bottom}" x2="{_fmt(x)}" y2="{self.bottom + 5}" stroke="black"/>')
            p.append(f'<text x="{_fmt(x)}" y="{self.bottom + 18}" text-anchor="middle">{_tick_label(v)}</text>')
        for v in _ticks(self.y0, self.y1):
            y = self.py(v)
            p.append(f'<line x1="{self.left - 5}" y1="{_fmt(y)}" x2="{self.left}" y2="{_fmt(y)}" stroke="black"/>')
            p.append(f'<text x="{self.left - 8}" y="{_fmt(y + 4)}" text-anchor="end">{_tick_label(v)}</text>')
        mid_x = 0.5 * (self.left + self.right)
        mid_y = 0.5 * (self.top + self.bottom)
        if s.get("title"):
            p.append(f'<text x="{_fmt(mid_x)}" y="22" text-anchor="middle" font-size="14">{escape(s["title"])}</text>')
        if s.get("xlabel"):
            p.append(f'<text x="{_fmt(mid_x)}" y="{HEIGHT - 15}" text-anchor="middle">{escape(s["xlabel"])}</text>')
        if s.get("ylabel"):
            p.append(f'<text x="18" y="{_fmt(mid_y)}" text-anchor="middle" '
                     f'transform="rotate(-90 18 {_fmt(mid_y)})">{escape(s["ylabel"])}</text>')

    def legend(self, labels, colors, dashed=None):
        x = self.right + 15
        for i, (label, color) in enumerate(zip(labels, colors)):
            y = self.top + 10 + 18 * i
            dash = ' stroke-dasharray="4 3"' if dashed and dashed[i] else ""
            self.parts.append(f'<line x1="{x}" y1="{y}" x2="{x + 22}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>')
            self.parts.append(f'<text x="{x + 28}" y="{y + 4}">{escape(str(label))}</text>')

    def text(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _lines(data, style):
    x = np.asarray(data["x"], dtype=float)
    series = data["series"]
    if not series:
        raise ValueError("line plot needs at least one series")
    ys = [np.asarray(y, dtype=float) for _, y in series]
    canvas = _Canvas(_range(x), _range(np.concatenate(ys)), style)
    canvas.axes()
    colors = [PALETTE[i % len(PALETTE)] for i in range(len(series))]
    for (label, _), y, color in zip(series, ys, colors):
        pts = " ".join(f"{_fmt(canvas.px(a))},{_fmt(canvas.py(b))}" for a, b in zip(x, y) if math.isfinite(b))
        canvas.parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
    canvas.legend([label for label, _ in series], colors)
    return canvas.text()


def _color(v, lo, hi):
    u = 0.0 if hi == lo or not math.isfinite(v) else min(max((v - lo) / (hi - lo), 0.0), 1.0)
    # dark blue -> yellow
    r = int(round(20 + u * (250 - 20)))
    g = int(round(30 + u * (220 - 30)))
    b = int(round(110 + u * (40 - 110)))
    return f"#{r:02x}{g:02x}{b:02x}"


def _edges(values):
    values = np.asarray(values, dtype=float)
    if values.size == 1:
        return np.array([values[0] - 0.5, values[0] + 0.5])
    mid = 0.5 * (values[1:] + values[:-1])
    return np.concatenate(([2 * values[0] - mid[0]], mid, [2 * values[-1] - mid[-1]]))


def _density(data, style):
    x = np.asarray(data["x"], dtype=float)
    y = np.asarray(data["y"], dtype=float)
    z = np.asarray(data["z"], dtype=float).reshape(len(x), len(y))
    xe, ye = _edges(x), _edges(y)
    canvas = _Canvas((xe[0], xe[-1]), (ye[0], ye[-1]), style)
    lo, hi = _range(z)
    for i in range(len(x)):
        for j in range(len(y)):
            x_a, x_b = canvas.px(xe[i]), canvas.px(xe[i + 1])
            y_a, y_b = canvas.py(ye[j + 1]), canvas.py(ye[j])
            canvas.parts.append(
                f'<rect x="{_fmt(x_a)}" y="{_fmt(y_a)}" width="{_fmt(x_b - x_a)}" '
                f'height="{_fmt(y_b - y_a)}" fill="{_color(z[i, j], lo, hi)}"/>'
            )
    canvas.axes()
    # colour bar
    bx = canvas.right + 20
    steps = 20
    h = (canvas.bottom - canvas.top) / steps
    for k in range(steps):
        v = lo + (hi - lo) * (k + 0.5) / steps
        yk = canvas.bottom - (k + 1) * h
        canvas.parts.append(f'<rect x="{bx}" y="{_fmt(yk)}" width="16" height="{_fmt(h)}" fill="{_color(v, lo, hi)}"/>')
    canvas.parts.append(f'<text x="{bx + 22}" y="{canvas.bottom}">{_tick_label(lo)}</text>')
    canvas.parts.append(f'<text x="{bx + 22}" y="{canvas.top + 10}">{_tick_label(hi)}</text>')
    if style.get("zlabel"):
        canvas.parts.append(f'<text x="{bx}" y="{canvas.top - 8}">{escape(style["zlabel"])}</text>')
    return canvas.text()


def _histogram(data, style):
    sites = np.asarray(data["sites"], dtype=float)
    series = data["series"]
    if len(series) != 2:
        raise ValueError("histogram plots pair exactly two species")
    vals = [np.asarray(v, dtype=float) for _, v in series]
    top = max(float(np.max(v)) if v.size else 0.0 for v in vals) or 1.0
    canvas = _Canvas((sites.min() - 0.5, sites.max() + 0.5), (0.0, top * 1.05), style)
    colors = (PALETTE[1], PALETTE[4])
    width = (canvas.px(1.0) - canvas.px(0.0)) * 0.4
    for offset, v, color in zip((-1, 0), vals, colors):
        for s, h in zip(sites, v):
            x = canvas.px(s) + offset * width
            y = canvas.py(h)
            canvas.parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(width)}" '
                                f'height="{_fmt(canvas.bottom - y)}" fill="{color}"/>')
    canvas.axes()
    canvas.legend([label for label, _ in series], colors)
    return canvas.text()


KINDS = {"lines": _lines, "density": _density, "histogram": _histogram}


def emit_plot(kind, data, path, style=None):
    """Write an SVG; ``kind`` is ``lines``, ``density`` or ``histogram``."""
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r} (choose from {', '.join(KINDS)})")
    text = KINDS[kind](data, dict(style or {}))
    path = Path(path)
    path.write_text(text)
    return path
