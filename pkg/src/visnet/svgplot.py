"""Minimal SVG emitters for persistence diagrams and decision regions.

Output is plain text with fixed number formatting, so it is byte-stable for
a given input. A generation timestamp comment is added only when ``stamp``
is passed.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

SIZE = 360
PAD = 40


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _header(title: str, stamp: str | None, width: int = SIZE, height: int = SIZE) -> list:
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">']
    if stamp:
        out.append(f"<!-- generated {escape(stamp)} -->")
    out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="13" '
               f'font-family="sans-serif">{escape(title)}</text>')
    return out


class _Axes:
    def __init__(self, lo: float, hi: float, ylo: float | None = None, yhi: float | None = None):
        self.lo, self.hi = lo, hi
        self.ylo = lo if ylo is None else ylo
        self.yhi = hi if yhi is None else yhi

    def x(self, v):
        return PAD + (v - self.lo) / (self.hi - self.lo) * (SIZE - 2 * PAD)

    def y(self, v):
        return SIZE - PAD - (v - self.ylo) / (self.yhi - self.ylo) * (SIZE - 2 * PAD)


def _frame(ax: _Axes, xlabel: str, ylabel: str) -> list:
    x0, x1, y0, y1 = ax.x(ax.lo), ax.x(ax.hi), ax.y(ax.ylo), ax.y(ax.yhi)
    return [
        f'<rect x="{_fmt(x0)}" y="{_fmt(y1)}" width="{_fmt(x1 - x0)}" height="{_fmt(y0 - y1)}" '
        f'fill="none" stroke="black" stroke-width="1"/>',
        f'<text x="{_fmt((x0 + x1) / 2)}" y="{SIZE - 8}" text-anchor="middle" font-size="11" '
        f'font-family="sans-serif">{escape(xlabel)}</text>',
        f'<text x="12" y="{_fmt((y0 + y1) / 2)}" text-anchor="middle" font-size="11" '
        f'font-family="sans-serif" transform="rotate(-90 12 {_fmt((y0 + y1) / 2)})">'
        f"{escape(ylabel)}</text>",
        f'<text x="{_fmt(x0)}" y="{_fmt(y0 + 14)}" font-size="9" font-family="sans-serif">'
        f"{ax.lo:.3g}</text>",
        f'<text x="{_fmt(x1)}" y="{_fmt(y0 + 14)}" text-anchor="end" font-size="9" '
        f'font-family="sans-serif">{ax.hi:.3g}</text>',
    ]


def diagram_svg(dg, title: str = "persistence diagram", stamp: str | None = None) -> str:
    """Dim-0 points as circles (above the diagonal), dim-1 points as squares
    (below it). Essential points sit on a dashed line labelled infinity."""
    finite = [v for p in dg.dim0 for v in (p.birth, p.death) if math.isfinite(v)]
    finite += [v for p in dg.dim1 for v in (p.birth, p.death)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    lo, hi = lo - 0.05 * span, hi + 0.15 * span
    inf_level = hi - 0.05 * span
    ax = _Axes(lo, hi)

    out = _header(title, stamp)
    out += _frame(ax, "birth", "death")
    out.append(f'<line x1="{_fmt(ax.x(lo))}" y1="{_fmt(ax.y(lo))}" x2="{_fmt(ax.x(hi))}" '
               f'y2="{_fmt(ax.y(hi))}" stroke="gray" stroke-width="1"/>')
    if any(p.essential for p in dg.dim0):
        out.append(f'<line x1="{_fmt(ax.x(lo))}" y1="{_fmt(ax.y(inf_level))}" x2="{_fmt(ax.x(hi))}" '
                   f'y2="{_fmt(ax.y(inf_level))}" stroke="gray" stroke-dasharray="4 3"/>')
        out.append(f'<text x="{_fmt(ax.x(lo) + 4)}" y="{_fmt(ax.y(inf_level) - 3)}" font-size="10" '
                   f'font-family="sans-serif">&#8734;</text>')
    for p in sorted(dg.dim0, key=lambda p: (p.birth, p.death)):
        d = inf_level if p.essential else p.death
        out.append(f'<circle class="dim0" cx="{_fmt(ax.x(p.birth))}" cy="{_fmt(ax.y(d))}" r="4" '
                   f'fill="#1f77b4" fill-opacity="0.8"/>')
    for p in sorted(dg.dim1, key=lambda p: (p.birth, p.death)):
        out.append(f'<rect class="dim1" x="{_fmt(ax.x(p.birth) - 4)}" y="{_fmt(ax.y(p.death) - 4)}" '
                   f'width="8" height="8" fill="#d62728" fill-opacity="0.8"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _mix(p: float) -> str:
    # white at p = 0.5, blue toward 1, red toward 0
    pos, neg = np.array([31, 119, 180]), np.array([214, 39, 40])
    t = abs(p - 0.5) * 2
    base = pos if p >= 0.5 else neg
    rgb = np.rint(255 + (base - 255) * t * 0.6).astype(int)
    return "#" + "".join(f"{c:02x}" for c in rgb)


def decision_region_svg(xs, ys, prob, points, labels, title: str,
                        names=("+1", "-1"), stamp: str | None = None) -> str:
    """Shade a probability grid and overlay labelled points.

    ``prob[i, j]`` is p(+1) at (xs[j], ys[i]); ``labels`` are +1/-1.
    """
    xs, ys, prob = np.asarray(xs), np.asarray(ys), np.asarray(prob)
    ax = _Axes(float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1]))
    dx = (ax.x(xs[-1]) - ax.x(xs[0])) / (len(xs) - 1)
    dy = (ax.y(ys[0]) - ax.y(ys[-1])) / (len(ys) - 1)
    out = _header(title, stamp)
    for i, yv in enumerate(ys):
        for j, xv in enumerate(xs):
            out.append(f'<rect x="{_fmt(ax.x(xv) - dx / 2)}" y="{_fmt(ax.y(yv) - dy / 2)}" '
                       f'width="{_fmt(dx)}" height="{_fmt(dy)}" fill="{_mix(float(prob[i, j]))}"/>')
    out += _frame(ax, "PC1", "PC2")
    for (px, py), lab in zip(np.asarray(points), labels):
        if lab > 0:
            out.append(f'<circle cx="{_fmt(ax.x(px))}" cy="{_fmt(ax.y(py))}" r="4" fill="#1f77b4" '
                       f'stroke="black" stroke-width="0.5"/>')
        else:
            out.append(f'<rect x="{_fmt(ax.x(px) - 4)}" y="{_fmt(ax.y(py) - 4)}" width="8" height="8" '
                       f'fill="#d62728" stroke="black" stroke-width="0.5"/>')
    out.append(f'<text x="{SIZE - PAD}" y="{PAD - 6}" text-anchor="end" font-size="10" '
               f'font-family="sans-serif">circle: {escape(names[0])}, square: {escape(names[1])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
