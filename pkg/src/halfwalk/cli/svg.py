"""Minimal static SVG line charts; no plotting backend required."""

from __future__ import annotations

import math
from html import escape

_COLORS = ("#000000", "#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e")


def line_chart(series, *, title: str, xlabel: str, ylabel: str, loglog: bool = False,
               width: int = 640, height: int = 420) -> str:
    """``series`` is a list of ``(label, xs, ys)``; non-positive points are dropped on log axes."""
    margin_l, margin_r, margin_t, margin_b = 70, 20, 40, 50
    tf = math.log10 if loglog else float
    prepared = []
    for label, xs, ys in series:
        pts = [(tf(x), tf(y)) for x, y in zip(xs, ys)
               if not loglog or (x > 0 and y > 0)]
        if pts:
            prepared.append((label, pts))
    allx = [x for _, pts in prepared for x, _ in pts] or [0.0, 1.0]
    ally = [y for _, pts in prepared for _, y in pts] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b

    def sx(x):
        return margin_l + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return margin_t + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        lx = f"{10 ** fx:.3g}" if loglog else f"{fx:.3g}"
        ly = f"{10 ** fy:.3g}" if loglog else f"{fy:.3g}"
        out.append(f'<text x="{sx(fx):.1f}" y="{margin_t + ph + 16}" text-anchor="middle">{lx}</text>')
        out.append(f'<text x="{margin_l - 6}" y="{sy(fy) + 4:.1f}" text-anchor="end">{ly}</text>')
    out.append(f'<text x="{margin_l + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{margin_t + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {margin_t + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, pts) in enumerate(prepared):
        color = _COLORS[i % len(_COLORS)]
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        out.append(f'<text x="{margin_l + 10}" y="{margin_t + 16 + 14 * i}" fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
