"""Tiny SVG writer for line charts and heat maps.

Figures are a convenience; the CSV files written next to them hold the data.
"""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=130, top=40, bottom=55)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def _scale(lo: float, hi: float, a: float, b: float):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) * (b - a) / span


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{(MARGIN["left"] + WIDTH - MARGIN["right"]) / 2}" y="{HEIGHT - 12}" '
        f'text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {HEIGHT / 2})">{escape(ylabel)}</text>',
    ]


def line_chart(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = 0.0, max(ys_all) * 1.05
    left, right = MARGIN["left"], WIDTH - MARGIN["right"]
    top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]
    sx, sy = _scale(x0, x1, left, right), _scale(y0, y1, bottom, top)

    out = _frame(title, xlabel, ylabel)
    out.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
               f'fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{bottom + 16}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{left - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.4g}</text>')
    for k, (label, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{points}"/>')
        ly = top + 16 * (k + 1)
        out.append(f'<line x1="{right + 10}" y1="{ly - 4}" x2="{right + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{right + 36}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out)


def heatmap(
    xs: Sequence[float],
    ys: Sequence[float],
    values: Sequence[Sequence[float]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    """``values[i][j]`` is the cell at ``xs[i]``, ``ys[j]``; colour runs white to blue."""
    flat = [v for row in values for v in row]
    vmin, vmax = min(flat), max(flat)
    span = (vmax - vmin) or 1.0
    left, right = MARGIN["left"], WIDTH - MARGIN["right"]
    top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]
    cw = (right - left) / len(xs)
    ch = (bottom - top) / len(ys)

    out = _frame(title, xlabel, ylabel)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            level = (values[i][j] - vmin) / span
            shade = int(255 - 200 * level)
            out.append(
                f'<rect x="{left + i * cw:.2f}" y="{bottom - (j + 1) * ch:.2f}" width="{cw:.2f}" '
                f'height="{ch:.2f}" fill="rgb({shade},{shade},255)"><title>{values[i][j]:.4g}</title></rect>'
            )
    for i, x in enumerate(xs):
        out.append(f'<text x="{left + (i + 0.5) * cw:.1f}" y="{bottom + 16}" text-anchor="middle">{x:.3g}</text>')
    for j, y in enumerate(ys):
        out.append(f'<text x="{left - 6}" y="{bottom - (j + 0.5) * ch + 4:.1f}" text-anchor="end">{y:.3g}</text>')
    out.append(f'<text x="{right + 10}" y="{top + 12}">max {vmax:.4g}</text>')
    out.append(f'<text x="{right + 10}" y="{bottom}">min {vmin:.4g}</text>')
    out.append("</svg>")
    return "\n".join(out)
