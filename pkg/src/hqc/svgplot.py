"""Minimal deterministic log-log SVG plots (no display server needed)."""

from __future__ import annotations

import math
from pathlib import Path

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 460
_ML, _MR, _MT, _MB = 70, 20, 24, 55


def _ticks(lo: float, hi: float):
    first = math.floor(math.log10(lo))
    last = math.ceil(math.log10(hi))
    return [10.0**e for e in range(first, last + 1)]


def write_loglog_svg(path, x, series: dict, xlabel: str, title: str) -> None:
    """Write a log-log plot of each named series against x.

    Nonpositive points are dropped per series; series with no positive
    values are skipped entirely.
    """
    series = {
        name: [(xi, yi) for xi, yi in zip(x, ys) if xi > 0 and yi > 0]
        for name, ys in series.items()
    }
    series = {name: pts for name, pts in series.items() if pts}
    if not series:
        Path(path).write_text(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}"/>\n'
        )
        return
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x0 == x1:
        x0, x1 = x0 / 2, x1 * 2
    if y0 == y1:
        y0, y1 = y0 / 2, y1 * 2

    def px(v):
        return _ML + (math.log10(v) - math.log10(x0)) / (math.log10(x1) - math.log10(x0)) * (
            _W - _ML - _MR
        )

    def py(v):
        return _H - _MB - (math.log10(v) - math.log10(y0)) / (
            math.log10(y1) - math.log10(y0)
        ) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'font-family="monospace" font-size="12">',
        f'<text x="{_ML}" y="16">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="black"/>',
    ]
    for tx in _ticks(x0, x1):
        if x0 <= tx <= x1:
            parts.append(
                f'<line x1="{px(tx):.2f}" y1="{_H - _MB}" x2="{px(tx):.2f}" '
                f'y2="{_H - _MB + 5}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{px(tx):.2f}" y="{_H - _MB + 18}" text-anchor="middle">'
                f"{tx:.0e}</text>"
            )
    for ty in _ticks(y0, y1):
        if y0 <= ty <= y1:
            parts.append(
                f'<line x1="{_ML - 5}" y1="{py(ty):.2f}" x2="{_ML}" y2="{py(ty):.2f}" '
                'stroke="black"/>'
            )
            parts.append(
                f'<text x="{_ML - 8}" y="{py(ty) + 4:.2f}" text-anchor="end">{ty:.0e}</text>'
            )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>'
    )
    for idx, (name, pts) in enumerate(series.items()):
        color = _COLORS[idx % len(_COLORS)]
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}"/>')
        for a, b in pts:
            parts.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="{color}"/>')
        parts.append(
            f'<text x="{_W - _MR - 8}" y="{_MT + 16 + 14 * idx}" text-anchor="end" '
            f'fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
