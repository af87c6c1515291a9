"""Dependency-free SVG line plots.

Presentation only: byte stability is guaranteed for the CSV outputs, not
for these files.
"""

from __future__ import annotations

import numpy as np

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 36, 50


def _ticks(lo: float, hi: float, n: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step / 2, step)


def line_plot(
    path: str,
    curves,
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
):
    """Write an SVG with the given curves.

    curves: list of (x, y, label); non-finite y samples break the line.
    """
    xs_all = np.concatenate([np.asarray(c[0], dtype=float) for c in curves])
    ys_all = np.concatenate([np.asarray(c[1], dtype=float) for c in curves])
    if logx:
        xs_all = np.log10(xs_all[xs_all > 0])
    finite = np.isfinite(ys_all)
    y_lo, y_hi = float(ys_all[finite].min()), float(ys_all[finite].max())
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    # axes
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
        f'height="{_H - _MT - _MB}" fill="none" stroke="#333"/>'
    )
    for tx in _ticks(x_lo, x_hi):
        X = sx(tx)
        label = f"{10 ** tx:.3g}" if logx else f"{tx:.4g}"
        parts.append(
            f'<line x1="{X:.1f}" y1="{_H - _MB}" x2="{X:.1f}" '
            f'y2="{_H - _MB + 5}" stroke="#333"/>'
            f'<text x="{X:.1f}" y="{_H - _MB + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        Y = sy(ty)
        parts.append(
            f'<line x1="{_ML - 5}" y1="{Y:.1f}" x2="{_ML}" y2="{Y:.1f}" stroke="#333"/>'
            f'<text x="{_ML - 8}" y="{Y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{ty:.4g}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_H - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{(_MT + _H - _MB) / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.0f})">{ylabel}</text>'
    )
    for i, (x, y, label) in enumerate(curves):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if logx:
            keep = x > 0
            x, y = np.log10(x[keep]), y[keep]
        color = _COLORS[i % len(_COLORS)]
        pts = []
        for xi, yi in zip(x, y):
            if np.isfinite(yi):
                pts.append(f"{sx(xi):.2f},{sy(min(max(yi, y_lo), y_hi)):.2f}")
            elif pts:
                parts.append(
                    f'<polyline points="{" ".join(pts)}" fill="none" '
                    f'stroke="{color}" stroke-width="1.3"/>'
                )
                pts = []
        if pts:
            parts.append(
                f'<polyline points="{" ".join(pts)}" fill="none" '
                f'stroke="{color}" stroke-width="1.3"/>'
            )
        if label:
            Yl = _MT + 16 + 15 * i
            parts.append(
                f'<line x1="{_W - _MR - 130}" y1="{Yl}" x2="{_W - _MR - 105}" '
                f'y2="{Yl}" stroke="{color}" stroke-width="2"/>'
                f'<text x="{_W - _MR - 100}" y="{Yl + 4}" '
                f'font-family="sans-serif" font-size="11">{label}</text>'
            )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
