"""Minimal dependency-free SVG line plots for the figure datasets."""

from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * abs(hi):
        out.append(round(t, 12))
        t += step
    return out


def line_plot(path, series, xlabel: str = "", ylabel: str = "", title: str = "",
              logx: bool = False, logy: bool = False,
              width: int = 640, height: int = 420):
    """Write an SVG with one polyline per (label, x, y) entry in ``series``."""
    margin_l, margin_r, margin_t, margin_b = 64, 16, 28, 44
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b

    def tx(v):
        return math.log10(v) if logx else v

    def ty(v):
        return math.log10(v) if logy else v

    xs = [tx(x) for _, xv, _ in series for x in xv]
    ys = [ty(y) for _, _, yv in series for y in yv]
    if not xs or not ys:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    padx = 0.03 * (x1 - x0)
    pady = 0.06 * (y1 - y0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady

    def px(v):
        return margin_l + (tx(v) - x0) / (x1 - x0) * pw

    def py(v):
        return margin_t + (y1 - ty(v)) / (y1 - y0) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
             f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" '
             'fill="none" stroke="#333"/>']
    for t in _ticks(x0, x1):
        if logx and not float(t).is_integer():
            continue
        xpix = margin_l + (t - x0) / (x1 - x0) * pw
        label = f"{10 ** t:g}" if logx else f"{t:g}"
        parts.append(f'<line x1="{xpix:.1f}" y1="{margin_t + ph}" x2="{xpix:.1f}" '
                     f'y2="{margin_t + ph + 4}" stroke="#333"/>')
        parts.append(f'<text x="{xpix:.1f}" y="{margin_t + ph + 16}" '
                     f'text-anchor="middle">{label}</text>')
    for t in _ticks(y0, y1):
        if logy and not float(t).is_integer():
            continue
        ypix = margin_t + (y1 - t) / (y1 - y0) * ph
        label = f"{10 ** t:g}" if logy else f"{t:g}"
        parts.append(f'<line x1="{margin_l - 4}" y1="{ypix:.1f}" x2="{margin_l}" '
                     f'y2="{ypix:.1f}" stroke="#333"/>')
        parts.append(f'<text x="{margin_l - 7}" y="{ypix + 4:.1f}" '
                     f'text-anchor="end">{label}</text>')
    for i, (label, xv, yv) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xv, yv)
                       if (not logx or x > 0) and (not logy or y > 0))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     'stroke-width="1.5"/>')
        parts.append(f'<text x="{margin_l + pw - 6}" y="{margin_t + 14 + 13 * i}" '
                     f'text-anchor="end" fill="{color}">{label}</text>')
    if title:
        parts.append(f'<text x="{width / 2:.0f}" y="16" text-anchor="middle" '
                     f'font-size="13">{title}</text>')
    if xlabel:
        parts.append(f'<text x="{margin_l + pw / 2:.0f}" y="{height - 10}" '
                     f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="14" y="{margin_t + ph / 2:.0f}" text-anchor="middle" '
                     f'transform="rotate(-90 14 {margin_t + ph / 2:.0f})">{ylabel}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
