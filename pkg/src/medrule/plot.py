"""Static SVG forest plot of effect estimates, one whisker row per estimate."""
from __future__ import annotations

import math

from .errors import EmptyTable

WIDTH = 860
ROW_HEIGHT = 30
LABEL_WIDTH = 280
VALUE_WIDTH = 170
TOP = 46
BOTTOM = 40


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * max(1.0, abs(hi)):
        ticks.append(round(t, 12))
        t += step
    return ticks


def render_forest_plot(estimates) -> str:
    """Render estimates (EffectEstimate objects or their dicts) as an SVG
    document: point markers with interval whiskers and a zero reference line.
    Layout is deterministic for fixed input."""
    if not estimates:
        raise EmptyTable("no estimates to plot")
    rows = [est if isinstance(est, dict) else est.to_dict() for est in estimates]

    lo = min(min(r["ci_low"] for r in rows), 0.0)
    hi = max(max(r["ci_high"] for r in rows), 0.0)
    pad = 0.08 * (hi - lo) if hi > lo else 0.5
    lo, hi = lo - pad, hi + pad
    plot_x0 = LABEL_WIDTH
    plot_x1 = WIDTH - VALUE_WIDTH
    height = TOP + ROW_HEIGHT * len(rows) + BOTTOM

    def sx(value: float) -> float:
        return plot_x0 + (value - lo) / (hi - lo) * (plot_x1 - plot_x0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{height}" font-family="sans-serif" font-size="13">',
        f'<rect width="{WIDTH}" height="{height}" fill="white"/>',
        f'<text x="{LABEL_WIDTH}" y="22" font-size="15" font-weight="bold">'
        f'Interventional effects by rule type</text>',
    ]

    zero_x = sx(0.0)
    parts.append(f'<line x1="{zero_x:.2f}" y1="{TOP - 8}" x2="{zero_x:.2f}" '
                 f'y2="{height - BOTTOM + 8}" stroke="#888" '
                 f'stroke-dasharray="4,3"/>')

    for tick in _nice_ticks(lo, hi):
        x = sx(tick)
        y = height - BOTTOM + 8
        parts.append(f'<line x1="{x:.2f}" y1="{height - BOTTOM + 2}" '
                     f'x2="{x:.2f}" y2="{height - BOTTOM + 7}" stroke="#444"/>')
        parts.append(f'<text x="{x:.2f}" y="{y + 14}" text-anchor="middle" '
                     f'fill="#444">{tick:g}</text>')

    for i, r in enumerate(rows):
        cy = TOP + ROW_HEIGHT * i + ROW_HEIGHT / 2
        label = f'{r["rule"]}: {r["contrast"]}'
        parts.append(f'<text x="12" y="{cy + 4:.2f}">{label}</text>')
        x_lo, x_hi, x_pt = sx(r["ci_low"]), sx(r["ci_high"]), sx(r["estimate"])
        parts.append(f'<line x1="{x_lo:.2f}" y1="{cy:.2f}" x2="{x_hi:.2f}" '
                     f'y2="{cy:.2f}" stroke="#1f3b66" stroke-width="2"/>')
        for xe in (x_lo, x_hi):
            parts.append(f'<line x1="{xe:.2f}" y1="{cy - 5:.2f}" x2="{xe:.2f}" '
                         f'y2="{cy + 5:.2f}" stroke="#1f3b66" stroke-width="2"/>')
        parts.append(f'<circle cx="{x_pt:.2f}" cy="{cy:.2f}" r="4.5" '
                     f'fill="#c23b22"/>')
        value = (f'{r["estimate"]:+.4f} [{r["ci_low"]:+.4f}, '
                 f'{r["ci_high"]:+.4f}]')
        parts.append(f'<text x="{plot_x1 + 14}" y="{cy + 4:.2f}" '
                     f'fill="#222">{value}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
