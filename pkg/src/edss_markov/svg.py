"""Minimal deterministic SVG charts (no timestamps, no random ids)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02")
W, H = 640, 400
PAD_L, PAD_R, PAD_T, PAD_B = 60, 20, 40, 50


def _nice_max(v: float) -> float:
    if not v > 0 or not math.isfinite(v):
        return 1.0
    mag = 10 ** math.floor(math.log10(v))
    for step in (1, 2, 2.5, 5, 10):
        if step * mag >= v:
            return step * mag
    return 10 * mag


def _frame(title, xlabel, ylabel, ymax, parts):
    x0, x1, y0, y1 = PAD_L, W - PAD_R, H - PAD_B, PAD_T
    parts.insert(0, f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for i in range(6):
        v = ymax * i / 5
        y = y0 - (y0 - y1) * i / 5
        parts.append(f'<line x1="{x0 - 4}" y1="{y:.1f}" x2="{x0}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 6}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{v:g}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{H - 12}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    parts.append(f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" font-size="12" '
                 f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>')
    body = "\n".join(parts)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">\n'
            f'<rect width="{W}" height="{H}" fill="white"/>\n{body}\n</svg>\n')


def line_chart(series: dict[str, list[tuple[float, float]]], title: str, xlabel: str, ylabel: str) -> str:
    """One polyline per named series of ``(x, y)`` points."""
    pts = [p for s in series.values() for p in s if math.isfinite(p[1])]
    xs = [p[0] for p in pts] or [0.0, 1.0]
    xmin, xmax = min(xs), max(xs)
    if xmax == xmin:
        xmax = xmin + 1
    ymax = _nice_max(max((p[1] for p in pts), default=1.0))
    x0, x1, y0, y1 = PAD_L, W - PAD_R, H - PAD_B, PAD_T

    def sx(x):
        return x0 + (x1 - x0) * (x - xmin) / (xmax - xmin)

    def sy(y):
        return y0 - (y0 - y1) * y / ymax

    parts = []
    for x in sorted(set(xs)):
        parts.append(f'<text x="{sx(x):.1f}" y="{y0 + 16}" text-anchor="middle" font-size="11">{x:g}</text>')
    for i, (name, s) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        good = [(x, y) for x, y in s if math.isfinite(y)]
        path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in good)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{path}"/>')
        for x, y in good:
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{x1 - 4}" y="{y1 + 14 * (i + 1)}" text-anchor="end" font-size="11" '
                     f'fill="{color}">{escape(name)}</text>')
    return _frame(title, xlabel, ylabel, ymax, parts)


def bar_chart(categories: list[str], series: dict[str, list[float]], title: str, xlabel: str,
              ylabel: str) -> str:
    """Grouped bars: one group per category, one bar per series."""
    vals = [v for s in series.values() for v in s if math.isfinite(v)]
    ymax = _nice_max(max(vals, default=1.0))
    x0, x1, y0, y1 = PAD_L, W - PAD_R, H - PAD_B, PAD_T
    n_cat = max(1, len(categories))
    n_ser = max(1, len(series))
    slot = (x1 - x0) / n_cat
    bw = slot * 0.8 / n_ser
    parts = []
    for c, label in enumerate(categories):
        cx = x0 + slot * (c + 0.5)
        parts.append(f'<text x="{cx:.1f}" y="{y0 + 16}" text-anchor="middle" font-size="11">{escape(label)}</text>')
        for s, (name, values) in enumerate(series.items()):
            v = values[c]
            if not math.isfinite(v):
                continue
            h = (y0 - y1) * v / ymax
            bx = x0 + slot * c + slot * 0.1 + bw * s
            parts.append(f'<rect x="{bx:.1f}" y="{y0 - h:.1f}" width="{bw:.1f}" height="{h:.1f}" '
                         f'fill="{PALETTE[s % len(PALETTE)]}"/>')
    for s, name in enumerate(series):
        parts.append(f'<text x="{x1 - 4}" y="{y1 + 14 * (s + 1)}" text-anchor="end" font-size="11" '
                     f'fill="{PALETTE[s % len(PALETTE)]}">{escape(name)}</text>')
    return _frame(title, xlabel, ylabel, ymax, parts)
