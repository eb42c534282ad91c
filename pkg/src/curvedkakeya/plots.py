"""Standalone log-log SVG plots with least-squares fit lines."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
W, H, PAD = 640, 420, 60


def loglog_slope(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    slope, icept = np.polyfit(x, y, 1)
    return float(slope), float(icept)


def emit_plot(series: Sequence[dict], target, title: str = "", xlabel: str = "delta", ylabel: str = "value",
              meta: dict | None = None) -> list[float]:
    """Write an SVG; each series is {"label": str, "points": [(x, y), ...]} with x, y > 0.

    ``meta`` is stored as JSON in the <metadata> element. Returns the fitted
    log-log slope of each series.
    """
    if not series:
        raise ValueError("nothing to plot")
    for s in series:
        pts = s["points"]
        if len(pts) < 2:
            raise ValueError(f"series {s.get('label')!r} needs at least 2 points")
        if any(x <= 0 or y <= 0 for x, y in pts):
            raise ValueError("log-log plot needs positive data")
    lx = [math.log10(x) for s in series for x, _ in s["points"]]
    ly = [math.log10(y) for s in series for _, y in s["points"]]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(v):
        return PAD + (math.log10(v) - x0) / (x1 - x0) * (W - 2 * PAD)

    def sy(v):
        return H - PAD - (math.log10(v) - y0) / (y1 - y0) * (H - 2 * PAD)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f"<metadata>{escape(json.dumps(meta or {}, sort_keys=True))}</metadata>",
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle" font-size="13">{escape(xlabel)} (log)</text>',
        f'<text x="15" y="{H / 2}" transform="rotate(-90 15 {H / 2})" text-anchor="middle" font-size="13">'
        f"{escape(ylabel)} (log)</text>",
    ]
    if title:
        out.append(f'<text x="{W / 2}" y="25" text-anchor="middle" font-size="15">{escape(title)}</text>')
    for dec in range(math.floor(x0), math.ceil(x1) + 1):
        if x0 <= dec <= x1:
            px = sx(10.0**dec)
            out.append(f'<text x="{px:.1f}" y="{H - PAD + 18}" text-anchor="middle" font-size="11">1e{dec}</text>')
    for dec in range(math.floor(y0), math.ceil(y1) + 1):
        if y0 <= dec <= y1:
            py = sy(10.0**dec)
            out.append(f'<text x="{PAD - 6}" y="{py:.1f}" text-anchor="end" font-size="11">1e{dec}</text>')

    slopes = []
    for k, s in enumerate(series):
        col = COLORS[k % len(COLORS)]
        pts = sorted(s["points"])
        slope, icept = loglog_slope(pts)
        slopes.append(slope)
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="{col}"/>')
        xa, xb = pts[0][0], pts[-1][0]
        ya, yb = math.exp(icept) * xa**slope, math.exp(icept) * xb**slope
        out.append(
            f'<line x1="{sx(xa):.2f}" y1="{sy(ya):.2f}" x2="{sx(xb):.2f}" y2="{sy(yb):.2f}" '
            f'stroke="{col}" stroke-dasharray="6 4"/>'
        )
        label = escape(str(s.get("label", f"series {k}")))
        out.append(
            f'<text x="{W - PAD - 4}" y="{PAD + 18 * (k + 1)}" text-anchor="end" font-size="12" fill="{col}">'
            f"{label}: slope = {slope:.3f}</text>"
        )
    out.append("</svg>")
    Path(target).write_text("\n".join(out) + "\n")
    return slopes
