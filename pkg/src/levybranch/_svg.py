"""Minimal deterministic SVG writer for log-survival plots.

Hand-rolled on purpose: the output bytes depend only on the data, so plots
rerun bit-identically alongside the JSON verdicts.
"""
from __future__ import annotations

import math

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class SvgCanvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" '
            f'font-family="monospace" font-size="14">{title}</text>',
        ]

    def line(self, x1, y1, x2, y2, color="black", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{color}" stroke-width="{width}"{d}/>')

    def circle(self, x, y, r=2.5, color="#1f4e8c"):
        self.parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r}" fill="{color}"/>')

    def polygon(self, pts, color="#9ec3e6", opacity=0.45):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(f'<polygon points="{coords}" fill="{color}" opacity="{opacity}"/>')

    def text(self, x, y, s, size=11, anchor="start", color="black"):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
            f'font-family="monospace" font-size="{size}" fill="{color}">{s}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"])


def log_survival_plot(thresholds, probs, ci_lo, ci_hi, fit_logline=None,
                      annotation="", title="log survival", xlabel="threshold") -> str:
    """SVG string: points with a confidence band on a log10 y-axis, plus an
    optional fitted line given as (ts, log_values)."""
    canvas = SvgCanvas(title)
    xs = list(thresholds)
    pos = [p for p in probs if p > 0]
    lo_floor = min(pos) / 10 if pos else 1e-6
    ys = [math.log10(max(p, lo_floor)) for p in probs]
    y_all = list(ys)
    if fit_logline is not None:
        y_all += [v / math.log(10.0) for v in fit_logline[1]]
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(y_all) - 0.3, max(y_all) + 0.3
    if x_max == x_min:
        x_max = x_min + 1.0

    def sx(x):
        return MARGIN_L + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_L - MARGIN_R)

    def sy(y):
        return HEIGHT - MARGIN_B - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_T - MARGIN_B)

    canvas.line(MARGIN_L, MARGIN_T, MARGIN_L, HEIGHT - MARGIN_B)
    canvas.line(MARGIN_L, HEIGHT - MARGIN_B, WIDTH - MARGIN_R, HEIGHT - MARGIN_B)
    for k in range(int(math.floor(y_min)), int(math.ceil(y_max)) + 1):
        canvas.line(MARGIN_L - 4, sy(k), MARGIN_L, sy(k))
        canvas.text(MARGIN_L - 8, sy(k) + 4, f"1e{k}", anchor="end", size=10)
    n_xticks = 6
    for j in range(n_xticks + 1):
        xv = x_min + j * (x_max - x_min) / n_xticks
        canvas.line(sx(xv), HEIGHT - MARGIN_B, sx(xv), HEIGHT - MARGIN_B + 4)
        canvas.text(sx(xv), HEIGHT - MARGIN_B + 16, f"{xv:.3g}", anchor="middle", size=10)
    canvas.text((WIDTH + MARGIN_L) / 2, HEIGHT - 14, xlabel, anchor="middle", size=11)

    band = []
    for x, lo in zip(xs, ci_lo):
        band.append((sx(x), sy(math.log10(max(lo, lo_floor)))))
    for x, hi in reversed(list(zip(xs, ci_hi))):
        band.append((sx(x), sy(math.log10(max(hi, lo_floor)))))
    if band:
        canvas.polygon(band)

    for x, p in zip(xs, probs):
        if p > 0:
            canvas.circle(sx(x), sy(math.log10(p)))

    if fit_logline is not None:
        ts, logvals = fit_logline
        pts = [(sx(t), sy(v / math.log(10.0))) for t, v in zip(ts, logvals)]
        for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
            canvas.line(x1, y1, x2, y2, color="#c23b22", width=1.5)
    else:
        canvas.text(MARGIN_L + 10, MARGIN_T + 16,
                    "warning: no usable fit window", color="#c23b22")

    for i, row in enumerate(annotation.split("\n")):
        if row:
            canvas.text(WIDTH - MARGIN_R - 6, MARGIN_T + 14 + 13 * i, row,
                        anchor="end", size=10)
    return canvas.render()
