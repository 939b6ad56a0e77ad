"""Static SVG chart of rank intervals, one horizontal bar per item.

Output is plain text built with fixed number formatting, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .core import RankCiResult

ROW_H = 14
LEFT = 120
RIGHT = 20
TOP = 40
BOTTOM = 40
WIDTH = 640


def _f(x: float) -> str:
    return f"{x:.2f}"


def interval_svg(result: RankCiResult, title: str | None = None) -> str:
    n = result.n
    order = np.argsort(result.position, kind="stable")
    plot_w = WIDTH - LEFT - RIGHT
    height = TOP + BOTTOM + ROW_H * n
    step = plot_w / max(n, 1)

    def x_of(rank: float) -> float:
        return LEFT + (rank - 0.5) * step

    title = title or (
        f"{result.method.value} simultaneous rank intervals, "
        f"nominal level {1 - result.alpha_nominal:.3g} (alpha used {result.alpha_effective:.4g})"
    )
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="10">',
        f'<text x="{_f(WIDTH / 2)}" y="20" text-anchor="middle" font-size="12">{escape(title)}</text>',
    ]
    axis_y = TOP + ROW_H * n + 6
    out.append(f'<line x1="{_f(LEFT)}" y1="{_f(axis_y)}" x2="{_f(WIDTH - RIGHT)}" y2="{_f(axis_y)}" stroke="black"/>')
    tick_every = max(1, int(np.ceil(n / 20)))
    for r in range(1, n + 1):
        if r % tick_every and r not in (1, n):
            continue
        x = x_of(r)
        out.append(f'<line x1="{_f(x)}" y1="{_f(axis_y)}" x2="{_f(x)}" y2="{_f(axis_y + 4)}" stroke="black"/>')
        out.append(f'<text x="{_f(x)}" y="{_f(axis_y + 16)}" text-anchor="middle">{r}</text>')
    out.append(f'<text x="{_f(LEFT + plot_w / 2)}" y="{_f(height - 6)}" text-anchor="middle">rank</text>')
    for row, idx in enumerate(order):
        yc = TOP + ROW_H * row + ROW_H / 2
        lo, hi = int(result.lower[idx]), int(result.upper[idx])
        x0, x1 = x_of(lo) - step * 0.4, x_of(hi) + step * 0.4
        out.append(
            f'<text x="{_f(LEFT - 6)}" y="{_f(yc + 3)}" text-anchor="end">{escape(result.ids[idx])}</text>'
        )
        out.append(
            f'<rect x="{_f(x0)}" y="{_f(yc - ROW_H * 0.3)}" width="{_f(x1 - x0)}" '
            f'height="{_f(ROW_H * 0.6)}" fill="#9ab" stroke="#345"/>'
        )
        out.append(f'<circle cx="{_f(x_of(int(result.position[idx])))}" cy="{_f(yc)}" r="2.5" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
