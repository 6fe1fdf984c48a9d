"""Dependency-free SVG plots of theta -> dimension curves.

Presentation only; nothing parses these back.
"""

from __future__ import annotations

from dataclasses import dataclass

WIDTH, HEIGHT = 640, 440
MARGIN = 56
PALETTE = ("#1f6fb2", "#c23b22", "#2e7d32", "#7b1fa2", "#e6a817", "#00838f")


@dataclass
class Series:
    label: str
    thetas: list
    values: list


def _x(theta: float) -> float:
    return MARGIN + theta * (WIDTH - 2 * MARGIN)


def _y(value: float, top: float) -> float:
    return HEIGHT - MARGIN - (value / top) * (HEIGHT - 2 * MARGIN)


def dimension_curve_svg(series, scatter=None, y_top: float | None = None) -> str:
    """Render polyline series plus optional (theta, value) scatter overlay."""
    scatter = scatter or []
    values = [v for s in series for v in s.values] + [v for _, v in scatter]
    top = y_top or max(max(values, default=1.0) * 1.15, 1.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" '
        f'stroke="black"/>',
    ]
    for k in range(11):
        theta = k / 10
        x = _x(theta)
        parts.append(
            f'<line x1="{x:.1f}" y1="{HEIGHT - MARGIN}" x2="{x:.1f}" '
            f'y2="{HEIGHT - MARGIN + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{HEIGHT - MARGIN + 18}" font-size="10" '
            f'text-anchor="middle">{theta:.1f}</text>'
        )
    for k in range(5):
        val = top * k / 4
        y = _y(val, top)
        parts.append(
            f'<line x1="{MARGIN - 5}" y1="{y:.1f}" x2="{MARGIN}" y2="{y:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN - 8}" y="{y + 3:.1f}" font-size="10" '
            f'text-anchor="end">{val:.2f}</text>'
        )
    parts.append(
        f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 10}" font-size="12" '
        f'text-anchor="middle">theta</text>'
    )
    for i, s in enumerate(series):
        colour = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_x(t):.2f},{_y(v, top):.2f}" for t, v in zip(s.thetas, s.values))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="2"/>')
        parts.append(
            f'<text x="{WIDTH - MARGIN + 4}" y="{MARGIN + 14 * i + 4}" font-size="10" '
            f'fill="{colour}">{s.label}</text>'
        )
    for theta, value in scatter:
        parts.append(
            f'<circle cx="{_x(theta):.2f}" cy="{_y(value, top):.2f}" r="2.5" '
            f'fill="none" stroke="#555555"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
