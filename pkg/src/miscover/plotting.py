"""Deterministic SVG scatter plots of clustered projections.

Hand-rolled SVG so identical inputs produce identical bytes: no timestamps,
no library version strings, fixed float formatting.
"""

from __future__ import annotations

import numpy as np

from .clustering import NOISE

# repeating palette; noise gets gray
PALETTE = (
    "#4477aa",
    "#ee6677",
    "#228833",
    "#ccbb44",
    "#66ccee",
    "#aa3377",
    "#bb5566",
    "#44aa99",
)
NOISE_COLOR = "#999999"

_WIDTH = 640
_HEIGHT = 480
_MARGIN = 40.0


def _color(label: int) -> str:
    if label == NOISE:
        return NOISE_COLOR
    return PALETTE[label % len(PALETTE)]


def svg_scatter(
    points: np.ndarray,
    labels,
    title: str,
    ranks: dict[int, int] | None = None,
) -> str:
    """One circle per point, one color per cluster, legend with density ranks."""
    points = np.asarray(points, dtype=np.float64)
    labels = list(labels)
    ranks = ranks or {}

    if len(points):
        x_min, y_min = points.min(axis=0)
        x_max, y_max = points.max(axis=0)
    else:
        x_min = y_min = 0.0
        x_max = y_max = 1.0
    span_x = (x_max - x_min) or 1.0
    span_y = (y_max - y_min) or 1.0

    def sx(x: float) -> float:
        return _MARGIN + (x - x_min) / span_x * (_WIDTH - 2 * _MARGIN)

    def sy(y: float) -> float:
        # svg y grows downward
        return _HEIGHT - _MARGIN - (y - y_min) / span_y * (_HEIGHT - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>',
        f'<text x="{_MARGIN}" y="24" font-family="monospace" font-size="14">'
        f"{title}</text>",
    ]
    for (x, y), label in zip(points, labels):
        parts.append(
            f'<circle cx="{sx(float(x)):.3f}" cy="{sy(float(y)):.3f}" r="5" '
            f'fill="{_color(int(label))}" fill-opacity="0.8"/>'
        )

    clusters = sorted({int(l) for l in labels if l != NOISE})
    legend_entries = [
        (
            _color(c),
            f"cluster {c}" + (f" (rank {ranks[c]})" if c in ranks else ""),
        )
        for c in clusters
    ]
    if any(l == NOISE for l in labels):
        legend_entries.append((NOISE_COLOR, "noise"))
    for row, (color, text) in enumerate(legend_entries):
        y = 44 + row * 18
        parts.append(
            f'<rect x="{_WIDTH - 170}" y="{y - 10}" width="12" height="12" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_WIDTH - 152}" y="{y}" font-family="monospace" '
            f'font-size="12">{text}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
