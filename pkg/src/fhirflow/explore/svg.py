"""Deterministic SVG rendering of ChartSpec values.

Fixed canvas, fonts, palette, and coordinate formatting: the same spec always
renders to the same bytes, on any platform. No imaging dependency.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from ..errors import EmptySpec
from .charts import ChartKind, ChartSpec

WIDTH = 800
HEIGHT = 480
MARGIN_LEFT = 70.0
MARGIN_RIGHT = 24.0
MARGIN_TOP = 48.0
MARGIN_BOTTOM = 56.0

PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
)

_FONT = 'font-family="monospace"'


def _fmt(value: float) -> str:
    # fixed decimals keep output platform-independent
    return f"{value:.2f}"


def _axis_text(label: str, unit: str) -> str:
    return f"{label} ({unit})" if unit else label


def _x_positions(spec: ChartSpec) -> dict:
    """Map every distinct x value to a horizontal data coordinate."""
    numeric = all(
        isinstance(x, (int, float))
        for series in spec.series
        for x, _ in series.points
    )
    if numeric:
        return {}
    positions: dict = {}
    for series in spec.series:
        for x, _ in series.points:
            if x not in positions:
                positions[x] = float(len(positions))
    return positions


def render_chart_svg(spec: ChartSpec) -> bytes:
    """Standalone SVG 1.1 document for the chart; deterministic bytes."""
    if spec.point_count() == 0:
        raise EmptySpec(f"chart {spec.title!r} has no points to draw")

    categories = _x_positions(spec)

    def x_value(x) -> float:
        return categories[x] if categories else float(x)

    xs = [x_value(x) for series in spec.series for x, _ in series.points]
    ys = [y for series in spec.series for _, y in series.points if y is not None]
    x_min, x_max = min(xs), max(xs)
    if ys:
        y_min, y_max = min(ys), max(ys)
    else:
        y_min, y_max = 0.0, 1.0
    if spec.kind in (ChartKind.BAR, ChartKind.HISTOGRAM):
        y_min = min(y_min, 0.0)
        y_max = max(y_max, 0.0)
    if x_min == x_max:
        x_min, x_max = x_min - 1.0, x_max + 1.0
    if y_min == y_max:
        y_min, y_max = y_min - 1.0, y_max + 1.0

    plot_width = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_height = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x: float) -> float:
        return MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_width

    def py(y: float) -> float:
        return MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_height

    parts: list[str] = []
    parts.append('<?xml version="1.0" encoding="UTF-8"?>')
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>')
    parts.append(
        f'<text x="{_fmt(WIDTH / 2)}" y="24.00" text-anchor="middle" {_FONT} '
        f'font-size="16">{escape(spec.title)}</text>'
    )

    # axes
    x0, y0 = MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM
    parts.append(
        f'<line x1="{_fmt(x0)}" y1="{_fmt(MARGIN_TOP)}" x2="{_fmt(x0)}" '
        f'y2="{_fmt(y0)}" stroke="#000000" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(WIDTH - MARGIN_RIGHT)}" '
        f'y2="{_fmt(y0)}" stroke="#000000" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{_fmt(MARGIN_LEFT + plot_width / 2)}" y="{_fmt(HEIGHT - 12)}" '
        f'text-anchor="middle" {_FONT} font-size="12">'
        f"{escape(_axis_text(spec.x_axis.label, spec.x_axis.unit))}</text>"
    )
    parts.append(
        f'<text x="16.00" y="{_fmt(MARGIN_TOP + plot_height / 2)}" '
        f'text-anchor="middle" {_FONT} font-size="12" '
        f'transform="rotate(-90 16.00 {_fmt(MARGIN_TOP + plot_height / 2)})">'
        f"{escape(_axis_text(spec.y_axis.label, spec.y_axis.unit))}</text>"
    )

    # y ticks
    for i in range(5):
        tick = y_min + (y_max - y_min) * i / 4
        y = py(tick)
        parts.append(
            f'<line x1="{_fmt(x0 - 4)}" y1="{_fmt(y)}" x2="{_fmt(x0)}" y2="{_fmt(y)}" '
            f'stroke="#000000" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(x0 - 8)}" y="{_fmt(y + 4)}" text-anchor="end" {_FONT} '
            f'font-size="10">{escape(f"{tick:g}")}</text>'
        )

    # category labels on the x axis (at most 20, evenly thinned)
    if categories:
        labels = list(categories)
        step = max(1, (len(labels) + 19) // 20)
        for label in labels[::step]:
            x = px(categories[label])
            parts.append(
                f'<text x="{_fmt(x)}" y="{_fmt(y0 + 16)}" text-anchor="middle" {_FONT} '
                f'font-size="10">{escape(str(label))}</text>'
            )

    for index, series in enumerate(spec.series):
        color = PALETTE[index % len(PALETTE)]
        if spec.kind in (ChartKind.LINE, ChartKind.ECG_TRACE):
            commands: list[str] = []
            pen_down = False
            for x, y in series.points:
                if y is None:
                    pen_down = False  # gap: next real point restarts the path
                    continue
                op = "L" if pen_down else "M"
                commands.append(f"{op}{_fmt(px(x_value(x)))} {_fmt(py(y))}")
                pen_down = True
            if commands:
                parts.append(
                    f'<path d="{" ".join(commands)}" fill="none" stroke="{color}" '
                    f'stroke-width="1"/>'
                )
        elif spec.kind in (ChartKind.BAR, ChartKind.HISTOGRAM):
            slot = plot_width / max(len(series.points), 1)
            bar_width = slot * 0.8 / max(len(spec.series), 1)
            for x, y in series.points:
                if y is None:
                    continue
                center = px(x_value(x)) + index * bar_width
                top = py(max(y, 0.0))
                height = abs(py(y) - py(0.0))
                parts.append(
                    f'<rect x="{_fmt(center - bar_width / 2)}" y="{_fmt(top)}" '
                    f'width="{_fmt(bar_width)}" height="{_fmt(height)}" fill="{color}"/>'
                )
        else:  # scatter
            for x, y in series.points:
                if y is None:
                    continue
                parts.append(
                    f'<circle cx="{_fmt(px(x_value(x)))}" cy="{_fmt(py(y))}" r="3.00" '
                    f'fill="{color}"/>'
                )

    for i, note in enumerate(spec.annotations):
        parts.append(
            f'<text x="{_fmt(WIDTH - MARGIN_RIGHT)}" y="{_fmt(MARGIN_TOP + 14 * (i + 1))}" '
            f'text-anchor="end" {_FONT} font-size="11">{escape(note)}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts).encode("utf-8")
