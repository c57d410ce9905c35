"""SVG generation utilities: log-scale coupling heatmaps and log-log rate plots."""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import svgwrite

from dotbench.core.config import (
    FIT_LINE_COLOR,
    HATCH_COLOR,
    HEATMAP_CELL_PX,
    PLOT_HEIGHT_PX,
    PLOT_WIDTH_PX,
    SCATTER_COLOR,
    ZERO_CELL_COLOR,
)

# viridis stops, low to high
COLOR_STOPS: List[Tuple[float, Tuple[int, int, int]]] = [
    (0.0, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.5, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.0, (253, 231, 37)),
]

MARGIN = 60


def interpolate_color(t: float) -> str:
    """Hex color for t in [0, 1] on the viridis ramp."""
    t = min(max(t, 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(COLOR_STOPS, COLOR_STOPS[1:]):
        if t <= t1:
            w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = [round(a + w * (b - a)) for a, b in zip(c0, c1)]
            return '#{:02X}{:02X}{:02X}'.format(*rgb)
    return '#{:02X}{:02X}{:02X}'.format(*COLOR_STOPS[-1][1])


def points_to_svg_path(points: Sequence[Tuple[float, float]]) -> str:
    """
    Convert (x, y) pixel points to an open polyline path.

    Args:
        points: Sequence of (x, y) tuples

    Returns:
        SVG path string, empty for fewer than two points
    """
    if len(points) < 2:
        return ""
    parts = [f"M {points[0][0]:.2f},{points[0][1]:.2f}"]
    parts.extend(f"L {x:.2f},{y:.2f}" for x, y in points[1:])
    return " ".join(parts)


def _hatch_pattern(dwg: svgwrite.Drawing, size: int = 8):
    pattern = dwg.pattern(id='zero-hatch', size=(size, size), patternUnits='userSpaceOnUse')
    pattern.add(dwg.rect((0, 0), (size, size), fill=ZERO_CELL_COLOR))
    pattern.add(dwg.line((0, size), (size, 0), stroke=HATCH_COLOR, stroke_width=1))
    dwg.defs.add(pattern)
    return pattern


def generate_coupling_heatmap(
    density: np.ndarray,
    title: str = '',
    cell_px: int = HEATMAP_CELL_PX,
) -> str:
    """
    Heatmap of log10(density) over a two-way product support.

    Exact-zero cells are drawn hatched so sparsity stays visible.

    Args:
        density: 2-D array of nonnegative densities (rows: first marginal)
        title: Text drawn above the grid
        cell_px: Side of one cell in pixels

    Returns:
        SVG document as a string
    """
    density = np.asarray(density, dtype=float)
    if density.ndim != 2:
        raise ValueError(f"heatmap needs a 2-D array, got shape {density.shape}")
    rows, cols = density.shape
    legend_px = 90
    width = 2 * MARGIN + cols * cell_px + legend_px
    height = 2 * MARGIN + rows * cell_px

    dwg = svgwrite.Drawing(size=(width, height), profile='full')
    hatch = _hatch_pattern(dwg)
    if title:
        dwg.add(dwg.text(title, insert=(MARGIN, MARGIN / 2), font_family='Arial, sans-serif', font_size=16))

    positive = density[density > 0]
    lo, hi = (np.log10(positive.min()), np.log10(positive.max())) if positive.size else (0.0, 0.0)
    span = hi - lo if hi > lo else 1.0

    grid = dwg.g(id='cells')
    for i in range(rows):
        for j in range(cols):
            value = density[i, j]
            fill = hatch.get_paint_server() if value <= 0 else interpolate_color((np.log10(value) - lo) / span)
            rect = dwg.rect((MARGIN + j * cell_px, MARGIN + i * cell_px), (cell_px, cell_px), fill=fill)
            rect.set_desc(title=f'({i}, {j}) density {value:.6g}')
            grid.add(rect)
    dwg.add(grid)
    dwg.add(dwg.rect((MARGIN, MARGIN), (cols * cell_px, rows * cell_px),
                     fill='none', stroke='#333333', stroke_width=1))

    # color bar
    bar_x = MARGIN + cols * cell_px + 20
    steps = 20
    bar_h = rows * cell_px
    for k in range(steps):
        t = 1.0 - k / (steps - 1)
        dwg.add(dwg.rect((bar_x, MARGIN + k * bar_h / steps), (16, bar_h / steps + 0.5),
                         fill=interpolate_color(t)))
    for label, y in ((f'{hi:.2f}', MARGIN + 10), (f'{lo:.2f}', MARGIN + bar_h)):
        dwg.add(dwg.text(label, insert=(bar_x + 20, y), font_family='Arial, sans-serif', font_size=11))
    dwg.add(dwg.text('log10', insert=(bar_x, MARGIN - 8), font_family='Arial, sans-serif', font_size=11))

    return dwg.tostring()


def _log_ticks(lo: float, hi: float) -> List[float]:
    return [float(k) for k in range(math.floor(lo), math.ceil(hi) + 1)]


def generate_loglog_plot(
    x: Sequence[float],
    y: Sequence[float],
    slope: Optional[float] = None,
    intercept: Optional[float] = None,
    title: str = '',
    xlabel: str = 'x',
    ylabel: str = 'y',
    width: int = PLOT_WIDTH_PX,
    height: int = PLOT_HEIGHT_PX,
) -> str:
    """
    Log-log scatter of (x, y) with an optional fitted line log y = intercept + slope log x.

    Non-positive points are skipped.

    Returns:
        SVG document as a string
    """
    pts = [(float(a), float(b)) for a, b in zip(x, y) if a > 0 and b > 0]
    dwg = svgwrite.Drawing(size=(width, height), profile='full')
    if title:
        dwg.add(dwg.text(title, insert=(MARGIN, MARGIN / 2), font_family='Arial, sans-serif', font_size=16))
    plot_w, plot_h = width - 2 * MARGIN, height - 2 * MARGIN
    dwg.add(dwg.rect((MARGIN, MARGIN), (plot_w, plot_h), fill='none', stroke='#333333', stroke_width=1))
    dwg.add(dwg.text(xlabel, insert=(MARGIN + plot_w / 2, height - 15), font_family='Arial, sans-serif',
                     font_size=12, text_anchor='middle'))
    dwg.add(dwg.text(ylabel, insert=(15, MARGIN + plot_h / 2), font_family='Arial, sans-serif', font_size=12,
                     text_anchor='middle', transform=f'rotate(-90 15 {MARGIN + plot_h / 2:.2f})'))
    if not pts:
        return dwg.tostring()

    lx = np.log10([p[0] for p in pts])
    ly = np.log10([p[1] for p in pts])
    x_lo, x_hi = lx.min() - 0.1, lx.max() + 0.1
    y_lo, y_hi = ly.min() - 0.2, ly.max() + 0.2

    def to_px(u: float, v: float) -> Tuple[float, float]:
        return (MARGIN + (u - x_lo) / (x_hi - x_lo) * plot_w,
                MARGIN + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h)

    axes = dwg.g(font_family='Arial, sans-serif', font_size=10)
    for tick in _log_ticks(x_lo, x_hi):
        if x_lo <= tick <= x_hi:
            px, _ = to_px(tick, y_lo)
            axes.add(dwg.line((px, MARGIN + plot_h), (px, MARGIN + plot_h + 5), stroke='#333333'))
            axes.add(dwg.text(f'1e{int(tick)}', insert=(px, MARGIN + plot_h + 18), text_anchor='middle'))
    for tick in _log_ticks(y_lo, y_hi):
        if y_lo <= tick <= y_hi:
            _, py = to_px(x_lo, tick)
            axes.add(dwg.line((MARGIN - 5, py), (MARGIN, py), stroke='#333333'))
            axes.add(dwg.text(f'1e{int(tick)}', insert=(MARGIN - 8, py + 3), text_anchor='end'))
    dwg.add(axes)

    if slope is not None and intercept is not None:
        # fit is in natural logs
        ends = [(u, (intercept + slope * u * math.log(10)) / math.log(10)) for u in (lx.min(), lx.max())]
        path = dwg.path(d=points_to_svg_path([to_px(u, v) for u, v in ends]),
                        stroke=FIT_LINE_COLOR, stroke_width=2, fill='none')
        dwg.add(path)
        dwg.add(dwg.text(f'slope {slope:.3f}', insert=(MARGIN + plot_w - 90, MARGIN + 18),
                         font_family='Arial, sans-serif', font_size=12, fill=FIT_LINE_COLOR))

    marks = dwg.g(fill=SCATTER_COLOR, stroke='#333333', stroke_width=0.5)
    for u, v in zip(lx, ly):
        marks.add(dwg.circle(center=to_px(u, v), r=4))
    dwg.add(marks)
    return dwg.tostring()
