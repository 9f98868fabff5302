"""Self-contained SVG rendering of sweep results.

The chart is written directly as SVG text so that identical rows always
produce identical bytes; no plotting library, fonts, or external assets.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Iterable

from .errors import ConfigError
from .sweep import ENGINE_ANALYTIC, SweepRow


class PlotKind(Enum):
    GAIN_VS_DELTA = "gain-vs-delta"


_WIDTH, _HEIGHT = 720, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 72, 24, 28, 56
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_step(span: float, target_ticks: int = 6) -> float:
    raw = span / max(target_ticks, 1)
    power = 10.0 ** math.floor(math.log10(raw)) if raw > 0 else 1.0
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mult * power >= raw:
            return mult * power
    return 10.0 * power


def render_gain_vs_delta(rows: Iterable[SweepRow]) -> str:
    """Log-x line chart of gain against the repair interval, one series per code."""
    rows = list(rows)
    if not rows:
        raise ConfigError("cannot plot an empty row set")
    ratios = [r.t_bs / r.t_d for r in rows]
    ref = ratios[0]
    if any(abs(r - ref) > 1e-9 * ref for r in ratios):
        raise ConfigError(
            "rows mix several t_bs/t_d ratios; filter to a single ratio before plotting"
        )

    engines = {r.engine for r in rows}
    series: dict[tuple[int, int, str], list[SweepRow]] = {}
    for row in rows:
        series.setdefault((row.n, row.k, row.engine), []).append(row)
    for points in series.values():
        points.sort(key=lambda r: r.delta)

    xs = [math.log10(r.delta) for r in rows]
    ys = [r.gain for r in rows]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi - x_lo < 1e-12:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    y_lo, y_hi = min(ys), max(ys)
    pad = max((y_hi - y_lo) * 0.08, y_hi * 0.02, 1e-6)
    y_lo, y_hi = max(0.0, y_lo - pad), y_hi + pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333333" stroke-width="1"/>',
    ]

    # x ticks at decades of the repair interval
    for decade in range(math.ceil(x_lo - 1e-9), math.floor(x_hi + 1e-9) + 1):
        px = sx(decade)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{_MARGIN_T}" x2="{_fmt(px)}" '
            f'y2="{_MARGIN_T + plot_h}" stroke="#dddddd" stroke-width="1"/>'
        )
        label = f"1e{decade}" if decade not in (-1, 0, 1) else f"{10.0 ** decade:g}"
        out.append(
            f'<text x="{_fmt(px)}" y="{_MARGIN_T + plot_h + 18}" font-family="sans-serif" '
            f'font-size="12" text-anchor="middle">{label}</text>'
        )

    step = _nice_step(y_hi - y_lo)
    tick = math.ceil(y_lo / step) * step
    while tick <= y_hi + 1e-12:
        py = sy(tick)
        out.append(
            f'<line x1="{_MARGIN_L}" y1="{_fmt(py)}" x2="{_MARGIN_L + plot_w}" '
            f'y2="{_fmt(py)}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_MARGIN_L - 8}" y="{_fmt(py + 4)}" font-family="sans-serif" '
            f'font-size="12" text-anchor="end">{tick:g}</text>'
        )
        tick += step

    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_HEIGHT - 14}" font-family="sans-serif" '
        'font-size="13" text-anchor="middle">repair interval (t.u.)</text>'
    )
    out.append(
        f'<text x="18" y="{_MARGIN_T + plot_h / 2:.1f}" font-family="sans-serif" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 18 {_MARGIN_T + plot_h / 2:.1f})">'
        "download delay gain</text>"
    )
    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_MARGIN_T - 9}" font-family="sans-serif" '
        f'font-size="13" text-anchor="middle">t_bs = {ref:g} t_d</text>'
    )

    legend_y = _MARGIN_T + 16
    for color_idx, (key, points) in enumerate(sorted(series.items())):
        n, k, engine = key
        color = _PALETTE[color_idx % len(_PALETTE)]
        coords = [(sx(math.log10(p.delta)), sy(p.gain)) for p in points]
        if len(coords) > 1:
            path = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in coords)
            dash = "" if engine == ENGINE_ANALYTIC else ' stroke-dasharray="5,3"'
            out.append(
                f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>'
            )
        for x, y in coords:
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.6" fill="{color}"/>')
        label = f"({n},{k})" + (f" {engine}" if len(engines) > 1 else "")
        lx = _MARGIN_L + plot_w - 150
        out.append(
            f'<line x1="{lx}" y1="{legend_y - 4}" x2="{lx + 26}" y2="{legend_y - 4}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        out.append(
            f'<text x="{lx + 32}" y="{legend_y}" font-family="sans-serif" font-size="12">{label}</text>'
        )
        legend_y += 17

    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(rows: Iterable[SweepRow], path: str, plot: PlotKind = PlotKind.GAIN_VS_DELTA) -> None:
    """Render the requested chart; refuses empty or mixed-ratio input."""
    if plot is not PlotKind.GAIN_VS_DELTA:
        raise ConfigError(f"unsupported plot kind {plot!r}")
    svg = render_gain_vs_delta(rows)
    with open(path, "w", newline="") as fh:
        fh.write(svg)
