"""Campaign grid exports: long-form CSV plus standalone SVG heatmaps.

SVGs are emitted by hand (rectangles and text, no plotting dependency).
Each heatmap panel covers one delay limit (and one flexibility fraction
for cost grids) with duration rows, frequency columns, a linear
min-to-max color scale and a min/max/mean annotation.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .campaign import CampaignResult

CELL_W = 92
CELL_H = 46
MARGIN_LEFT = 110
MARGIN_TOP = 78
MARGIN_BOTTOM = 46
MARGIN_RIGHT = 24

_METRICS = ("mean_flex_kw", "norm_flex", "acof", "apcof", "aecof")


def _color(frac: float) -> str:
    """Linear white-to-dark-blue scale."""
    lo = (247, 251, 255)
    hi = (8, 48, 107)
    rgb = tuple(round(a + (b - a) * frac) for a, b in zip(lo, hi))
    return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"


def _text_color(frac: float) -> str:
    return "#000000" if frac < 0.55 else "#ffffff"


def _fmt_value(value: float) -> str:
    if value == 0:
        return "0"
    if abs(value) >= 1000 or abs(value) < 0.001:
        return f"{value:.2e}"
    return f"{value:.4g}"


def _panel_svg(title: str, durations, frequencies, values: dict) -> str:
    width = MARGIN_LEFT + CELL_W * len(frequencies) + MARGIN_RIGHT
    height = MARGIN_TOP + CELL_H * len(durations) + MARGIN_BOTTOM
    present = [v for v in values.values() if v is not None]
    vmin = min(present) if present else 0.0
    vmax = max(present) if present else 0.0
    vmean = sum(present) / len(present) if present else 0.0
    span = vmax - vmin

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{MARGIN_LEFT}" y="24" font-size="15" font-weight="bold">{title}</text>',
        f'<text x="{MARGIN_LEFT}" y="44" font-size="12">Frequency (times/year)</text>',
        f'<text x="16" y="{MARGIN_TOP - 10}" font-size="12">Duration (hours)</text>',
    ]
    for c, freq in enumerate(frequencies):
        x = MARGIN_LEFT + c * CELL_W + CELL_W / 2
        parts.append(
            f'<text x="{x}" y="{MARGIN_TOP - 8}" font-size="12" '
            f'text-anchor="middle">{freq:g}</text>'
        )
    for r, dur in enumerate(durations):
        y = MARGIN_TOP + r * CELL_H + CELL_H / 2 + 4
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{y}" font-size="12" '
            f'text-anchor="end">{dur:g}</text>'
        )
    for r, dur in enumerate(durations):
        for c, freq in enumerate(frequencies):
            x = MARGIN_LEFT + c * CELL_W
            y = MARGIN_TOP + r * CELL_H
            value = values.get((dur, freq))
            if value is None:
                fill, label, tcol = "#d9d9d9", "n/a", "#000000"
            else:
                frac = 0.5 if span == 0 else (value - vmin) / span
                fill, label, tcol = _color(frac), _fmt_value(value), _text_color(frac)
            parts.append(
                f'<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" '
                f'fill="{fill}" stroke="#666666" stroke-width="0.5"/>'
            )
            parts.append(
                f'<text x="{x + CELL_W / 2}" y="{y + CELL_H / 2 + 4}" font-size="12" '
                f'text-anchor="middle" fill="{tcol}">{label}</text>'
            )
    note_y = MARGIN_TOP + CELL_H * len(durations) + 26
    parts.append(
        f'<text x="{MARGIN_LEFT}" y="{note_y}" font-size="12">'
        f'min={_fmt_value(vmin)}  max={_fmt_value(vmax)}  mean={_fmt_value(vmean)}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def heatmap_export(grid: CampaignResult, metric: str, out_prefix) -> list:
    """Write the grid CSV and one SVG heatmap per delay (and fraction).

    Returns the list of written paths. Unknown metrics raise ValueError.
    """
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose one of {_METRICS}")
    if not grid.cells:
        raise ValueError("empty campaign grid")
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = out_prefix.with_name(out_prefix.name + ".csv")
    grid.write_csv(csv_path)
    written.append(csv_path)

    keys = list(grid.cells)
    durations = sorted({k.duration_hours for k in keys})
    frequencies = sorted({k.annual_frequency for k in keys})
    delays = sorted({k.max_delay_frac for k in keys})
    fractions = sorted({k.flex_fraction for k in keys if k.flex_fraction is not None})
    panels = [(d, f) for d in delays for f in fractions] if fractions \
        else [(d, None) for d in delays]

    for delay, frac in panels:
        values = {}
        for key, cell in grid.cells.items():
            if key.max_delay_frac != delay or key.flex_fraction != frac:
                continue
            values[(key.duration_hours, key.annual_frequency)] = getattr(cell, metric)
        title = f"{metric} (max delay {delay:g}"
        name = f"{out_prefix.name}_{metric}_delay{delay:g}"
        if frac is not None:
            title += f", fraction {frac:g}"
            name += f"_frac{frac:g}"
        title += ")"
        svg_path = out_prefix.with_name(name + ".svg")
        svg_path.write_text(_panel_svg(title, durations, frequencies, values))
        written.append(svg_path)
    return written


def load_grid_csv(path) -> dict:
    """Read a long-form grid CSV back into {(dur, freq, delay, frac): {metric: value}}."""
    cells = {}
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        expected = ["duration_hours", "annual_frequency", "max_delay", "flex_fraction",
                    "metric", "value"]
        if header != expected:
            raise ValueError(f"unexpected grid CSV header {header!r}")
        for row in reader:
            if not row:
                continue
            dur, freq, delay = float(row[0]), float(row[1]), float(row[2])
            frac = None if row[3] == "" else float(row[3])
            cells.setdefault((dur, freq, delay, frac), {})[row[4]] = float(row[5])
    return cells
