"""Result grid serialization: CSV, JSON, and SVG line charts.

All emitters are deterministic: fixed key order, fixed number formatting
(6 significant digits in CSV), no timestamps, and NaN mapped to ``NA`` in
CSV and ``null`` in JSON. The SVG writer depends on nothing outside the
standard library, so equal inputs give byte-equal files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

from .sweep import ResultGrid, collapse_by_dim, collapse_by_layer

NA = "NA"

# series colors, cycled in order
_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)


def format_value(value: float) -> str:
    """A cell value at 6 significant digits, or ``NA`` when undefined."""
    if value is None or not math.isfinite(value):
        return NA
    return f"{value:.6g}"


def _none_if_nan(value: float) -> float | None:
    return None if value is None or not math.isfinite(value) else value


def _write_matrix_csv(
    destination: Path,
    row_labels: Sequence[str],
    column_labels: Sequence[str],
    matrix,
) -> None:
    lines = ["dim," + ",".join(str(c) for c in column_labels)]
    for label, row in zip(row_labels, matrix):
        lines.append(label + "," + ",".join(format_value(v) for v in row))
    Path(destination).write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_grid_csv(grid: ResultGrid, destination: Path) -> tuple[Path, Path]:
    """Write cell means to ``destination`` and spreads to a ``_std`` sibling.

    Rows are projection widths (identity baseline labeled with a prime),
    columns are layers. Returns both paths.
    """
    destination = Path(destination)
    std_path = destination.with_name(
        destination.stem + "_std" + destination.suffix
    )
    labels = grid.dim_labels()
    _write_matrix_csv(destination, labels, grid.layers, grid.mean)
    _write_matrix_csv(std_path, labels, grid.layers, grid.std)
    return destination, std_path


def _run_record_doc(record) -> dict:
    return {
        "run": record.run,
        "seed": record.seed,
        "value": _none_if_nan(record.value),
        "epochs_run": record.epochs_run,
        "stopped_early": record.stopped_early,
    }


def grid_document(grid: ResultGrid) -> dict:
    """The full grid as a JSON-ready dict (NaN already mapped to None)."""
    labels = grid.dim_labels()
    cells = []
    for index, cell in enumerate(grid.cells):
        dim_index = index // len(grid.layers)
        cells.append(
            {
                "dim": labels[dim_index],
                "layer": cell.layer,
                "error": cell.error,
                "runs": [_run_record_doc(r) for r in cell.runs],
            }
        )
    return {
        "task": grid.task,
        "metric_kind": grid.metric_kind,
        "model_id": grid.model_id,
        "layer_count": grid.layer_count,
        "store_dim": grid.store_dim,
        "runs": grid.runs,
        "dims": list(labels),
        "layers": list(grid.layers),
        "mean": [[_none_if_nan(v) for v in row] for row in grid.mean],
        "std": [[_none_if_nan(v) for v in row] for row in grid.std],
        "cells": cells,
    }


def _dump_json(doc: dict, destination: Path) -> Path:
    destination = Path(destination)
    destination.write_text(
        json.dumps(doc, indent=2, allow_nan=False) + "\n", encoding="utf-8"
    )
    return destination


def emit_grid_json(grid: ResultGrid, destination: Path) -> Path:
    """Write the full grid with per-run metadata as JSON."""
    return _dump_json(grid_document(grid), destination)


LayerSeries = tuple[str, Sequence[tuple[float, float]]]


def emit_layer_profiles(
    series: Sequence[LayerSeries],
    metric_kind: str,
    json_destination: Path,
    svg_destination: Path,
) -> tuple[Path, Path]:
    """Write depth profiles as JSON and as an SVG line chart.

    Each series is a label plus (relative depth, value) points; relative
    depth lives on [0, 1] so models of different heights share an axis.
    """
    if not series:
        raise ValueError("no profile series to emit")
    doc = {
        "metric_kind": metric_kind,
        "series": [
            {
                "label": label,
                "points": [
                    {"position": position, "value": _none_if_nan(value)}
                    for position, value in points
                ],
            }
            for label, points in series
        ],
    }
    _dump_json(doc, json_destination)
    svg = _profiles_svg(series, x_label="relative layer position", y_label=metric_kind)
    Path(svg_destination).write_text(svg, encoding="utf-8")
    return Path(json_destination), Path(svg_destination)


def emit_dim_profile(
    grid: ResultGrid, destination: Path
) -> Path:
    """Write the per-width collapse (max over layers) as JSON."""
    points = collapse_by_dim(grid)
    doc = {
        "metric_kind": grid.metric_kind,
        "series": [
            {
                "label": grid.model_id,
                "points": [
                    {"dim": label, "value": _none_if_nan(value)}
                    for label, value in points
                ],
            }
        ],
    }
    return _dump_json(doc, destination)


def write_sweep_reports(grid: ResultGrid, output_dir: Path) -> dict[str, Path]:
    """Write the full report set for one sweep into ``output_dir``.

    Produces exactly: ``grid.csv``, ``grid_std.csv``, ``grid.json``,
    ``by_layer.json``, ``by_dim.json``, and ``profiles.svg``.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    mean_path, std_path = emit_grid_csv(grid, output_dir / "grid.csv")
    grid_path = emit_grid_json(grid, output_dir / "grid.json")
    layer_series = [(grid.model_id, collapse_by_layer(grid))]
    by_layer, svg = emit_layer_profiles(
        layer_series,
        grid.metric_kind,
        output_dir / "by_layer.json",
        output_dir / "profiles.svg",
    )
    by_dim = emit_dim_profile(grid, output_dir / "by_dim.json")
    return {
        "grid.csv": mean_path,
        "grid_std.csv": std_path,
        "grid.json": grid_path,
        "by_layer.json": by_layer,
        "by_dim.json": by_dim,
        "profiles.svg": svg,
    }


_SVG_WIDTH = 880
_SVG_HEIGHT = 520
_MARGIN_LEFT = 70
_MARGIN_RIGHT = 190
_MARGIN_TOP = 30
_MARGIN_BOTTOM = 55


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if count < 2:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _profiles_svg(
    series: Sequence[LayerSeries], x_label: str, y_label: str
) -> str:
    plot_w = _SVG_WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _SVG_HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM
    xs = [p for _, points in series for p, v in points if math.isfinite(v)]
    ys = [v for _, points in series for p, v in points if math.isfinite(v)]
    if not ys:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(x: float) -> float:
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return _MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_WIDTH}" '
        f'height="{_SVG_HEIGHT}" viewBox="0 0 {_SVG_WIDTH} {_SVG_HEIGHT}">',
        f'<rect width="{_SVG_WIDTH}" height="{_SVG_HEIGHT}" fill="white"/>',
    ]
    axis = (
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333333" stroke-width="1"/>'
    )
    parts.append(axis)
    text = '<g font-family="monospace" font-size="12" fill="#333333">'
    grid_lines = ['<g stroke="#dddddd" stroke-width="1">']
    for tick in _ticks(x_lo, x_hi):
        x = sx(tick)
        grid_lines.append(
            f'<line x1="{_fmt(x)}" y1="{_MARGIN_TOP}" x2="{_fmt(x)}" '
            f'y2="{_MARGIN_TOP + plot_h}"/>'
        )
        text += (
            f'<text x="{_fmt(x)}" y="{_MARGIN_TOP + plot_h + 18}" '
            f'text-anchor="middle">{tick:.4g}</text>'
        )
    for tick in _ticks(y_lo, y_hi):
        y = sy(tick)
        grid_lines.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{_fmt(y)}" '
            f'x2="{_MARGIN_LEFT + plot_w}" y2="{_fmt(y)}"/>'
        )
        text += (
            f'<text x="{_MARGIN_LEFT - 8}" y="{_fmt(y + 4)}" '
            f'text-anchor="end">{tick:.4g}</text>'
        )
    grid_lines.append("</g>")
    parts.extend(grid_lines)
    text += (
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.2f}" y="{_SVG_HEIGHT - 12}" '
        f'text-anchor="middle">{x_label}</text>'
    )
    text += (
        f'<text x="18" y="{_MARGIN_TOP + plot_h / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_MARGIN_TOP + plot_h / 2:.2f})">{y_label}</text>'
    )
    for index, (label, points) in enumerate(series):
        color = _PALETTE[index % len(_PALETTE)]
        finite = [(x, v) for x, v in points if math.isfinite(v)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(v))}" for x, v in finite)
        if coords:
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                f'stroke-width="2"/>'
            )
            for x, v in finite:
                parts.append(
                    f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(v))}" r="3" '
                    f'fill="{color}"/>'
                )
        legend_y = _MARGIN_TOP + 14 + index * 18
        legend_x = _MARGIN_LEFT + plot_w + 14
        parts.append(
            f'<line x1="{legend_x}" y1="{legend_y - 4}" x2="{legend_x + 22}" '
            f'y2="{legend_y - 4}" stroke="{color}" stroke-width="2"/>'
        )
        text += f'<text x="{legend_x + 28}" y="{legend_y}">{_escape(label)}</text>'
    text += "</g>"
    parts.append(text)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
