"""CSV results and SVG plots.

The SVG is always rendered from parsed CSV rows, so plotting a saved CSV
reproduces the emitted figure byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from .engine import PointResult, SimResult

CSV_COLUMNS = ["config_id", "beta", "eb_n0_db", "frames", "bit_errors", "frame_errors",
               "ber", "fer", "ci_low", "ci_high"]
_INT_COLUMNS = {"frames", "bit_errors", "frame_errors"}
_FLOAT_COLUMNS = {"eb_n0_db", "ber", "fer", "ci_low", "ci_high"}

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
           "#17becf", "#7f7f7f", "#bcbd22"]


def results_to_csv(points: Iterable[PointResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in points:
        w.writerow([repr(v) if isinstance(v, float) else v
                    for v in (getattr(p, c) for c in CSV_COLUMNS)])
    return buf.getvalue()


def parse_csv(text: str) -> list[PointResult]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        missing = set(CSV_COLUMNS) - set(row)
        if missing:
            raise ValueError(f"CSV lacks columns: {', '.join(sorted(missing))}")
        vals = {}
        for c in CSV_COLUMNS:
            v = row[c]
            vals[c] = int(v) if c in _INT_COLUMNS else float(v) if c in _FLOAT_COLUMNS else v
        out.append(PointResult(**vals))
    return out


def _series(points: Sequence[PointResult]) -> dict[str, list[PointResult]]:
    betas: dict[str, set[str]] = {}
    for p in points:
        betas.setdefault(p.config_id, set()).add(p.beta)
    series: dict[str, list[PointResult]] = {}
    for p in points:
        label = p.config_id if len(betas[p.config_id]) == 1 else f"{p.config_id} (beta={p.beta})"
        series.setdefault(label, []).append(p)
    return series


def render_svg(points: Sequence[PointResult], what: str = "ber", width: int = 640,
               height: int = 440) -> str:
    """Log-scale ``what`` (ber or fer) versus Eb/N0, one polyline per configuration."""
    if what not in ("ber", "fer"):
        raise ValueError("plot quantity must be 'ber' or 'fer'")
    left, right, top, bottom = 70, 170, 20, 50
    pw, ph = width - left - right, height - top - bottom
    series = _series(points)
    xs = [p.eb_n0_db for p in points]
    ys = [getattr(p, what) for p in points if getattr(p, what) > 0]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    d0 = math.floor(math.log10(min(ys))) if ys else -6
    d1 = min(0, math.ceil(math.log10(max(ys)))) if ys else 0
    if d1 <= d0:
        d1 = d0 + 1

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (d1 - math.log10(y)) / (d1 - d0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for dec in range(d0, d1 + 1):
        y = sy(10.0 ** dec)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" '
                   'stroke="#dddddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" font-size="11" '
                   f'text-anchor="end">1e{dec}</text>')
    n_ticks = 6
    for i in range(n_ticks + 1):
        x = x0 + (x1 - x0) * i / n_ticks
        out.append(f'<text x="{sx(x):.2f}" y="{top + ph + 16}" font-size="11" '
                   f'text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" font-size="12" '
               'text-anchor="middle">Eb/N0 (dB)</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">{what.upper()}</text>')
    for k, (label, pts) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{sx(p.eb_n0_db):.2f},{sy(getattr(p, what)):.2f}"
                          for p in sorted(pts, key=lambda p: p.eb_n0_db) if getattr(p, what) > 0)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{coords}"><title>{escape(label)}</title></polyline>')
        ly = top + 14 + 16 * k
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly + 4}" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_outputs(result: SimResult, out_path: str | Path, stem: str = "results",
                 what: str = "ber") -> dict[str, Path]:
    """Write ``<stem>.csv``, ``<stem>.svg`` and ``<stem>.meta.json`` into ``out_path``."""
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    csv_text = results_to_csv(result.points)
    paths = {"csv": out / f"{stem}.csv", "svg": out / f"{stem}.svg",
             "meta": out / f"{stem}.meta.json"}
    paths["csv"].write_text(csv_text)
    paths["svg"].write_text(render_svg(parse_csv(csv_text), what))
    paths["meta"].write_text(json.dumps(result.metadata, indent=2, sort_keys=True, default=str)
                             + "\n")
    return paths


def plot_csv(csv_path: str | Path, svg_path: str | Path | None = None, what: str = "ber") -> Path:
    csv_path = Path(csv_path)
    svg_path = Path(svg_path) if svg_path else csv_path.with_suffix(".svg")
    svg_path.write_text(render_svg(parse_csv(csv_path.read_text()), what))
    return svg_path
