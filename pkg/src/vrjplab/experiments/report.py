"""Artifact emission: run record JSON, fixed-schema CSV, SVG charts, markdown.

Float cells are written with ``repr`` (shortest round-trip form), so parsing
the CSV back recovers every value bit-exactly, and identical records always
serialize to identical bytes.  Charts are plain hand-written SVG polylines:
deterministic output matters more here than styling.
"""

from __future__ import annotations

import csv
import json
import math
import os
from typing import Iterable, Sequence

from .config import RunRecord

CSV_COLUMNS = (
    "experiment",
    "rho",
    "wbar",
    "n",
    "s",
    "statistic",
    "vertex_or_scale",
    "value",
    "stderr",
    "ci_lo",
    "ci_hi",
    "replicas",
    "seed",
)

#: Statistics plotted (log-y, one polyline per rho) when the experiment is a series.
_SERIES_STATS = {
    "figure1": "frac_moment",
    "decay_slope": "frac_moment",
    "recurrence_scan": "escape_median",
    "transience_scan": "escape_median",
    "coarse_check": "ks_pvalue",
}


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_run_record(record: RunRecord, outdir) -> str:
    """Persist the record itself; always the first artifact written."""
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"{record.config.experiment}_runrecord.json")
    with open(path, "w") as fh:
        json.dump(record.model_dump(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_run_record(path) -> RunRecord:
    with open(path) as fh:
        return RunRecord.model_validate(json.load(fh))


def emit_csv(record: RunRecord, path) -> None:
    cfg = record.config
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in record.rows:
            writer.writerow(
                [
                    cfg.experiment,
                    _fmt(row.rho),
                    _fmt(cfg.wbar),
                    cfg.n,
                    _fmt(cfg.s),
                    row.statistic,
                    row.vertex_or_scale,
                    _fmt(row.value),
                    _fmt(row.stderr),
                    _fmt(row.ci_lo),
                    _fmt(row.ci_hi),
                    cfg.replicas,
                    record.resolved_seed,
                ]
            )


def parse_csv(path) -> list[dict]:
    """Read a report CSV back; numeric cells become floats, empty cells None."""
    out = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = dict(raw)
            for key in ("rho", "wbar", "s", "value", "stderr", "ci_lo", "ci_hi"):
                row[key] = float(row[key]) if row[key] != "" else None
            for key in ("n", "replicas", "seed"):
                row[key] = int(row[key])
            out.append(row)
    return out


def _svg_polyline(points: Sequence[tuple[float, float]], color: str) -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>'
    )


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def emit_svg(record: RunRecord, path) -> bool:
    """Log-scale line chart of the experiment's series statistic.

    Returns False (writing nothing) for experiments without a series.
    """
    stat = _SERIES_STATS.get(record.config.experiment)
    if stat is None:
        return False
    series: dict[float, list[tuple[int, float]]] = {}
    for row in record.rows:
        if row.statistic != stat or row.vertex_or_scale == "" or row.value <= 0:
            continue
        series.setdefault(row.rho, []).append((int(row.vertex_or_scale), row.value))
    if not series or all(len(pts) < 2 for pts in series.values()):
        return False
    width, height, margin = 640, 420, 55
    xs = [x for pts in series.values() for x, _ in pts]
    logys = [math.log10(y) for pts in series.values() for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(logys), max(logys)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    sx = (width - 2 * margin) / max(x_hi - x_lo, 1)
    sy = (height - 2 * margin) / (y_hi - y_lo)

    def to_xy(x: float, y: float) -> tuple[float, float]:
        return margin + (x - x_lo) * sx, height - margin - (math.log10(y) - y_lo) * sy

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 12}" font-size="13" text-anchor="middle">scale k</text>',
        f'<text x="16" y="{height // 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {height // 2})">log10 {stat}</text>',
    ]
    for x in range(x_lo, x_hi + 1):
        px, _ = to_xy(x, 10**y_lo)
        parts.append(
            f'<text x="{px:.2f}" y="{height - margin + 16}" font-size="11" '
            f'text-anchor="middle">{x}</text>'
        )
    for i, (rho, pts) in enumerate(sorted(series.items())):
        color = _COLORS[i % len(_COLORS)]
        pts = sorted(pts)
        parts.append(_svg_polyline([to_xy(x, y) for x, y in pts], color))
        parts.append(
            f'<text x="{width - margin - 110}" y="{margin + 18 * i + 4}" font-size="12" '
            f'fill="{color}">rho = {rho:g}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
    return True


def emit_md(record: RunRecord, path) -> None:
    cfg = record.config
    lines = [
        f"# {cfg.experiment}",
        "",
        f"- rho={cfg.rho:g} wbar={cfg.wbar:g} n={cfg.n} s={cfg.s:g} "
        f"replicas={cfg.replicas} method={cfg.method}",
        f"- seed={record.resolved_seed} workers={cfg.workers} "
        f"wall_clock_s={record.wall_clock_s:.2f} version={record.code_version}",
    ]
    if record.failures:
        lines.append(f"- **failed replicas: {len(record.failures)}** (excluded from statistics)")
    lines += ["", "| statistic | at | rho | value | stderr | ci_lo | ci_hi |",
              "|---|---|---|---|---|---|---|"]
    for row in record.rows:
        lines.append(
            f"| {row.statistic} | {row.vertex_or_scale} | {row.rho:g} | {row.value:.6g} | "
            + " | ".join("" if v is None else f"{v:.3g}" for v in (row.stderr, row.ci_lo, row.ci_hi))
            + " |"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_report(record: RunRecord, formats: Iterable[str] = ("csv", "svg", "md"),
                outdir: str | None = None) -> dict[str, str]:
    """Write the requested artifacts; the run record JSON always comes first."""
    outdir = outdir if outdir is not None else record.config.output_dir
    if outdir is None:
        raise ValueError("no output directory configured")
    formats = list(formats)
    unknown = set(formats) - {"csv", "svg", "md"}
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    paths = {"runrecord": write_run_record(record, outdir)}
    base = os.path.join(outdir, record.config.experiment)
    if "csv" in formats:
        emit_csv(record, base + ".csv")
        paths["csv"] = base + ".csv"
    if "svg" in formats:
        if emit_svg(record, base + ".svg"):
            paths["svg"] = base + ".svg"
    if "md" in formats:
        emit_md(record, base + ".md")
        paths["md"] = base + ".md"
    return paths
