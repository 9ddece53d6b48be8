"""Serialization of audit artifacts: JSON, CSV and static SVG bar charts."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .exceptions import BiasAuditError

CSV_COLUMNS = (
    "detector", "dataset", "attribute", "group", "label", "status",
    "brisk", "brisk_star", "brisk_star_threshold", "brisk_star_literal",
    "brisk_star_literal_threshold", "eod", "eod_threshold", "eod_at_threshold",
    "subgroups_used", "subgroups_skipped", "t_statistic", "df", "p_value", "significant",
)


class OutputError(BiasAuditError, OSError):
    exit_code = 3


def _plain(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def to_json(obj) -> str:
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def report_rows(report):
    for table, r in report.results():
        b, t = r.bias, r.ttest
        row = {
            "detector": table.detector, "dataset": table.dataset, "attribute": r.attribute,
            "group": r.group, "label": r.label, "status": r.status,
            "significant": r.significant,
        }
        if b is not None:
            row.update(
                brisk=b.brisk, brisk_star=b.brisk_star, brisk_star_threshold=b.brisk_star_threshold,
                brisk_star_literal=b.brisk_star_literal,
                brisk_star_literal_threshold=b.brisk_star_literal_threshold,
                eod=b.eod, eod_threshold=b.eod_threshold, eod_at_threshold=b.eod_at_threshold,
                subgroups_used=b.subgroups_used, subgroups_skipped=b.subgroups_skipped)
        if t is not None:
            row.update(t_statistic=t.t_statistic, df=t.degrees_of_freedom, p_value=t.p_value)
        yield row


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def bar_chart_svg(labels, values, title="", half_width=240.0, scale=None) -> str:
    """Horizontal signed bar chart around a vertical zero line.

    ``values`` may contain ``None`` (no bar drawn).  ``scale`` is pixels per
    unit; by default the largest magnitude spans ``half_width``.
    """
    row_h, bar_h, label_w, top, pad = 22.0, 14.0, 200.0, 40.0, 20.0
    finite = [abs(v) for v in values if v is not None and math.isfinite(v)]
    if scale is None:
        peak = max(finite, default=0.0)
        scale = half_width / peak if peak > 0 else half_width
    zero_x = label_w + pad + half_width
    width = zero_x + half_width + pad
    height = top + row_h * len(labels) + pad
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1f}" height="{height:.1f}" '
        f'viewBox="0 0 {width:.1f} {height:.1f}" data-scale="{scale!r}" data-zero-x="{zero_x:.1f}">',
        f'<title>{escape(title)}</title>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{escape(title)}</text>',
    ]
    for i, (label, v) in enumerate(zip(labels, values)):
        y = top + i * row_h
        out.append(f'<text x="{label_w:.1f}" y="{y + bar_h - 3:.1f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{escape(label)}</text>')
        if v is None or not math.isfinite(v):
            continue
        w = abs(v) * scale
        x = zero_x - w if v < 0 else zero_x
        fill = "#c0504d" if v < 0 else "#4f81bd"
        out.append(f'<rect class="bar" data-attribute={quoteattr(label)} data-value="{v!r}" '
                   f'x="{x:.3f}" y="{y:.1f}" width="{w:.3f}" height="{bar_h:.1f}" fill="{fill}"/>')
    out.append(f'<line class="zero-axis" x1="{zero_x:.1f}" y1="{top - 4:.1f}" x2="{zero_x:.1f}" '
               f'y2="{top + row_h * len(labels):.1f}" stroke="#000" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _safe(name):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name) or "table"


def emit_reports(report, out_dir, formats=("json", "csv", "svg"), chart_metric="brisk"):
    """Write ``report.json``, ``report.csv`` and one ``chart_<detector>.svg`` per table."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out_dir}: {exc.strerror or exc}") from exc
    written = []
    if "json" in formats:
        written.append(_write_text(os.path.join(out_dir, "report.json"), to_json(report)))
    if "csv" in formats:
        written.append(_write_text(os.path.join(out_dir, "report.csv"),
                                   rows_to_csv(report_rows(report), CSV_COLUMNS)))
    if "svg" in formats:
        used = set()
        for table in report.tables:
            stem = _safe(table.detector)
            while stem in used:
                stem += "_"
            used.add(stem)
            labels = [r.attribute for r in table.results]
            values = [r.value(chart_metric) for r in table.results]
            svg = bar_chart_svg(labels, values, title=f"{chart_metric}: {table.detector} ({table.dataset})")
            written.append(_write_text(os.path.join(out_dir, f"chart_{stem}.svg"), svg))
    return written


def emit_matrix(matrix, out_dir, stem="correlation"):
    os.makedirs(out_dir, exist_ok=True)
    rows = [{"detector": n, **{m: v for m, v in zip(matrix.names, row)}}
            for n, row in zip(matrix.names, matrix.matrix.tolist())]
    return [
        _write_text(os.path.join(out_dir, f"{stem}_{matrix.metric}.csv"),
                    rows_to_csv(rows, ("detector", *matrix.names))),
        _write_text(os.path.join(out_dir, f"{stem}_{matrix.metric}.json"), to_json(matrix)),
    ]


def emit_sweep(sweep, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    rows = [p.to_dict() for p in sweep.points]
    cols = ("fraction", "mean_abs_eod", "std_abs_eod", "failed_repetitions", "excluded_attributes")
    return [
        _write_text(os.path.join(out_dir, "sweep.json"), to_json(sweep)),
        _write_text(os.path.join(out_dir, "sweep.csv"), rows_to_csv(rows, cols)),
    ]


def emit_strategies(comparisons, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    rows = [c.to_dict() for c in comparisons]
    cols = ("attribute", "classical_p", "paired_p", "gap", "paired_fallback", "message")
    return [
        _write_text(os.path.join(out_dir, "compare_tests.json"), to_json({"comparisons": rows})),
        _write_text(os.path.join(out_dir, "compare_tests.csv"), rows_to_csv(rows, cols)),
    ]
