"""Minimal standalone SVG line charts for CSV traces (no plotting dependency)."""

from __future__ import annotations

import csv
import math
import os
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=150, top=30, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b")


class MissingColumn(KeyError):
    pass


class EmptyData(ValueError):
    pass


def read_columns(csv_path: str, columns: Sequence[str]):
    """Return ``(x name, x values, {column: values})`` from a CSV trace."""
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise MissingColumn("columns not in %s: %s" % (csv_path, ", ".join(missing)))
        rows = list(reader)
    if not rows:
        raise EmptyData("%s has no data rows" % csv_path)
    xname = header[0]
    xs = [float(r[xname]) for r in rows]
    return xname, xs, {c: [float(r[c]) for r in rows] for c in columns}


def _log_range(values):
    pos = [v for v in values if v > 0 and math.isfinite(v)]
    if not pos:
        return None
    lo, hi = math.log10(min(pos)), math.log10(max(pos))
    lo, hi = math.floor(lo), math.ceil(hi)
    if hi == lo:
        hi += 1
    return lo, hi


def emit_svg(csv_path: str, columns: Sequence[str], out_path: str, title: str = "") -> str:
    """Write a log-scale chart with one polyline per column.

    The y axis is logarithmic (nonpositive values are skipped); the x axis is
    logarithmic too when every x value is positive.  Axis ranges are whole
    decades enclosing the plotted data.
    """
    if not columns:
        raise ValueError("at least one column is required")
    xname, xs, data = read_columns(csv_path, columns)
    yrange = _log_range([v for vals in data.values() for v in vals])
    if yrange is None:
        raise EmptyData("no positive values to plot on a log scale")
    xlog = all(v > 0 for v in xs)
    if xlog:
        xlo, xhi = _log_range(xs)
        fx = math.log10
    else:
        xlo, xhi = min(xs), max(xs)
        if xhi == xlo:
            xhi = xlo + 1
        fx = float
    ylo, yhi = yrange
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (fx(x) - xlo) / (xhi - xlo) * pw

    def py(y):
        return MARGIN["top"] + (yhi - math.log10(y)) / (yhi - ylo) * ph

    out = ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
           '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="%d" height="%d" '
           'viewBox="0 0 %d %d">' % (WIDTH, HEIGHT, WIDTH, HEIGHT),
           '<rect width="100%" height="100%" fill="white"/>']
    if title:
        out.append('<text x="%d" y="20" font-size="14" font-family="sans-serif">%s</text>'
                   % (MARGIN["left"], escape(title)))
    x0, y0 = MARGIN["left"], MARGIN["top"] + ph
    out.append('<g id="axes" stroke="black" data-xmin="%s" data-xmax="%s" data-ymin="%s" '
               'data-ymax="%s" data-xscale="%s" data-yscale="log">'
               % (repr(10.0 ** xlo if xlog else xlo), repr(10.0 ** xhi if xlog else xhi),
                  repr(10.0 ** ylo), repr(10.0 ** yhi), "log" if xlog else "linear"))
    out.append('<line x1="%d" y1="%d" x2="%d" y2="%d"/>' % (x0, y0, x0 + pw, y0))
    out.append('<line x1="%d" y1="%d" x2="%d" y2="%d"/>' % (x0, y0, x0, MARGIN["top"]))
    out.append('</g>')
    out.append('<g font-size="10" font-family="sans-serif">')
    for e in range(ylo, yhi + 1):
        y = py(10.0 ** e)
        out.append('<text x="%d" y="%.1f" text-anchor="end">1e%d</text>' % (x0 - 6, y + 3, e))
    if xlog:
        ticks = [(10.0 ** e, "1e%d" % e) for e in range(xlo, xhi + 1)]
    else:
        ticks = [(xlo + (xhi - xlo) * i / 4, "%.4g" % (xlo + (xhi - xlo) * i / 4)) for i in range(5)]
    for v, label in ticks:
        out.append('<text x="%.1f" y="%d" text-anchor="middle">%s</text>' % (px(v), y0 + 15, label))
    out.append('<text x="%.1f" y="%d" text-anchor="middle">%s</text>'
               % (x0 + pw / 2, HEIGHT - 10, escape(xname)))
    out.append('</g>')
    for i, (name, ys) in enumerate(data.items()):
        color = COLORS[i % len(COLORS)]
        pts = " ".join("%.2f,%.2f" % (px(x), py(y)) for x, y in zip(xs, ys)
                       if y > 0 and math.isfinite(y) and (not xlog or x > 0))
        out.append('<polyline data-column="%s" fill="none" stroke="%s" stroke-width="1.5" '
                   'points="%s"/>' % (escape(name), color, pts))
        ly = MARGIN["top"] + 15 * (i + 1)
        out.append('<text x="%d" y="%d" font-size="11" font-family="sans-serif" fill="%s">%s</text>'
                   % (WIDTH - MARGIN["right"] + 10, ly, color, escape(name)))
    out.append('</svg>')
    tmp = out_path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    os.replace(tmp, out_path)
    return out_path
