"""Deterministic CSV/JSON/SVG writers shared by the command line."""

from __future__ import annotations

import csv
import json
import math
from typing import Iterable, Sequence, TextIO

import numpy as np


def fmt(value) -> str:
    """Locale-free text for a CSV/JSON scalar; floats carry 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def write_csv(stream: TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def _json(value, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        # JSON has no spelling for nan/inf
        return fmt(value) if math.isfinite(float(value)) else "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        parts = [f"{inner}{_json(str(k), indent, 0)}: {_json(v, indent, level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        items = list(value)
        if not items:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            return "[" + ", ".join(_json(v, indent, 0) for v in items) + "]"
        return "[\n" + ",\n".join(inner + _json(v, indent, level + 1) for v in items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dumps_json(value, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and stable key order as given."""
    return _json(value, indent, 0) + "\n"


def svg_polylines(curves: Sequence[np.ndarray], xlim: tuple[float, float], ylim: tuple[float, float],
                  size: int = 600, labels: tuple[str, str] = ("f", "f'")) -> str:
    """Self-contained SVG, one polyline per curve, clipped to the given box.

    Coordinates are printed with three decimals so the output is stable.
    """
    margin = 40
    span = size - 2 * margin
    (x0, x1), (y0, y1) = xlim, ylim

    def px(x, y):
        return margin + (x - x0) / (x1 - x0) * span, margin + (y1 - y) / (y1 - y0) * span

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" width="{size}" height="{size}">',
        f'<defs><clipPath id="box"><rect x="{margin}" y="{margin}" width="{span}" height="{span}"/></clipPath></defs>',
        f'<rect x="{margin}" y="{margin}" width="{span}" height="{span}" fill="none" stroke="black"/>',
    ]
    if x0 < 0 < x1:
        a, _ = px(0.0, y0)
        out.append(f'<line x1="{a:.3f}" y1="{margin}" x2="{a:.3f}" y2="{margin + span}" stroke="#bbb"/>')
    if y0 < 0 < y1:
        _, b = px(x0, 0.0)
        out.append(f'<line x1="{margin}" y1="{b:.3f}" x2="{margin + span}" y2="{b:.3f}" stroke="#bbb"/>')
    out.append(f'<text x="{size / 2:.0f}" y="{size - 10}" text-anchor="middle" font-size="14">{labels[0]}</text>')
    out.append(f'<text x="12" y="{size / 2:.0f}" font-size="14">{labels[1]}</text>')
    out.append('<g clip-path="url(#box)" fill="none" stroke-width="1">')
    for k, curve in enumerate(curves):
        pts = [px(float(x), float(y)) for x, y in curve if math.isfinite(x) and math.isfinite(y)]
        if len(pts) < 2:
            continue
        hue = (k * 47) % 360
        coords = " ".join(f"{a:.3f},{b:.3f}" for a, b in pts)
        out.append(f'<polyline stroke="hsl({hue},70%,40%)" points="{coords}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
