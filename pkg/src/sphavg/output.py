"""Report writers: CSV, JSON, run manifests and SVG region figures.

Every file is written to a temporary sibling and renamed into place, so a
failed run never leaves a partial file behind. Floats are printed with 12
significant digits; infinities become the string ``"inf"``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import ConvexHull

from .region import ExponentPoint, SliceVertex

SIG_DIGITS = 12


def fmt_num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.{SIG_DIGITS}g}"
    return str(v)


def clean_json(obj):
    """Recursively convert to JSON-safe values with 12-digit floats."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return fmt_num(v)
        return float(f"{v:.{SIG_DIGITS}g}")
    if isinstance(obj, Fraction):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_json"):
        return clean_json(obj.to_json())
    return str(obj)


def atomic_write(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt_num(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return atomic_write(path, csv_text(columns, rows))


def json_text(obj) -> str:
    return json.dumps(clean_json(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write(path, json_text(obj))


@dataclass
class RunManifest:
    """Provenance for one CLI run; the timestamp is the only varying field."""

    tool_version: str
    config: dict
    outputs: list[str] = field(default_factory=list)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def to_json(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "config": self.config,
            "outputs": sorted(self.outputs),
            "timestamp": self.timestamp,
        }

    def write(self, path) -> Path:
        return write_json(path, self.to_json())


# --------------------------------------------------------------------------
# SVG

_MARGIN = 0.1


def _svg_doc(body: list[str], title: str) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1" width="480" height="480" '
        'overflow="visible">',
        f"  <title>{title}</title>",
        '  <rect x="0" y="0" width="1" height="1" fill="white"/>',
    ]
    return "\n".join(head + body + ["</svg>", ""])


def _to_canvas(u: float, v: float) -> tuple[float, float]:
    """Unit square data coordinates to the canvas, y pointing up."""
    s = 1 - 2 * _MARGIN
    return _MARGIN + s * u, 1 - (_MARGIN + s * v)


def _axes(xlabel: str, ylabel: str) -> list[str]:
    x0, y0 = _to_canvas(0, 0)
    x1, _ = _to_canvas(1, 0)
    _, y1 = _to_canvas(0, 1)
    style = 'stroke="black" stroke-width="0.004"'
    return [
        f'  <line x1="{x0:.6f}" y1="{y0:.6f}" x2="{x1:.6f}" y2="{y0:.6f}" {style}/>',
        f'  <line x1="{x0:.6f}" y1="{y0:.6f}" x2="{x0:.6f}" y2="{y1:.6f}" {style}/>',
        f'  <text x="{x1:.6f}" y="{y0 + 0.05:.6f}" font-size="0.04" text-anchor="end">{xlabel}</text>',
        f'  <text x="{x0 - 0.02:.6f}" y="{y1:.6f}" font-size="0.04" text-anchor="end">{ylabel}</text>',
    ]


def _polygon(points: list[tuple[float, float]], labels: list[str]) -> list[str]:
    canvas = [_to_canvas(u, v) for u, v in points]
    pts = " ".join(f"{x:.6f},{y:.6f}" for x, y in canvas)
    body = [f'  <polygon points="{pts}" fill="#cfe3f7" stroke="#1f4e79" stroke-width="0.005"/>']
    for (x, y), name in zip(canvas, labels):
        body.append(f'  <circle cx="{x:.6f}" cy="{y:.6f}" r="0.008" fill="#1f4e79"/>')
        if name:
            body.append(f'  <text x="{x + 0.012:.6f}" y="{y - 0.012:.6f}" font-size="0.035">{name}</text>')
    return body


def slice_svg(vertices: Sequence[SliceVertex], n: int) -> str:
    """The diagonal slice ``1/p_1 = ... = 1/p_n`` in the ``(1/p, 1/r)`` plane."""
    pts = [(float(v.s), float(v.t)) for v in vertices]
    body = _axes("1/p", "1/r") + _polygon(pts, [v.name for v in vertices])
    return _svg_doc(body, f"diagonal slice of the necessary region, n={n}")


PROJECTIONS = {"x1x2": (0, 1, "1/p1", "1/p2"), "x1r": (0, 2, "1/p1", "1/r"), "x2r": (1, 2, "1/p2", "1/r")}


def projection_svg(named: dict[str, ExponentPoint], view: str) -> str:
    """Projection of the n = 2 region onto two of its three coordinates."""
    i, j, xl, yl = PROJECTIONS[view]
    coords = {}
    for name, p in named.items():
        key = (float(p.coords[i]), float(p.coords[j]))
        coords.setdefault(key, []).append(name)
    pts = np.array(sorted(coords))
    hull = ConvexHull(pts)
    ring = [tuple(pts[k]) for k in hull.vertices]
    body = _axes(xl, yl) + _polygon(ring, [""] * len(ring))
    for key in sorted(coords):
        x, y = _to_canvas(*key)
        label = ",".join(sorted(coords[key]))
        body.append(f'  <circle cx="{x:.6f}" cy="{y:.6f}" r="0.008" fill="#1f4e79"/>')
        body.append(f'  <text x="{x + 0.012:.6f}" y="{y - 0.012:.6f}" font-size="0.03">{label}</text>')
    return _svg_doc(body, f"necessary region n=2, projection {view}")
