"""Static SVG renderings of tables, trajectories and unfoldings."""
from __future__ import annotations

import math

import numpy as np

from .dynamics import UnfoldingRecord
from .geometry import Polygon
from .table import DispersingArc, EquivalentTable

MARGIN = 0.05


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _frame(x0: float, y0: float, x1: float, y1: float, body: list[str]) -> str:
    w, h = x1 - x0, y1 - y0
    mx, my = MARGIN * w, MARGIN * h
    vb = (x0 - mx, -(y1 + my), w + 2 * mx, h + 2 * my)
    stroke = 0.004 * max(w, h)
    return "\n".join([
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{" ".join(_fmt(v) for v in vb)}" width="600" height="{_fmt(600 * vb[3] / vb[2])}">',
        f'<g transform="scale(1,-1)" fill="none" stroke-width="{_fmt(stroke)}" stroke-linejoin="round">',
        *body,
        "</g>",
        "</svg>",
        "",
    ])


def _polyline(pts, color: str, width: float = 1.0) -> str:
    coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
    extra = f' stroke-width="{_fmt(width)}"' if width != 1.0 else ""
    return f'<polyline points="{coords}" stroke="{color}"{extra}/>'


def table_paths(t: EquivalentTable) -> list[str]:
    out = []
    for c in t.components:
        (sx, sy), (ex, ey) = c.start, c.end
        if isinstance(c, DispersingArc):
            r = _fmt(c.radius)
            # chain runs clockwise about the centre: decreasing angle, sweep flag 0
            large = 1 if c.span > math.pi else 0
            out.append(f'<path d="M {_fmt(sx)} {_fmt(sy)} A {r} {r} 0 {large} 0 {_fmt(ex)} {_fmt(ey)}" stroke="red"/>')
        else:
            out.append(f'<path d="M {_fmt(sx)} {_fmt(sy)} L {_fmt(ex)} {_fmt(ey)}" stroke="black"/>')
    return out


def table_svg(t: EquivalentTable, trajectory: np.ndarray | None = None) -> str:
    """Walls in black, arcs in red, the source polygon in grey, plus an optional path."""
    x0, y0, x1, y1 = t.source.bbox()
    body = []
    if t.radius > 0:
        body.append(_polyline(np.vstack([t.source.vertices, t.source.vertices[:1]]), "#999999"))
    body.extend(table_paths(t))
    if trajectory is not None and len(trajectory) > 1:
        body.append(_polyline(trajectory, "#1f77b4", 0.5 * 0.004 * max(x1 - x0, y1 - y0)))
    return _frame(x0, y0, x1, y1, body)


def unfolding_svg(p: Polygon, u: UnfoldingRecord) -> str:
    """Reflected copies of the polygon and the straight unfolded orbit."""
    copies = u.copies(p)
    allpts = np.vstack(copies + [u.points])
    x0, y0 = allpts.min(axis=0)
    x1, y1 = allpts.max(axis=0)
    body = []
    for i, c in enumerate(copies):
        color = "black" if i == 0 else "#999999"
        body.append(_polyline(np.vstack([c, c[:1]]), color))
    body.append(_polyline(u.points, "#1f77b4"))
    body.append(_polyline([u.points[0], u.points[-1]], "red", 0.5 * 0.004 * max(x1 - x0, y1 - y0)))
    return _frame(float(x0), float(y0), float(x1), float(y1), body)
