"""Equivalent point-particle table for a disc of radius ``r`` in a polygon.

The disc centre is confined to the inward ``r``-erosion of the polygon.  Its
boundary is a closed chain of flat walls (edges offset by ``r``) and, at every
reflex vertex, a circular arc of radius ``r`` centred on that vertex.  The arc
bulges into the table, so it is a dispersing component with curvature ``1/r``.

Serialized layout (``table_to_dict``)::

    {"radius": r,
     "source": {"vertices": [[x, y], ...]},
     "components": [
        {"type": "wall", "a": [x, y], "b": [x, y],
         "inward_normal": [nx, ny], "source_edge": i},
        {"type": "arc", "center": [x, y], "radius": r,
         "angle_start": a0, "angle_end": a1, "source_vertex": j},
        ...]}

Arc angles span counterclockwise from ``angle_start`` to ``angle_end``; the
boundary chain (table interior on the left) runs clockwise around the centre,
from the point at ``angle_end`` to the point at ``angle_start``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from . import _layout as L
from .geometry import (
    EPS_GEOM,
    Point2,
    Polygon,
    UnitDir,
    contains_points,
    distance_to_boundary,
    interior_angles,
    point_segment_distance,
    validate_polygon,
)

TANGENCY_TOL = 1e-8
CONTAINMENT_TOL = 1e-8


class RadiusTooLarge(ValueError):
    pass


class ErosionInvalid(ValueError):
    pass


@dataclass(frozen=True)
class Wall:
    a: Point2
    b: Point2
    inward_normal: UnitDir
    source_edge: int

    curvature = 0.0

    @property
    def start(self) -> Point2:
        return self.a

    @property
    def end(self) -> Point2:
        return self.b

    @property
    def length(self) -> float:
        return math.dist(self.a, self.b)

    def point_at(self, s: float) -> Point2:
        f = s / self.length
        return Point2(self.a.x + f * (self.b.x - self.a.x), self.a.y + f * (self.b.y - self.a.y))

    def normal_at(self, pt) -> UnitDir:
        return self.inward_normal

    def distance(self, pt) -> float:
        return point_segment_distance(pt, self.a, self.b)

    def sample(self, m: int) -> np.ndarray:
        f = np.linspace(0.0, 1.0, m)[:, None]
        return (1 - f) * np.array(self.a) + f * np.array(self.b)


@dataclass(frozen=True)
class DispersingArc:
    center: Point2
    radius: float
    angle_start: float
    angle_end: float
    source_vertex: int

    @property
    def curvature(self) -> float:
        return 1.0 / self.radius

    @property
    def span(self) -> float:
        return self.angle_end - self.angle_start

    def _at_angle(self, ang: float) -> Point2:
        return Point2(self.center.x + self.radius * math.cos(ang), self.center.y + self.radius * math.sin(ang))

    @property
    def start(self) -> Point2:
        return self._at_angle(self.angle_end)

    @property
    def end(self) -> Point2:
        return self._at_angle(self.angle_start)

    @property
    def length(self) -> float:
        return self.radius * self.span

    def point_at(self, s: float) -> Point2:
        return self._at_angle(self.angle_end - s / self.radius)

    def normal_at(self, pt) -> UnitDir:
        wx, wy = pt[0] - self.center.x, pt[1] - self.center.y
        w = math.sqrt(wx * wx + wy * wy)
        return UnitDir(wx / w, wy / w)

    def distance(self, pt) -> float:
        wx, wy = pt[0] - self.center.x, pt[1] - self.center.y
        ang = math.atan2(wy, wx)
        rel = (ang - self.angle_start) % (2 * math.pi)
        if rel <= self.span:
            return abs(math.sqrt(wx * wx + wy * wy) - self.radius)
        return min(math.dist(pt, self.start), math.dist(pt, self.end))

    def sample(self, m: int) -> np.ndarray:
        ang = np.linspace(self.angle_end, self.angle_start, m)
        return np.column_stack([self.center.x + self.radius * np.cos(ang),
                                self.center.y + self.radius * np.sin(ang)])


Component = Union[Wall, DispersingArc]


@dataclass(frozen=True, eq=False)
class EquivalentTable:
    components: tuple[Component, ...]
    radius: float
    source: Polygon

    def __len__(self):
        return len(self.components)

    @property
    def arcs(self) -> list[DispersingArc]:
        return [c for c in self.components if isinstance(c, DispersingArc)]

    @property
    def arc_ids(self) -> list[int]:
        return [i for i, c in enumerate(self.components) if isinstance(c, DispersingArc)]

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([c.length for c in self.components])

    @property
    def perimeter(self) -> float:
        return float(self.lengths.sum())

    @cached_property
    def diameter(self) -> float:
        return self.source.diameter

    @cached_property
    def packed(self) -> np.ndarray:
        """Row-per-component float array consumed by the collision kernel."""
        out = np.zeros((len(self.components), L.NCOL))
        for i, c in enumerate(self.components):
            out[i, L.C_SX:L.C_EY + 1] = (*c.start, *c.end)
            out[i, L.C_LEN] = c.length
            if isinstance(c, Wall):
                out[i, L.C_KIND] = L.KIND_WALL
                tx, ty = c.b.x - c.a.x, c.b.y - c.a.y
                n = math.sqrt(tx * tx + ty * ty)
                out[i, L.C_P0:L.C_P0 + 4] = (*c.inward_normal, tx / n, ty / n)
            else:
                out[i, L.C_KIND] = L.KIND_ARC
                us = (math.cos(c.angle_end), math.sin(c.angle_end))
                ue = (math.cos(c.angle_start), math.sin(c.angle_start))
                out[i, L.C_P0:L.C_P0 + 7] = (*c.center, c.radius, *us, *ue)
        out.setflags(write=False)
        return out

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Points of the closed table: inside the polygon, at least ``r`` from its boundary."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        inside = contains_points(self.source, pts)
        if self.radius > 0:
            inside &= distance_to_boundary(self.source, pts) >= self.radius
        return inside

    def bbox(self) -> tuple[float, float, float, float]:
        pts = np.vstack([c.sample(33) for c in self.components])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def compute_rk(p: Polygon, k: int) -> float:
    """Minimum distance from vertex ``k`` to the edges not incident to it."""
    n = p.n
    if not 0 <= k < n:
        raise IndexError(f"vertex index {k} out of range for n={n}")
    v = p.vertices
    best = math.inf
    for i in range(n):
        # edge i joins v_i and v_{i+1}; edges k-1 and k touch v_k
        if i == k or i == (k - 1) % n:
            continue
        best = min(best, point_segment_distance(v[k], v[i], v[(i + 1) % n]))
    return best


def compute_rP(p: Polygon) -> float:
    return min(compute_rk(p, k) for k in range(p.n)) / 2.0


def _pt(a) -> Point2:
    return Point2(float(a[0]), float(a[1]))


def _line_intersection(p1, d1, p2, d2) -> np.ndarray:
    den = d1[0] * d2[1] - d1[1] * d2[0]
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / den
    return p1 + t * d1


def build_equivalent_table(p: Polygon, r: float) -> EquivalentTable:
    """Erode ``p`` inward by ``r`` and return the boundary chain of the result."""
    r = float(r)
    if not r >= 0.0:
        raise ValueError("radius must be nonnegative")
    r_p = compute_rP(p)
    if r >= r_p:
        raise RadiusTooLarge(f"r={r} >= r_P={r_p}")
    v = p.vertices
    n = p.n
    if r == 0.0:
        comps = []
        for i in range(n):
            a, b = v[i], v[(i + 1) % n]
            d = (b - a) / np.linalg.norm(b - a)
            comps.append(Wall(_pt(a), _pt(b), UnitDir(float(-d[1]), float(d[0])), i))
        return EquivalentTable(tuple(comps), 0.0, p)

    dirs = np.roll(v, -1, axis=0) - v
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    normals = np.column_stack([-dirs[:, 1], dirs[:, 0]])
    angles = interior_angles(p)

    # chain point where wall i starts / ends, per vertex
    wall_start = np.empty_like(v)
    wall_end = np.empty_like(v)
    for i in range(n):
        prev = (i - 1) % n
        if angles[i].is_reflex:
            wall_end[prev] = v[i] + r * normals[prev]
            wall_start[i] = v[i] + r * normals[i]
        else:
            x = _line_intersection(v[prev] + r * normals[prev], dirs[prev], v[i] + r * normals[i], dirs[i])
            wall_end[prev] = x
            wall_start[i] = x

    comps: list[Component] = []
    for i in range(n):
        if angles[i].is_reflex:
            prev = (i - 1) % n
            a_end = math.atan2(normals[prev][1], normals[prev][0])
            a_start = math.atan2(normals[i][1], normals[i][0])
            span = angles[i].theta - math.pi
            # pin the span exactly; the normals agree with it to rounding
            a_end = a_start + span
            comps.append(DispersingArc(_pt(v[i]), r, a_start, a_end, i))
            wall_end[prev] = v[i] + r * np.array([math.cos(a_end), math.sin(a_end)])
            wall_start[i] = v[i] + r * np.array([math.cos(a_start), math.sin(a_start)])
        comps.append(None)  # placeholder for wall i
    out: list[Component] = []
    wi = 0
    for c in comps:
        if c is None:
            out.append(Wall(_pt(wall_start[wi]), _pt(wall_end[wi]), UnitDir(*map(float, normals[wi])), wi))
            wi += 1
        else:
            out.append(c)
    table = EquivalentTable(tuple(out), r, p)
    validate_table(table, dirs)
    return table


def validate_table(t: EquivalentTable, dirs: np.ndarray | None = None) -> None:
    """Numeric checks on closure, tangency, orientation, simplicity and offset distance."""
    diam = t.diameter
    tol = EPS_GEOM * diam
    comps = t.components
    m = len(comps)
    for i, c in enumerate(comps):
        nxt = comps[(i + 1) % m]
        if math.dist(c.end, nxt.start) > tol:
            raise ErosionInvalid(f"chain gap between components {i} and {(i + 1) % m}")
        if c.length <= tol:
            raise ErosionInvalid(f"component {i} collapsed")
        if isinstance(c, Wall) and dirs is not None:
            d = dirs[c.source_edge]
            if (c.b.x - c.a.x) * d[0] + (c.b.y - c.a.y) * d[1] <= tol:
                raise ErosionInvalid(f"wall {i} reversed by the offset")
    for i, c in enumerate(comps):
        if isinstance(c, DispersingArc):
            for nb, ang in ((comps[i - 1], c.angle_end), (comps[(i + 1) % m], c.angle_start)):
                # clockwise tangent of the arc
                tx, ty = math.sin(ang), -math.cos(ang)
                wx, wy = nb.b.x - nb.a.x, nb.b.y - nb.a.y
                w = math.sqrt(wx * wx + wy * wy)
                if abs(math.atan2(tx * wy - ty * wx, tx * wx + ty * wy) if w else 1.0) > TANGENCY_TOL:
                    raise ErosionInvalid(f"arc {i} not tangent to its neighbour")
    if t.radius > 0:
        for i, c in enumerate(comps):
            res = np.abs(distance_to_boundary(t.source, c.sample(100)) - t.radius)
            if res.max() > CONTAINMENT_TOL * max(1.0, diam):
                raise ErosionInvalid(f"component {i} is not at distance r from the polygon")
    _check_chain_simple(t)


def _check_chain_simple(t: EquivalentTable) -> None:
    pts = []
    for c in t.components:
        pts.append(c.sample(17 if isinstance(c, DispersingArc) else 2)[:-1])
    poly = np.vstack(pts)
    try:
        validate_polygon(_drop_collinear(poly))
    except ValueError as exc:
        raise ErosionInvalid(f"eroded boundary is not simple: {exc}") from exc


def _drop_collinear(v: np.ndarray) -> np.ndarray:
    keep = []
    n = len(v)
    scale = np.ptp(v, axis=0).max()
    for i in range(n):
        a = v[i] - v[i - 1]
        b = v[(i + 1) % n] - v[i]
        if abs(a[0] * b[1] - a[1] * b[0]) > 1e-9 * scale * scale:
            keep.append(v[i])
    return np.array(keep)


def flatten_arcs(t: EquivalentTable) -> Polygon:
    """Replace each arc by its chord, giving the polygon used while no arc is hit."""
    return validate_polygon([c.start for c in t.components])


def table_to_dict(t: EquivalentTable) -> dict:
    comps = []
    for c in t.components:
        if isinstance(c, Wall):
            comps.append({"type": "wall", "a": list(c.a), "b": list(c.b),
                          "inward_normal": list(c.inward_normal), "source_edge": c.source_edge})
        else:
            comps.append({"type": "arc", "center": list(c.center), "radius": c.radius,
                          "angle_start": c.angle_start, "angle_end": c.angle_end,
                          "source_vertex": c.source_vertex})
    return {"radius": t.radius, "source": t.source.to_json(), "components": comps}


def table_from_dict(d: dict) -> EquivalentTable:
    comps: list[Component] = []
    for c in d["components"]:
        if c["type"] == "wall":
            comps.append(Wall(Point2(*c["a"]), Point2(*c["b"]), UnitDir(*c["inward_normal"]), int(c["source_edge"])))
        elif c["type"] == "arc":
            comps.append(DispersingArc(Point2(*c["center"]), float(c["radius"]), float(c["angle_start"]),
                                       float(c["angle_end"]), int(c["source_vertex"])))
        else:
            raise ValueError(f"unknown component type {c['type']!r}")
    return EquivalentTable(tuple(comps), float(d["radius"]), validate_polygon(d["source"]["vertices"]))
