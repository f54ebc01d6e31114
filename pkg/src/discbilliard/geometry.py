"""Planar primitives and polygon handling.

Polygons are stored as read-only ``(n, 2)`` float arrays in counterclockwise
order.  All coincidence predicates use a tolerance relative to the polygon
diameter (``EPS_GEOM``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

EPS_GEOM = 1e-9
EPS_UNIT = 1e-12
EPS_ANGLE = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


class UnitDir(NamedTuple):
    dx: float
    dy: float


def unit_dir(dx: float, dy: float) -> UnitDir:
    norm = math.sqrt(dx * dx + dy * dy)
    if not norm > 0.0 or not math.isfinite(norm):
        raise ValueError("direction must be finite and nonzero")
    return UnitDir(dx / norm, dy / norm)


class PolygonError(ValueError):
    """A vertex list does not describe a simple polygon."""


class SelfIntersecting(PolygonError):
    pass


class DegenerateArea(PolygonError):
    pass


class DuplicateVertices(PolygonError):
    pass


class CollinearRun(PolygonError):
    pass


class InvalidEdge(ValueError):
    pass


class KTooSmall(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Polygon:
    vertices: np.ndarray

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.hypot(*(v[:, None, :] - v[None, :, :]).transpose(2, 0, 1))))

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    def edge(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices[i % self.n], self.vertices[(i + 1) % self.n]

    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def to_json(self) -> dict:
        return {"vertices": [[float(x), float(y)] for x, y in self.vertices]}

    def __eq__(self, other):
        if not isinstance(other, Polygon):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and bool(
            np.array_equal(self.vertices, other.vertices)
        )

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def __repr__(self):
        return f"Polygon(n={self.n}, vertices={self.vertices.tolist()!r})"


def signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def point_segment_distance(p, a, b) -> float:
    """Euclidean distance from point ``p`` to the closed segment ``ab``."""
    px, py = p
    ax, ay = a
    bx, by = b
    ex, ey = bx - ax, by - ay
    ll = ex * ex + ey * ey
    if ll == 0.0:
        return math.sqrt((px - ax) ** 2 + (py - ay) ** 2)
    s = ((px - ax) * ex + (py - ay) * ey) / ll
    s = min(1.0, max(0.0, s))
    qx, qy = ax + s * ex - px, ay + s * ey - py
    return math.sqrt(qx * qx + qy * qy)


def distance_to_boundary(p: Polygon, pts: np.ndarray) -> np.ndarray:
    """Vectorized distance from each row of ``pts`` to the polygon boundary."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    v = p.vertices
    w = np.roll(v, -1, axis=0)
    best = np.full(len(pts), np.inf)
    for a, b in zip(v, w):
        e = b - a
        s = np.clip(((pts - a) @ e) / (e @ e), 0.0, 1.0)
        q = a + s[:, None] * e - pts
        best = np.minimum(best, np.sqrt(np.einsum("ij,ij->i", q, q)))
    return best


def contains_points(p: Polygon, pts: np.ndarray) -> np.ndarray:
    """Even-odd crossing test; boundary points are classified arbitrarily."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    v = p.vertices
    w = np.roll(v, -1, axis=0)
    for (ax, ay), (bx, by) in zip(v, w):
        straddle = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = ax + (y - ay) * (bx - ax) / (by - ay)
        inside ^= straddle & (x < xc)
    return inside


def _segments_intersect(p1, p2, q1, q2, tol: float) -> bool:
    def orient(a, b, c):
        return cross(b[0] - a[0], b[1] - a[1], c[0] - a[0], c[1] - a[1])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True
    # touching / collinear overlap
    dist_tol = math.sqrt(tol)
    return (
        point_segment_distance(p1, q1, q2) <= dist_tol
        or point_segment_distance(p2, q1, q2) <= dist_tol
        or point_segment_distance(q1, p1, p2) <= dist_tol
        or point_segment_distance(q2, p1, p2) <= dist_tol
    )


def _is_simple(v: np.ndarray, scale: float) -> bool:
    n = len(v)
    tol = (EPS_GEOM * scale) ** 2
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_intersect(a, b, v[j], v[(j + 1) % n], tol):
                return False
    return True


def validate_polygon(points: Sequence[Sequence[float]]) -> Polygon:
    """Check that ``points`` form a simple polygon and return it in CCW order.

    Clockwise input is reversed, keeping the first vertex first.  Raises a
    :class:`PolygonError` subclass naming the violated condition.
    """
    v = np.array(points, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise PolygonError("expected a list of (x, y) pairs")
    n = len(v)
    if n < 3:
        raise PolygonError(f"need at least 3 vertices, got {n}")
    if not np.all(np.isfinite(v)):
        raise PolygonError("vertex coordinates must be finite")
    diffs = v[:, None, :] - v[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=2))
    diam = float(dist.max())
    if diam == 0.0:
        raise DuplicateVertices("all vertices coincide")
    tol = EPS_GEOM * diam
    iu = np.triu_indices(n, 1)
    if np.any(dist[iu] <= tol):
        raise DuplicateVertices("two vertices closer than the geometric tolerance")
    for i in range(n):
        a = v[i] - v[i - 1]
        b = v[(i + 1) % n] - v[i]
        if abs(cross(a[0], a[1], b[0], b[1])) <= EPS_GEOM * np.linalg.norm(a) * np.linalg.norm(b):
            raise CollinearRun(f"vertices {(i - 1) % n}, {i}, {(i + 1) % n} are collinear")
    if not _is_simple(v, diam):
        raise SelfIntersecting("non-adjacent edges intersect")
    area = signed_area(v)
    if abs(area) <= EPS_GEOM * diam * diam:
        raise DegenerateArea("signed area is zero")
    if area < 0:
        v = np.concatenate([v[:1], v[:0:-1]])
    v.setflags(write=False)
    return Polygon(v)


class InteriorAngle(NamedTuple):
    vertex_index: int
    theta: float
    is_reflex: bool


def interior_angles(p: Polygon) -> list[InteriorAngle]:
    v = p.vertices
    n = p.n
    out = []
    for i in range(n):
        ax, ay = v[i] - v[i - 1]
        bx, by = v[(i + 1) % n] - v[i]
        turn = math.atan2(cross(ax, ay, bx, by), ax * bx + ay * by)
        theta = math.pi - turn
        out.append(InteriorAngle(i, theta, theta > math.pi))
    return out


def reflex_vertices(p: Polygon) -> list[int]:
    return [a.vertex_index for a in interior_angles(p) if a.is_reflex]


class RationalAngle(NamedTuple):
    vertex_index: int
    theta: float
    p: int
    q: int
    residual: float
    is_rational: bool


@dataclass(frozen=True)
class RationalityReport:
    angles: tuple[RationalAngle, ...]
    tol_rat: float
    q_max: int

    @property
    def is_rational_within_tol(self) -> bool:
        return all(a.is_rational for a in self.angles)

    def to_json(self) -> dict:
        return {
            "tol_rat": self.tol_rat,
            "q_max": self.q_max,
            "is_rational": self.is_rational_within_tol,
            "angles": [
                {"vertex": a.vertex_index, "theta_over_pi": a.theta / math.pi,
                 "p": a.p, "q": a.q, "residual": a.residual}
                for a in self.angles
            ],
        }


def best_rational(x: float, q_max: int) -> Fraction:
    """Closest fraction to ``x`` with denominator at most ``q_max``."""
    return Fraction(x).limit_denominator(q_max)


def rationality_report(p: Polygon, tol_rat: float = 1e-9, q_max: int = 10**6) -> RationalityReport:
    if tol_rat <= 0 or q_max < 1:
        raise ValueError("tol_rat must be positive and q_max >= 1")
    rows = []
    for a in interior_angles(p):
        x = a.theta / math.pi
        f = best_rational(x, q_max)
        res = abs(x - f.numerator / f.denominator)
        rows.append(RationalAngle(a.vertex_index, a.theta, f.numerator, f.denominator, res, res < tol_rat))
    return RationalityReport(tuple(rows), tol_rat, q_max)


class MetricEstimate(NamedTuple):
    value: float
    stderr: float


def polygon_metric_d(p: Polygon, q: Polygon, samples: int = 10**6, seed: int = 0) -> MetricEstimate:
    """Monte Carlo estimate of the area of the symmetric difference of ``p`` and ``q``.

    Points are drawn uniformly from the joint bounding box, so the estimate
    is symmetric in its arguments for a fixed seed.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    bp, bq = p.bbox(), q.bbox()
    x0, y0 = min(bp[0], bq[0]), min(bp[1], bq[1])
    x1, y1 = max(bp[2], bq[2]), max(bp[3], bq[3])
    box = (x1 - x0) * (y1 - y0)
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 1 << 18
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        pts = rng.random((m, 2)) * [x1 - x0, y1 - y0] + [x0, y0]
        hits += int(np.count_nonzero(contains_points(p, pts) != contains_points(q, pts)))
        done += m
    frac = hits / samples
    return MetricEstimate(box * frac, box * math.sqrt(frac * (1.0 - frac) / samples))


def canonical_embedding(p: Polygon) -> Polygon:
    """Rigid motion putting v0 at the origin and v_{n-1} on the positive x-axis."""
    v = p.vertices - p.vertices[0]
    ex, ey = v[-1]
    ang = -math.atan2(ey, ex)
    c, s = math.cos(ang), math.sin(ang)
    out = v @ np.array([[c, s], [-s, c]])
    out[0] = 0.0
    out[-1, 1] = 0.0
    out.setflags(write=False)
    return Polygon(out)


def _reflex_apex(p: Polygon, edge_index: int, k: int) -> np.ndarray:
    a, b = p.edge(edge_index)
    ex, ey = b - a
    length = math.sqrt(ex * ex + ey * ey)
    # apex of an isosceles notch whose inside angle is pi + pi/k
    h = 0.5 * length * math.tan(math.pi / (2 * k))
    return 0.5 * (a + b) + h * np.array([-ey, ex]) / length


def _try_reflexify(p: Polygon, edge_index: int, k: int) -> Polygon | None:
    if k < 2:
        return None
    apex = _reflex_apex(p, edge_index, k)
    if not np.all(np.isfinite(apex)):
        return None
    if not contains_points(p, apex[None, :])[0]:
        return None
    if distance_to_boundary(p, apex[None, :])[0] <= EPS_GEOM * p.diameter:
        return None
    v = np.insert(p.vertices, edge_index + 1, apex, axis=0)
    try:
        return validate_polygon(v)
    except PolygonError:
        return None


def minimal_reflex_k(p: Polygon, edge_index: int) -> int:
    """Smallest k >= 2 for which the notch vertex lies strictly inside ``p``."""
    if not 0 <= edge_index < p.n:
        raise InvalidEdge(f"edge index {edge_index} out of range for n={p.n}")
    if _try_reflexify(p, edge_index, 2) is not None:
        return 2
    lo, hi = 2, 4
    while _try_reflexify(p, edge_index, hi) is None:
        lo, hi = hi, hi * 2
        if hi > 1 << 40:
            raise KTooSmall("no admissible k found")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _try_reflexify(p, edge_index, mid) is None:
            lo = mid
        else:
            hi = mid
    return hi


def reflexify(p: Polygon, edge_index: int, k: int) -> Polygon:
    """Replace edge ``edge_index`` by two edges meeting at a reflex vertex.

    The new vertex sits on the perpendicular bisector of the edge, inside
    ``p``, with interior angle ``pi + pi/k``.
    """
    if not 0 <= edge_index < p.n:
        raise InvalidEdge(f"edge index {edge_index} out of range for n={p.n}")
    k0 = minimal_reflex_k(p, edge_index)
    if k < k0:
        raise KTooSmall(f"k={k} below the minimum admissible k0={k0}")
    out = _try_reflexify(p, edge_index, k)
    if out is None:  # pragma: no cover - monotone in k
        raise KTooSmall(f"k={k} does not give a simple polygon")
    return out
