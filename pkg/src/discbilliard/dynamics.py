"""Billiard flow on an equivalent table.

Points of phase space are boundary points with a reflection angle ``phi``
measured from the inward normal.  The flight/reflection loop lives in the
collision kernel (:mod:`discbilliard.kernel`); this module wraps it with
typed records, initial-condition sampling, parallel ensembles, unfolding and
CSV export.
"""
from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np

from . import _layout as L
from . import kernel
from .geometry import EPS_GEOM, Point2, Polygon, UnitDir
from .table import DispersingArc, EquivalentTable

EPS_GRAZE = 1e-8
EPS_TIME_REL = 1e-12
MAX_GRAZING = 8
# bounce cap for purely time-limited runs
DEFAULT_BOUNCE_CAP = 10**6


class NotIncoming(ValueError):
    pass


class NoCollision(RuntimeError):
    """The ray left the table: the boundary chain is broken."""


class VertexAmbiguity(RuntimeError):
    """The nearest hit lies on a joint of the boundary chain."""

    def __init__(self, msg, event=None):
        super().__init__(msg)
        self.event = event


class NoArcs(ValueError):
    pass


class NotPolygonalMode(ValueError):
    pass


class Termination(enum.Enum):
    BOUNCE_LIMIT = "BounceLimit"
    TIME_LIMIT = "TimeLimit"
    VERTEX_HIT = "VertexHit"
    GRAZING_OVERFLOW = "GrazingOverflow"


_TERMINATION = {
    L.T_BOUNCES: Termination.BOUNCE_LIMIT,
    L.T_TIME: Termination.TIME_LIMIT,
    L.T_VERTEX: Termination.VERTEX_HIT,
    L.T_GRAZING: Termination.GRAZING_OVERFLOW,
}


@dataclass(frozen=True)
class PhaseState:
    point: Point2
    component_id: int
    phi: float
    outgoing_dir: UnitDir

    def as_start(self) -> tuple:
        return (self.point.x, self.point.y, self.outgoing_dir.dx, self.outgoing_dir.dy, self.component_id)


@dataclass(frozen=True)
class CollisionEvent:
    index: int
    t: float
    tau: float
    point: Point2
    component_id: int
    kappa: float
    phi: float
    grazing: bool


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    initial: PhaseState
    event_array: np.ndarray
    termination: Termination
    summary: np.ndarray
    radius: float

    @cached_property
    def events(self) -> list[CollisionEvent]:
        return [_event_from_row(i + 1, row) for i, row in enumerate(self.event_array)]

    @property
    def arc_hits(self) -> int:
        return int(self.summary[L.S_ARCHITS])

    @property
    def total_time(self) -> float:
        return float(self.summary[L.S_TIME])

    @property
    def log_expansion(self) -> float:
        return float(self.summary[L.S_LOGEXP])

    @property
    def n_grazing(self) -> int:
        return int(self.summary[L.S_NGRAZE])

    @property
    def first_arc_event(self) -> int:
        return int(self.summary[L.S_FIRSTARC])

    @property
    def final(self) -> PhaseState:
        s = self.summary
        return PhaseState(Point2(float(s[L.S_X]), float(s[L.S_Y])), int(s[L.S_COMP]), float(s[L.S_PHI]),
                          UnitDir(float(s[L.S_DX]), float(s[L.S_DY])))

    @property
    def path_length(self) -> float:
        return self.total_time


def _event_from_row(index: int, row) -> CollisionEvent:
    return CollisionEvent(index, float(row[L.E_T]), float(row[L.E_TAU]), Point2(float(row[L.E_X]), float(row[L.E_Y])),
                          int(row[L.E_COMP]), float(row[L.E_KAPPA]), float(row[L.E_PHI]), bool(row[L.E_GRAZE]))


def _eps(table: EquivalentTable) -> tuple[float, float]:
    d = table.diameter
    return EPS_GEOM * d, EPS_TIME_REL * d


def reflect(direction, normal) -> UnitDir:
    """Specular reflection of an incoming direction off a surface with unit ``normal``."""
    dx, dy = direction
    nx, ny = normal
    dn = dx * nx + dy * ny
    if not dn < 0.0:
        raise NotIncoming(f"direction {tuple(direction)} is not incoming against normal {tuple(normal)}")
    rx, ry = dx - 2.0 * dn * nx, dy - 2.0 * dn * ny
    norm = math.sqrt(rx * rx + ry * ry)
    return UnitDir(rx / norm, ry / norm)


def state_on_boundary(table: EquivalentTable, component_id: int, s: float, phi: float) -> PhaseState:
    """Phase point at arclength ``s`` along a component, leaving at angle ``phi``."""
    if not abs(phi) < math.pi / 2:
        raise ValueError("phi must lie in (-pi/2, pi/2)")
    comp = table.components[component_id]
    pt = comp.point_at(s)
    nx, ny = comp.normal_at(pt)
    c, sn = math.cos(phi), math.sin(phi)
    return PhaseState(pt, component_id, phi, UnitDir(c * nx - sn * ny, c * ny + sn * nx))


def reverse(table: EquivalentTable, state: PhaseState) -> PhaseState:
    """Time reversal: the state that retraces the flight which ended at ``state``."""
    nx, ny = table.components[state.component_id].normal_at(state.point)
    back = reflect((-state.outgoing_dir.dx, -state.outgoing_dir.dy), (nx, ny))
    return PhaseState(state.point, state.component_id, -state.phi, back)


def next_collision(table: EquivalentTable, origin, direction, component_id: int = -1) -> CollisionEvent:
    """First boundary hit of the ray from ``origin``.

    ``component_id`` names the component ``origin`` lies on, if any; it is
    skipped so the ray does not re-hit its departure point.
    """
    eps_joint, eps_time = _eps(table)
    dx, dy = direction
    summary, ev = kernel.run_trajectory(table.packed, (origin[0], origin[1], dx, dy, component_id), 1,
                                        math.inf, eps_joint, eps_time, EPS_GRAZE, MAX_GRAZING, True)
    term = int(summary[L.S_TERM])
    if term == L.T_ESCAPE:
        raise NoCollision(f"ray from {tuple(origin)} along {tuple(direction)} left the table")
    event = _event_from_row(1, ev[0])
    if term == L.T_VERTEX:
        raise VertexAmbiguity(f"hit within tolerance of a chain joint at {tuple(event.point)}", event)
    return event


def step(table: EquivalentTable, s: PhaseState) -> tuple[PhaseState, CollisionEvent]:
    """One application of the billiard map."""
    rec = simulate(table, s, 1)
    if rec.termination is Termination.VERTEX_HIT:
        raise VertexAmbiguity("trajectory hit a chain joint", rec.events[0])
    return rec.final, rec.events[0]


def simulate(table: EquivalentTable, s0: PhaseState, max_bounces: int, max_time: float = math.inf) -> TrajectoryRecord:
    if max_bounces < 1 and not max_time > 0:
        raise ValueError("need max_bounces >= 1 or max_time > 0")
    if max_bounces < 1:
        max_bounces = DEFAULT_BOUNCE_CAP
    eps_joint, eps_time = _eps(table)
    summary, ev = kernel.run_trajectory(table.packed, s0.as_start(), int(max_bounces), float(max_time),
                                        eps_joint, eps_time, EPS_GRAZE, MAX_GRAZING, True)
    term = int(summary[L.S_TERM])
    if term == L.T_ESCAPE:
        raise NoCollision(f"trajectory left the table after {int(summary[L.S_NEVENTS])} events")
    ev.setflags(write=False)
    return TrajectoryRecord(s0, ev, _TERMINATION[term], summary, table.radius)


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def _draw_phi(rng: np.random.Generator) -> float:
    # density cos(phi)/2 on (-pi/2, pi/2)
    while True:
        phi = math.asin(2.0 * rng.random() - 1.0)
        if abs(phi) < math.pi / 2:
            return phi


def _draw_on(table: EquivalentTable, ids: list[int], rng: np.random.Generator) -> PhaseState:
    lengths = table.lengths[ids]
    cum = np.cumsum(lengths)
    u = rng.random() * cum[-1]
    k = min(int(np.searchsorted(cum, u, side="right")), len(ids) - 1)
    s = u - (cum[k - 1] if k else 0.0)
    return state_on_boundary(table, ids[k], s, _draw_phi(rng))


def sample_initial(table: EquivalentTable, seed: int, index: int) -> PhaseState:
    """Draw from the invariant boundary measure ``ds * cos(phi) dphi``.

    Deterministic in ``(seed, index)`` so ensembles do not depend on how the
    work is split.
    """
    return _draw_on(table, list(range(len(table))), _rng(seed, index))


def sample_on_arcs(table: EquivalentTable, seed: int, index: int) -> PhaseState:
    """Like :func:`sample_initial`, restricted to the dispersing arcs."""
    ids = table.arc_ids
    if not ids:
        raise NoArcs("table has no dispersing arcs")
    return _draw_on(table, ids, _rng(seed, index))


SAMPLERS = {"full_measure": sample_initial, "arc_start": sample_on_arcs}


def ensemble_starts(table: EquivalentTable, n: int, seed: int, mode: str = "full_measure") -> np.ndarray:
    sampler = SAMPLERS[mode]
    return np.array([sampler(table, seed, i).as_start() for i in range(n)], dtype=float).reshape(n, 5)


def run_ensemble(table: EquivalentTable, starts: np.ndarray, max_bounces: int, max_time: float = math.inf,
                 workers: int = 1, chunk: int = 16) -> np.ndarray:
    """Summaries (one row per start) for independent trajectories.

    Work is split into fixed chunks written to disjoint rows, so the result
    is identical for any number of workers.
    """
    eps_joint, eps_time = _eps(table)
    out = np.zeros((len(starts), L.NSUM))
    tab = table.packed
    starts = np.ascontiguousarray(starts, dtype=float)

    def work(lo: int) -> None:
        hi = min(lo + chunk, len(starts))
        kernel.run_batch(tab, starts[lo:hi], int(max_bounces), float(max_time), eps_joint, eps_time,
                         EPS_GRAZE, MAX_GRAZING, out[lo:hi])

    bounds = range(0, len(starts), chunk)
    if workers <= 1:
        for lo in bounds:
            work(lo)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, bounds))
    if np.any(out[:, L.S_TERM] == L.T_ESCAPE):
        bad = int(np.flatnonzero(out[:, L.S_TERM] == L.T_ESCAPE)[0])
        raise NoCollision(f"trajectory {bad} left the table")
    return out


@dataclass(frozen=True, eq=False)
class UnfoldingRecord:
    transforms: list[np.ndarray]
    points: np.ndarray
    collinearity_residual: float

    def copies(self, p: Polygon) -> list[np.ndarray]:
        """Vertex arrays of the reflected polygon copies P, P1, ..., Pn."""
        hom = np.column_stack([p.vertices, np.ones(p.n)])
        return [(hom @ T.T)[:, :2] for T in self.transforms]


def _edge_reflection(a, b) -> np.ndarray:
    ex, ey = b[0] - a[0], b[1] - a[1]
    ll = ex * ex + ey * ey
    c, s = (ex * ex - ey * ey) / ll, 2.0 * ex * ey / ll
    R = np.array([[c, s], [s, -c]])
    T = np.eye(3)
    T[:2, :2] = R
    T[:2, 2] = np.asarray(a) - R @ np.asarray(a)
    return T


def unfold(p: Polygon, rec: TrajectoryRecord) -> UnfoldingRecord:
    """Method of images: reflect the polygon across each hit edge in turn."""
    if rec.radius != 0.0:
        raise NotPolygonalMode("unfolding needs a pure polygonal trajectory (r = 0)")
    v = p.vertices
    n = p.n
    T = np.eye(3)
    transforms = [T]
    pts = [np.asarray(rec.initial.point, dtype=float)]
    for row in rec.event_array:
        e = int(row[L.E_COMP])
        hit = np.array([row[L.E_X], row[L.E_Y], 1.0])
        pts.append((T @ hit)[:2])
        T = T @ _edge_reflection(v[e], v[(e + 1) % n])
        transforms.append(T)
    pts = np.array(pts)
    d = pts[-1] - pts[0]
    length = math.sqrt(d @ d)
    if length == 0.0:
        res = 0.0
    else:
        rel = pts - pts[0]
        res = float(np.max(np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0])) / length)
    return UnfoldingRecord(transforms, pts, res)


CSV_HEADER = ["traj_id", "i", "t", "x", "y", "component_id", "kappa", "phi", "grazing"]


def write_events_csv(fh: TextIO, trajectories: Iterable[tuple[int, np.ndarray]]) -> None:
    """One row per collision event, ordered by ``(traj_id, i)``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for traj_id, ev in sorted(trajectories, key=lambda item: item[0]):
        for i, row in enumerate(ev, start=1):
            w.writerow([traj_id, i, repr(float(row[L.E_T])), repr(float(row[L.E_X])), repr(float(row[L.E_Y])),
                        int(row[L.E_COMP]), repr(float(row[L.E_KAPPA])), repr(float(row[L.E_PHI])),
                        int(row[L.E_GRAZE])])


def is_arc(table: EquivalentTable, component_id: int) -> bool:
    return isinstance(table.components[component_id], DispersingArc)
