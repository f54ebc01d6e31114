"""Hyperbolicity diagnostics for billiard trajectories.

A plane wavefront (curvature 0) is carried along the orbit.  Free flight of
length ``tau`` maps curvature ``B`` to ``B / (1 + tau*B)`` and stretches the
front by ``1 + tau*B``; reflection adds ``2*kappa/cos(phi)``.  Flat walls add
nothing, so in a polygon the front stays flat and nothing is stretched.  The
same numbers are the elements of the billiard continued fraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _layout as L
from .dynamics import (
    CollisionEvent,
    Termination,
    TrajectoryRecord,
    ensemble_starts,
    run_ensemble,
)
from .table import EquivalentTable

CF_CONVERGENCE_TOL = 1e-10
SS_THRESHOLD_FACTOR = 1e3
Z99 = 2.5758293035489004


class GrazingExcluded(ValueError):
    pass


class NoArcHits(ValueError):
    pass


class ExcludedTrajectory(ValueError):
    pass


@dataclass
class CurvatureState:
    """Running wavefront curvature, expansion and continued-fraction bookkeeping.

    ``cf_elements`` alternates between summed flight times and arc terms
    ``2/(r cos phi)``; flights separated only by flat walls merge into one
    element, as a zero element would collapse them anyway.
    """

    B: float = 0.0
    log_expansion: float = 0.0
    cf_elements: list[float] = field(default_factory=list)
    cf_truncation: float = math.nan
    ss_partial_sum: float = 0.0
    cf_converged_depth: int | None = None
    _ss_group_time: float = 0.0
    _last_is_flight: bool = False
    # convergents h/k of the current and previous truncation
    _hp: float = 1.0
    _kp: float = 0.0
    _hc: float = 0.0
    _kc: float = 1.0

    def _push(self, a: float) -> None:
        self._hp, self._kp, self._hc, self._kc = self._hc, self._kc, a * self._hc + self._hp, a * self._kc + self._kp
        self.cf_elements.append(a)
        self._after_cf_update()

    def _extend_last(self, a: float) -> None:
        self._hc += a * self._hp
        self._kc += a * self._kp
        self.cf_elements[-1] += a
        self._after_cf_update()

    def _after_cf_update(self) -> None:
        if self._kc > 1e150:
            s = self._kc
            self._hp, self._kp, self._hc, self._kc = self._hp / s, self._kp / s, self._hc / s, 1.0
        self.cf_truncation = self._hc / self._kc
        if self.cf_converged_depth is None and self._kp > 0.0:
            if abs(self.cf_truncation - self._hp / self._kp) < CF_CONVERGENCE_TOL:
                self.cf_converged_depth = len(self.cf_elements)

    def advance(self, tau: float, kappa: float, phi: float, grazing: bool = False) -> "CurvatureState":
        if grazing:
            raise GrazingExcluded("grazing collision: 2*kappa/cos(phi) is not usable")
        if not tau > 0.0:
            raise ValueError("flight time must be positive")
        if self.B > 0.0:
            fac = 1.0 + tau * self.B
            self.log_expansion += math.log(fac)
            self.B /= fac
        if self._last_is_flight:
            self._extend_last(tau)
        else:
            self._push(tau)
            self._last_is_flight = True
        self._ss_group_time += tau
        if kappa > 0.0:
            inc = 2.0 * kappa / math.cos(phi)
            self.B += inc
            self._push(inc)
            self._last_is_flight = False
            self.ss_partial_sum += self._ss_group_time + inc
            self._ss_group_time = 0.0
        return self


def propagate_curvature(cs: CurvatureState, ev: CollisionEvent) -> CurvatureState:
    """Advance ``cs`` over the flight ending at ``ev`` and the reflection there.

    Updates ``cs`` in place and returns it.
    """
    return cs.advance(ev.tau, ev.kappa, ev.phi, ev.grazing)


def continued_fraction_value(elements, n: int) -> float:
    """Depth-``n`` truncation of ``1/(a1 + 1/(a2 + ...))`` by backward recurrence."""
    if not 1 <= n <= len(elements):
        raise ValueError(f"depth {n} outside 1..{len(elements)}")
    v = float(elements[n - 1])
    for a in reversed(elements[: n - 1]):
        v = a + 1.0 / v
    return 1.0 / v


def linearization_log_growth(event_array: np.ndarray) -> float:
    """Log growth of the transverse displacement under the 2x2 tangent cocycle.

    Independent check of the curvature recursion: multiplies free-flight
    matrices ``[[1, tau], [0, 1]]`` and reflection matrices
    ``[[-1, 0], [-2 kappa / cos phi, -1]]`` applied to a plane front ``(1, 0)``,
    renormalizing after each flight.
    """
    vec = np.array([1.0, 0.0])
    total = 0.0
    for row in event_array:
        tau, kappa, phi = row[L.E_TAU], row[L.E_KAPPA], row[L.E_PHI]
        vec = np.array([[1.0, tau], [0.0, 1.0]]) @ vec
        scale = abs(vec[0])
        total += math.log(scale)
        vec = vec / scale
        vec = np.array([[-1.0, 0.0], [-2.0 * kappa / math.cos(phi), -1.0]]) @ vec
    return total


def ss_threshold(r: float) -> float:
    return SS_THRESHOLD_FACTOR * 2.0 / r


class SeidelSternResult(NamedTuple):
    partial_sums: list[float]
    diverges_numerically: bool


def seidel_stern_check(rec: TrajectoryRecord) -> SeidelSternResult:
    """Partial sums of the element series, grouped by consecutive arc hits.

    Each group is the flight time since the previous arc hit (or the start)
    plus ``2/(r cos phi)`` at the arc.  Grazing events contribute flight time
    only.
    """
    sums = []
    total = 0.0
    group = 0.0
    for row in rec.event_array:
        group += row[L.E_TAU]
        if row[L.E_KAPPA] > 0.0 and not row[L.E_GRAZE]:
            total += group + 2.0 * row[L.E_KAPPA] / math.cos(row[L.E_PHI])
            sums.append(total)
            group = 0.0
    if not sums:
        raise NoArcHits("trajectory never hits a dispersing arc")
    return SeidelSternResult(sums, sums[-1] > ss_threshold(rec.radius))


def _excluded_reason(term: int, n_grazing: int) -> str | None:
    if term == L.T_VERTEX:
        return "vertex"
    if term == L.T_GRAZING or n_grazing > 0:
        return "grazing"
    return None


def curvature_run(rec: TrajectoryRecord) -> CurvatureState:
    cs = CurvatureState()
    for row in rec.event_array:
        cs.advance(row[L.E_TAU], row[L.E_KAPPA], row[L.E_PHI], bool(row[L.E_GRAZE]))
    return cs


def lyapunov_estimate(rec: TrajectoryRecord) -> tuple[float, float]:
    """Time-averaged log expansion of a plane front; returns ``(lambda_hat, total_time)``."""
    if rec.termination not in (Termination.BOUNCE_LIMIT, Termination.TIME_LIMIT) or rec.n_grazing:
        raise ExcludedTrajectory(f"trajectory excluded ({rec.termination.value}, {rec.n_grazing} grazing)")
    cs = curvature_run(rec)
    total_time = float(np.sum(rec.event_array[:, L.E_TAU]))
    return cs.log_expansion / total_time, total_time


@dataclass(frozen=True)
class HyperbolicityReport:
    lambda_mean: float
    lambda_stderr: float
    arc_hit_fraction: float
    first_arc_hit_mean: float | None
    ss_growth_rate: float
    entropy_hat: float
    n_total: int
    n_excluded_grazing: int
    n_excluded_vertex: int
    arc_revisit_fraction: float
    lambda_positive_fraction: float
    hyperbolic_fraction: float
    mode: str
    max_bounces: int

    @property
    def n_used(self) -> int:
        return self.n_total - self.n_excluded_grazing - self.n_excluded_vertex

    @property
    def lambda_ci99(self) -> tuple[float, float]:
        h = Z99 * self.lambda_stderr
        return self.lambda_mean - h, self.lambda_mean + h

    def to_json(self) -> dict:
        return {
            "lambda_mean": self.lambda_mean,
            "lambda_stderr": self.lambda_stderr,
            "arc_hit_fraction": self.arc_hit_fraction,
            "first_arc_hit_mean": self.first_arc_hit_mean,
            "ss_growth_rate": self.ss_growth_rate,
            "entropy_hat": self.entropy_hat,
            "n_total": self.n_total,
            "n_excluded_grazing": self.n_excluded_grazing,
            "n_excluded_vertex": self.n_excluded_vertex,
            "arc_revisit_fraction": self.arc_revisit_fraction,
            "lambda_positive_fraction": self.lambda_positive_fraction,
            "hyperbolic_fraction": self.hyperbolic_fraction,
            "mode": self.mode,
            "max_bounces": self.max_bounces,
        }


def lambdas_from_summaries(summaries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-trajectory ``lambda_hat`` and a mask of trajectories kept by the estimators."""
    term = summaries[:, L.S_TERM].astype(int)
    keep = (term != L.T_VERTEX) & (term != L.T_GRAZING) & (summaries[:, L.S_NGRAZE] == 0)
    time = summaries[:, L.S_TIME]
    lam = np.where(time > 0, summaries[:, L.S_LOGEXP] / np.where(time > 0, time, 1.0), 0.0)
    return lam, keep


def report_from_summaries(summaries: np.ndarray, mode: str, max_bounces: int,
                          revisit_window: int = 1000) -> HyperbolicityReport:
    term = summaries[:, L.S_TERM].astype(int)
    n_vertex = int(np.count_nonzero(term == L.T_VERTEX))
    n_graze = int(np.count_nonzero((term != L.T_VERTEX) & ((term == L.T_GRAZING) | (summaries[:, L.S_NGRAZE] > 0))))
    lam, keep = lambdas_from_summaries(summaries)
    used = summaries[keep]
    lam = lam[keep]
    m = len(lam)
    if m == 0:
        return HyperbolicityReport(0.0, 0.0, 0.0, None, 0.0, 0.0, len(summaries), n_graze, n_vertex,
                                   0.0, 0.0, 0.0, mode, max_bounces)
    hits = used[:, L.S_ARCHITS] > 0
    first = used[:, L.S_FIRSTARC]
    revisit = (first >= 1) & (first <= revisit_window)
    groups = used[:, L.S_SSGROUPS]
    with_groups = groups > 0
    ss_rate = float(np.mean(used[with_groups, L.S_SSSUM] / groups[with_groups])) if with_groups.any() else 0.0
    return HyperbolicityReport(
        lambda_mean=float(np.mean(lam)),
        lambda_stderr=float(np.std(lam, ddof=1) / math.sqrt(m)) if m > 1 else 0.0,
        arc_hit_fraction=float(np.mean(hits)),
        first_arc_hit_mean=float(np.mean(first[hits])) if hits.any() else None,
        ss_growth_rate=ss_rate,
        entropy_hat=float(np.mean(np.maximum(lam, 0.0))),
        n_total=len(summaries),
        n_excluded_grazing=n_graze,
        n_excluded_vertex=n_vertex,
        arc_revisit_fraction=float(np.mean(revisit)),
        lambda_positive_fraction=float(np.mean(lam > 0)),
        hyperbolic_fraction=float(np.mean(revisit & (lam > 0))),
        mode=mode,
        max_bounces=max_bounces,
    )


def ensemble_summaries(t: EquivalentTable, n: int, max_bounces: int, seed: int, mode: str = "full_measure",
                       workers: int = 1, max_time: float = math.inf) -> tuple[np.ndarray, np.ndarray]:
    """Initial states and kernel summaries for ``n`` sampled trajectories."""
    if n < 1:
        raise ValueError("n must be >= 1")
    starts = ensemble_starts(t, n, seed, mode)
    return starts, run_ensemble(t, starts, max_bounces, max_time, workers)


def ensemble_report(t: EquivalentTable, n: int, max_bounces: int, seed: int, mode: str = "full_measure",
                    workers: int = 1, max_time: float = math.inf, revisit_window: int = 1000) -> HyperbolicityReport:
    """Run ``n`` trajectories and aggregate their hyperbolicity statistics.

    ``mode`` is ``"full_measure"`` (starts from the invariant measure on the
    whole boundary) or ``"arc_start"`` (starts on the dispersing arcs).
    Aggregation order is fixed by trajectory index, so the report does not
    depend on ``workers``.
    """
    _, summaries = ensemble_summaries(t, n, max_bounces, seed, mode, workers, max_time)
    return report_from_summaries(summaries, mode, max_bounces, revisit_window)
