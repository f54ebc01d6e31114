import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discbilliard import _layout as L
from discbilliard.analysis import (
    CurvatureState,
    ExcludedTrajectory,
    GrazingExcluded,
    NoArcHits,
    continued_fraction_value,
    curvature_run,
    ensemble_report,
    ensemble_summaries,
    linearization_log_growth,
    lyapunov_estimate,
    propagate_curvature,
    report_from_summaries,
    seidel_stern_check,
    ss_threshold,
)
from discbilliard.dynamics import (
    CollisionEvent,
    Termination,
    TrajectoryRecord,
    sample_initial,
    simulate,
    state_on_boundary,
)
from discbilliard.geometry import Point2, validate_polygon
from discbilliard.table import build_equivalent_table


def _ev(tau, kappa=0.0, phi=0.0, grazing=False):
    return CollisionEvent(1, tau, tau, Point2(0.0, 0.0), 0, kappa, phi, grazing)


def _jacobian_oracle(steps):
    """Transverse Jacobi field (displacement, angle rate) carried by 2x2 products."""
    v = np.array([1.0, 0.0])
    log_growth = 0.0
    for tau, kappa, phi in steps:
        prev = abs(v[0])
        v = np.array([[1.0, tau], [0.0, 1.0]]) @ v
        log_growth += math.log(abs(v[0]) / prev)
        v = np.array([[-1.0, 0.0], [-2.0 * kappa / math.cos(phi), -1.0]]) @ v
    return v[1] / v[0], log_growth


def test_flat_front_stays_flat():
    cs = propagate_curvature(CurvatureState(), _ev(1.0, 0.0, 0.7))
    assert cs.B == 0.0 and cs.log_expansion == 0.0


def test_arc_hit_focuses_front():
    cs = propagate_curvature(CurvatureState(), _ev(0.3, 5.0, 0.0))
    assert cs.B == pytest.approx(10.0, abs=1e-15)
    assert cs.log_expansion == 0.0


def test_flight_after_arc():
    cs = CurvatureState()
    propagate_curvature(cs, _ev(0.3, 5.0, 0.0))
    propagate_curvature(cs, _ev(0.5, 0.0, 0.2))
    assert cs.B == pytest.approx(10.0 / 6.0, rel=1e-15)
    assert cs.log_expansion == pytest.approx(math.log(6.0), rel=1e-15)
    B, growth = _jacobian_oracle([(0.3, 5.0, 0.0), (0.5, 0.0, 0.2)])
    assert cs.B == pytest.approx(B, rel=1e-14)
    assert cs.log_expansion == pytest.approx(growth, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 3.0), st.sampled_from([0.0, 5.0, 2.0]), st.floats(-1.5, 1.5)),
                min_size=1, max_size=60))
def test_recursion_matches_jacobian(steps):
    cs = CurvatureState()
    for tau, kappa, phi in steps:
        b_before = cs.B
        le_before = cs.log_expansion
        ss_before = cs.ss_partial_sum
        cs.advance(tau, kappa, phi)
        assert cs.B >= 0.0
        assert cs.log_expansion >= le_before
        assert cs.ss_partial_sum >= ss_before
        if kappa == 0.0:
            # flights never raise B and flat walls leave it alone
            assert cs.B <= b_before
    assert all(a > 0 for a in cs.cf_elements)
    B, growth = _jacobian_oracle(steps)
    assert cs.B == pytest.approx(B, rel=1e-9, abs=1e-12)
    assert cs.log_expansion == pytest.approx(growth, rel=1e-9, abs=1e-12)


def test_grazing_refused():
    with pytest.raises(GrazingExcluded):
        propagate_curvature(CurvatureState(), _ev(1.0, 5.0, 1.5707963, grazing=True))
    with pytest.raises(ValueError):
        CurvatureState().advance(0.0, 0.0, 0.0)


def test_cf_examples():
    assert continued_fraction_value([2.0], 1) == 0.5
    assert continued_fraction_value([1.0] * 30, 30) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-9)
    assert continued_fraction_value([1.0, 10.0], 2) == pytest.approx(10 / 11, rel=1e-15)
    with pytest.raises(ValueError):
        continued_fraction_value([1.0], 2)


def _forward_convergents(a):
    h_prev, k_prev, h, k = 1.0, 0.0, 0.0, 1.0
    out = []
    for x in a:
        h_prev, k_prev, h, k = h, k, x * h + h_prev, x * k + k_prev
        out.append(h / k)
    return out


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.05, 20.0), min_size=4, max_size=40))
def test_cf_bracketing(a):
    vals = [continued_fraction_value(a, n) for n in range(1, len(a) + 1)]
    # forward convergents are an independent evaluation of the same truncations
    assert np.allclose(vals, _forward_convergents(a), rtol=1e-10)
    even = vals[1::2]
    odd = vals[0::2]
    tol = 1e-12
    assert all(x <= y + tol for x, y in zip(even, even[1:]))
    assert all(x >= y - tol for x, y in zip(odd, odd[1:]))
    assert max(even) <= min(odd) + tol


def test_state_truncation_tracks_elements(l_table):
    rec = simulate(l_table, sample_initial(l_table, 3, 0), 60)
    cs = CurvatureState()
    for e in rec.events:
        propagate_curvature(cs, e)
        n = len(cs.cf_elements)
        assert cs.cf_truncation == pytest.approx(continued_fraction_value(cs.cf_elements, n), rel=1e-9)
    # elements alternate between merged flight times and arc terms
    arc_terms = cs.cf_elements[1::2]
    assert all(x >= 2 / l_table.radius - 1e-12 for x in arc_terms)
    assert cs.cf_converged_depth is not None


def _synthetic(n, tau=1.0, kappa=5.0, phi=0.0, radius=0.2):
    ev = np.zeros((n, L.NEV))
    ev[:, L.E_TAU] = tau
    ev[:, L.E_T] = np.cumsum(ev[:, L.E_TAU])
    ev[:, L.E_KAPPA] = kappa
    ev[:, L.E_PHI] = phi
    return TrajectoryRecord(None, ev, Termination.BOUNCE_LIMIT, np.zeros(L.NSUM), radius)


def test_ss_linear_growth():
    res = seidel_stern_check(_synthetic(2000))
    assert res.partial_sums[:3] == pytest.approx([11.0, 22.0, 33.0])
    assert np.allclose(res.partial_sums, 11.0 * np.arange(1, 2001))
    assert res.diverges_numerically
    assert ss_threshold(0.2) == pytest.approx(1e4)
    assert not seidel_stern_check(_synthetic(5)).diverges_numerically


def test_ss_no_arcs(square):
    t = build_equivalent_table(square, 0.1)
    rec = simulate(t, sample_initial(t, 0, 0), 50)
    with pytest.raises(NoArcHits):
        seidel_stern_check(rec)


@pytest.mark.parametrize("seed", range(4))
def test_ss_on_l_table(l_table, seed):
    rec = simulate(l_table, sample_initial(l_table, seed, 0), 3000)
    res = seidel_stern_check(rec)
    inc = np.diff(np.concatenate([[0.0], res.partial_sums]))
    assert np.all(inc >= 2 / l_table.radius)
    assert res.partial_sums[-1] == pytest.approx(rec.summary[L.S_SSSUM], rel=1e-12)
    assert len(res.partial_sums) == rec.summary[L.S_SSGROUPS] == rec.arc_hits


def test_lyapunov_zero_polygonal(l_table0):
    for i in range(20):
        rec = simulate(l_table0, sample_initial(l_table0, 1, i), 2000)
        lam, total = lyapunov_estimate(rec)
        assert lam == 0.0 and total > 0


@pytest.mark.parametrize("seed", range(3))
def test_lyapunov_positive_with_arcs(l_table, seed):
    rec = simulate(l_table, sample_initial(l_table, seed, 0), 10_000)
    lam, total = lyapunov_estimate(rec)
    assert lam > 0
    assert total == pytest.approx(rec.total_time, rel=1e-12)
    assert rec.log_expansion == pytest.approx(curvature_run(rec).log_expansion, rel=1e-12)


def test_positivity_after_first_arc(l_table):
    rec = simulate(l_table, sample_initial(l_table, 6, 0), 2000)
    cs = CurvatureState()
    seen_arc = False
    for e in rec.events:
        before = cs.log_expansion
        propagate_curvature(cs, e)
        if seen_arc:
            assert cs.B > 0 and cs.log_expansion > before
        else:
            assert cs.log_expansion == 0.0
        seen_arc |= e.kappa > 0
    assert seen_arc and rec.first_arc_event >= 1


def test_lyapunov_stabilizes(l_table):
    n_seg, seg = 40, 500
    rec = simulate(l_table, sample_initial(l_table, 21, 0), n_seg * seg)
    cs = CurvatureState()
    rates = []
    le0 = t0 = 0.0
    for i, e in enumerate(rec.events, start=1):
        propagate_curvature(cs, e)
        if i % seg == 0:
            rates.append((cs.log_expansion - le0) / (e.t - t0))
            le0, t0 = cs.log_expansion, e.t
    se = np.std(rates, ddof=1) / math.sqrt(len(rates))
    half = simulate(l_table, rec.initial, n_seg * seg // 2)
    lam_half, _ = lyapunov_estimate(half)
    lam_full, _ = lyapunov_estimate(rec)
    assert abs(lam_full - lam_half) < 3 * se


def test_lyapunov_excludes_vertex_hits(square):
    t = build_equivalent_table(square, 0.1)
    s0 = state_on_boundary(t, 0, 0.4, math.atan2(0.4, 0.8))
    with pytest.raises(ExcludedTrajectory):
        lyapunov_estimate(simulate(t, s0, 10))


@pytest.mark.parametrize("seed", range(5))
def test_cocycle_equivalence(l_table, seed):
    rec = simulate(l_table, sample_initial(l_table, seed, 9), 1000)
    assert rec.log_expansion == pytest.approx(linearization_log_growth(rec.event_array), rel=1e-6)


def test_scale_covariance(l_polygon):
    big = validate_polygon(l_polygon.vertices * 2.0)
    t1 = build_equivalent_table(l_polygon, 0.2)
    t2 = build_equivalent_table(big, 0.4)
    r1 = ensemble_report(t1, 200, 3000, seed=4)
    r2 = ensemble_report(t2, 200, 3000, seed=4)
    tol = 3 * math.hypot(r1.lambda_stderr, 2 * r2.lambda_stderr)
    assert abs(r1.lambda_mean - 2 * r2.lambda_mean) < tol
    # the first flights are exact copies scaled by 2
    a = simulate(t1, sample_initial(t1, 4, 0), 20)
    b = simulate(t2, sample_initial(t2, 4, 0), 20)
    lam_a, _ = lyapunov_estimate(a)
    lam_b, _ = lyapunov_estimate(b)
    assert lam_a == pytest.approx(2 * lam_b, rel=1e-8)


def test_square_ensemble_is_neutral(square):
    for r in (0.0, 0.1, 0.3):
        rep = ensemble_report(build_equivalent_table(square, r), 100, 500, seed=2)
        assert rep.arc_hit_fraction == 0.0 and rep.entropy_hat == 0.0 and rep.lambda_mean == 0.0
        assert rep.first_arc_hit_mean is None


def test_l_polygonal_entropy_zero(l_table0):
    rep = ensemble_report(l_table0, 200, 2000, seed=0)
    assert rep.entropy_hat == 0.0 and rep.lambda_positive_fraction == 0.0


def test_report_fields(l_table):
    rep = ensemble_report(l_table, 64, 1000, seed=1, mode="arc_start", workers=2)
    d = json.loads(json.dumps(rep.to_json()))
    for key in ("lambda_mean", "lambda_stderr", "arc_hit_fraction", "first_arc_hit_mean", "ss_growth_rate",
                "entropy_hat", "n_total", "n_excluded_grazing", "n_excluded_vertex"):
        assert key in d
    assert 0.0 <= rep.arc_hit_fraction <= 1.0
    assert rep.n_total == 64 and rep.n_used <= 64
    lo, hi = rep.lambda_ci99
    assert lo < rep.lambda_mean < hi
    assert rep == ensemble_report(l_table, 64, 1000, seed=1, mode="arc_start", workers=1)


def test_report_excludes_flagged_rows():
    rows = np.zeros((4, L.NSUM))
    rows[:, L.S_TIME] = 10.0
    rows[:, L.S_LOGEXP] = [1.0, 2.0, 100.0, 100.0]
    rows[:, L.S_ARCHITS] = 3
    rows[:, L.S_FIRSTARC] = 2
    rows[2, L.S_TERM] = L.T_VERTEX
    rows[3, L.S_NGRAZE] = 1
    rep = report_from_summaries(rows, "full_measure", 100)
    assert rep.n_excluded_vertex == 1 and rep.n_excluded_grazing == 1
    assert rep.lambda_mean == pytest.approx(0.15)
    assert rep.entropy_hat == pytest.approx(0.15)


def test_ensemble_summaries_deterministic(l_table):
    s1, a = ensemble_summaries(l_table, 40, 300, seed=9)
    s2, b = ensemble_summaries(l_table, 40, 300, seed=9, workers=4)
    assert np.array_equal(s1, s2) and np.array_equal(a, b)
    with pytest.raises(ValueError):
        ensemble_summaries(l_table, 0, 10, seed=0)
