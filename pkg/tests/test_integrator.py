import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from sidyn.errors import InvalidSpan, NonFinite
from sidyn.integrator import (RK4_STABILITY_BOUND, SolverConfig, detect_events, integrate, stability_onset,
                              stability_ratio)
from sidyn.model import ModelParams, validate_params

A = (0.1, 0.5, 0.1, 0.4, 0.0, 0.0)
B = (0.34, 0.6, 0.7, 0.2, 0.1, 0.9)
C = (0.2, 0.29, 0.67, 0.56, 0.8, 0.41)
LINEAR = (0.1, 0.5, 0.3, 0.3, 0.2, 0.7)


def test_stability_bound_constant():
    z = -RK4_STABILITY_BOUND
    assert abs(1 + z + z * z / 2 + z ** 3 / 6 + z ** 4 / 24) == pytest.approx(1.0, abs=1e-12)


def test_origin_stays_at_origin():
    tr = integrate(validate_params(*C), (0.0, 0.0), 0.0, 10.0)
    assert tr.status == "completed"
    assert not np.any(tr.s) and not np.any(tr.i)
    assert tr.events == ()


def test_first_sample_is_initial_state_and_times_increase():
    tr = integrate(validate_params(*LINEAR), (100.0, 50.0), 2.0, 3.0)
    assert tr.samples[0] == (2.0, (100.0, 50.0))
    assert np.all(np.diff(tr.t) > 0)
    assert tr.t[-1] == 3.0


def test_fixed_grid_lands_on_end_time_for_non_dividing_step():
    tr = integrate(validate_params(*LINEAR), (1.0, 1.0), 0.0, 1.0, SolverConfig(step=0.3))
    assert len(tr) == 5
    assert tr.t[-1] == 1.0


@pytest.mark.parametrize("t0,t1", [(1.0, 1.0), (2.0, 1.0), (0.0, math.nan)])
def test_invalid_span(t0, t1):
    with pytest.raises(InvalidSpan):
        integrate(validate_params(*C), (1.0, 1.0), t0, t1)


def test_non_finite_initial_state():
    with pytest.raises(NonFinite):
        integrate(validate_params(*C), (math.nan, 1.0), 0.0, 1.0)


@pytest.mark.parametrize("kw", [dict(step=0.0), dict(rel_tol=-1.0), dict(blowup_threshold=0.0),
                                dict(max_step_count=0), dict(method="euler")])
def test_solver_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_linear_case_matches_matrix_exponential():
    x0 = (1000.0, 500.0)
    tr = integrate(validate_params(*LINEAR), x0, 0.0, 1.0)
    np.testing.assert_allclose(tr.final, oracles.linear_solution(LINEAR, x0, 1.0), rtol=1e-6, atol=0)


def test_expm_oracle_agrees_with_scipy():
    scipy_linalg = pytest.importorskip("scipy.linalg")
    for raw in [LINEAR, (0.5, 0.0, 0.2, 0.2, 0.9, 0.1), (0.9, 1.0, 0.4, 0.4, 0.0, 0.0)]:
        A_ = oracles.linear_matrix(raw[0], raw[1], raw[4], raw[5])
        np.testing.assert_allclose(oracles.expm_2x2(A_, 0.7), scipy_linalg.expm(0.7 * A_), rtol=1e-12)


@pytest.mark.parametrize("h", [1e-2, 1e-3])
def test_fourth_order_convergence(h):
    x0 = (1000.0, 500.0)
    exact = oracles.linear_solution(LINEAR, x0, 1.0)
    p = validate_params(*LINEAR)

    def err(step):
        return np.max(np.abs(np.array(integrate(p, x0, 0.0, 1.0, SolverConfig(step=step)).final) - exact))

    assert 12 <= err(h) / err(h / 2) <= 20


def test_scenario_a_sum_follows_exponential_while_stable():
    # total is exactly 12000 e^(9t) for any beta; the adaptive mode stays stable
    tr = integrate(validate_params(*A), (10000.0, 2000.0), 0.0, 0.5, SolverConfig(method="rk4-adaptive"))
    assert tr.status == "completed"
    assert tr.s[-1] + tr.i[-1] == pytest.approx(12000 * math.exp(4.5), rel=1e-8)


def test_scenario_a_default_run_diverges_early():
    tr = integrate(validate_params(*A), (10000.0, 2000.0), 0.0, 10.0)
    assert tr.status == "diverged"
    assert tr.t[-1] < 10
    assert max(abs(tr.s[-1]), abs(tr.i[-1])) >= 1e12
    assert tr.events[-1].kind == "blowup"
    # the instability is reported, not silent
    assert stability_onset(validate_params(*A), tr, 1e-3) is not None


mu_zero_params = st.builds(
    lambda a, s, b1, b2: ModelParams(a, s, b1, b2, 0.0, 0.0),
    st.floats(0.2, 1.0), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
)


@settings(max_examples=30, deadline=None)
@given(mu_zero_params, st.floats(0, 1e4), st.floats(0, 1e4))
def test_total_transfers_exponential_growth(p, s0, i0):
    tr = integrate(p, (s0, i0), 0.0, 1.0)
    total = tr.s + tr.i
    expected = (s0 + i0) * np.exp(p.k * tr.t)
    # once the fast mode blows up numerically, S and I cancel in floating point;
    # check only while |S|, |I| stay within 1e6 of the total
    ok = np.maximum(np.abs(tr.s), np.abs(tr.i)) <= 1e6 * np.maximum(expected, 1.0)
    per_time = 1e-6 * np.maximum(tr.t, 1e-3)
    assert np.all(np.abs(total[ok] - expected[ok]) <= per_time[ok] * np.maximum(expected[ok], 1e-300))


def test_determinism_bitwise():
    p = validate_params(*C)
    a = integrate(p, (10000.0, 1865.0), 0.0, 10.0)
    b = integrate(p, (10000.0, 1865.0), 0.0, 10.0)
    assert a.t.tobytes() == b.t.tobytes()
    assert a.s.tobytes() == b.s.tobytes() and a.i.tobytes() == b.i.tobytes()
    assert a.events == b.events and a.status == b.status


@pytest.mark.parametrize("raw,x0", [(A, (10000.0, 2000.0)), (C, (10000.0, 1865.0)),
                                    ((0.2, 0.5, 0.3, 0.3, 0.0, 0.0), (100.0, 100.0))])
def test_larger_threshold_never_stops_earlier(raw, x0):
    p = validate_params(*raw)
    short = integrate(p, x0, 0.0, 10.0, SolverConfig(blowup_threshold=1e8))
    assert short.status == "diverged"
    longer = integrate(p, x0, 0.0, 10.0, SolverConfig(blowup_threshold=1e9))
    assert longer.t[-1] >= short.t[-1]
    np.testing.assert_array_equal(longer.s[:len(short)], short.s)


def test_larger_threshold_extends_slow_divergence():
    p = validate_params(0.2, 0.5, 0.3, 0.3, 0.0, 0.0)
    short = integrate(p, (100.0, 100.0), 0.0, 10.0, SolverConfig(blowup_threshold=1e8))
    longer = integrate(p, (100.0, 100.0), 0.0, 10.0, SolverConfig(blowup_threshold=1e9))
    assert longer.t[-1] > short.t[-1]


def test_step_limit_status():
    tr = integrate(validate_params(*LINEAR), (1.0, 1.0), 0.0, 1.0, SolverConfig(max_step_count=10))
    assert tr.status == "step_limit"
    assert len(tr) == 11


def test_adaptive_matches_linear_solution():
    x0 = (1000.0, 500.0)
    exact = oracles.linear_solution(LINEAR, x0, 1.0)
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        tr = integrate(validate_params(*LINEAR), x0, 0.0, 1.0,
                       SolverConfig(method="rk4-adaptive", step=0.1, rel_tol=tol))
        assert tr.status == "completed" and tr.t[-1] == 1.0
        errs.append(np.max(np.abs(np.array(tr.final) - exact) / np.abs(exact)))
    # rel_tol is per step; the global error tracks it within a modest factor
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] < 1e-6


def test_adaptive_blowup():
    tr = integrate(validate_params(*LINEAR), (1000.0, 500.0), 0.0, 10.0, SolverConfig(method="rk4-adaptive"))
    assert tr.status == "diverged"
    assert max(abs(tr.s[-1]), abs(tr.i[-1])) >= 1e12


def test_event_interpolation():
    ev = detect_events([0.0, 1.0, 2.0], [1.0, 1.0, 1.0], [5.0, 5.0, -5.0])
    assert [(e.kind, e.t) for e in ev] == [("i_zero_crossing", 1.5)]


def test_event_through_exact_zero_counts_once():
    ev = detect_events([0.0, 1.0, 2.0, 3.0], [2.0, 0.0, -2.0, -1.0], [1.0, 1.0, 1.0, 1.0])
    assert [(e.kind, e.t) for e in ev] == [("s_zero_crossing", 1.0)]


def test_no_events_for_positive_samples():
    assert detect_events([0.0, 1.0], [1.0, 2.0], [3.0, 4.0]) == []


def test_blowup_event_appended():
    ev = detect_events([0.0, 1.0], [1.0, 2.0], [3.0, 4.0], status="diverged")
    assert [(e.kind, e.t) for e in ev] == [("blowup", 1.0)]


def _first_s_crossing(t, s):
    ev = detect_events(t, s, np.ones_like(s))
    return ev[0].t if ev else None


def test_scenario_c_s_crossing_agrees_with_euler():
    # The true solution has S settle near 10.55 without crossing zero. Both
    # integrators agree on that over the span where their steps are stable
    # (RK4 1e-3 loses stability near t = 0.21).
    p = validate_params(*C)
    tr = integrate(p, (10000.0, 1865.0), 0.0, 0.2)
    assert tr.status == "completed"
    assert stability_onset(p, tr, 1e-3) is None
    te, se, _ = oracles.euler(C, (10000.0, 1865.0), 0.0, 0.2, 1e-5)
    rk = _first_s_crossing(tr.t, tr.s)
    eu = _first_s_crossing(te, se)
    assert rk is None and eu is None
    assert tr.s[-1] == pytest.approx(se[-1], rel=1e-3)


def _agree(raw, x0, t1):
    tr = integrate(validate_params(*raw), x0, 0.0, t1)
    _, se, ie = oracles.euler(raw, x0, 0.0, t1, 1e-6)
    assert tr.status == "completed"
    np.testing.assert_allclose(tr.final, (se[-1], ie[-1]), rtol=1e-4)


def test_rk4_euler_agreement_scenario_c():
    _agree(C, (10000.0, 1865.0), 0.05)


def test_rk4_euler_agreement_scenario_d():
    _agree((0.73, 0.21, 0.5, 0.52, 0.4, 0.9), (10000.0, 20000.0), 0.5)


@pytest.mark.xfail(strict=True, reason="default RK4 step lies outside the stability region for A and B")
@pytest.mark.parametrize("raw,x0,t1", [(A, (10000.0, 2000.0), 0.005), (B, (10000.0, 2000.0), 0.002)])
def test_rk4_euler_agreement_stiff_presets(raw, x0, t1):
    _agree(raw, x0, t1)


def test_stability_ratio_flags_scenario_b():
    assert stability_ratio(validate_params(*B), (10000, 2000), 1e-3) > 1
    assert stability_ratio(validate_params(*B), (10000, 2000), 1e-4) < 1


def test_interpolation_at_sample_times():
    tr = integrate(validate_params(*LINEAR), (1000.0, 500.0), 0.0, 1.0)
    s, i = tr.at([0.0, 1.0])
    assert s[0] == 1000.0 and i[-1] == tr.i[-1]
