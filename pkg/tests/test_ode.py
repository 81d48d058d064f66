from __future__ import annotations

import math

import numpy as np
import pytest

from rosenau.errors import InvalidConfig, NonFiniteState, ZeroDelta
from rosenau.models import eigen_data, reference_problem
from rosenau.ode import (
    EventKind,
    IntegratorConfig,
    Orbit,
    PhaseState,
    StopReason,
    integrate,
    orbit_residual,
    vector_field,
)
from rosenau.shooting import entry_slope, launch_state


def _shot(alpha: float, delta: float, epsilon: float, **overrides) -> tuple:
    problem = reference_problem(alpha)
    config = IntegratorConfig.for_problem(problem, **overrides)
    start = launch_state(problem, delta, epsilon, 1e-7 * problem.width)
    return problem, config, integrate(problem, delta, epsilon, start, config)


# ── vector_field ─────────────────────────────────────────────────────────

def test_vector_field_values(burgers):
    assert vector_field(burgers, 1.0, 3.0, PhaseState(1.0, 0.0)) == (0.0, -0.5)
    assert vector_field(burgers, 1.0, 3.0, PhaseState(2.0, 0.0)) == (0.0, 0.0)
    linear = reference_problem(0.0)
    assert vector_field(linear, 1.0, 2.0, PhaseState(1.0, -1.0)) == (-1.0, 1.5)


def test_vector_field_needs_positive_delta(burgers):
    with pytest.raises(ZeroDelta):
        vector_field(burgers, 0.0, 1.0, PhaseState(1.0, 0.0))


# ── IntegratorConfig ─────────────────────────────────────────────────────

def test_config_defaults_scale_with_interval(burgers):
    config = IntegratorConfig.for_problem(burgers)
    assert config.r_stop == pytest.approx(2e-6)
    assert (config.rel_tol, config.abs_tol, config.t_max, config.min_step) == (1e-8, 1e-10, 1e5, 1e-13)
    assert config.method == "DOP853"


def test_config_validation(burgers):
    with pytest.raises(InvalidConfig):
        IntegratorConfig.for_problem(burgers, r_stop=0.05)
    with pytest.raises(InvalidConfig):
        IntegratorConfig.for_problem(burgers, rel_tol=0.0)
    with pytest.raises(InvalidConfig):
        IntegratorConfig.for_problem(burgers, method="Euler")
    with pytest.raises(InvalidConfig):
        IntegratorConfig.for_problem(burgers, max_crossings=0)


# ── integrate ────────────────────────────────────────────────────────────

def test_equilibrium_start_gives_single_sample(burgers):
    config = IntegratorConfig.for_problem(burgers)
    orbit = integrate(burgers, 1.0, 3.0, PhaseState(2.0, 0.0), config)
    assert len(orbit) == 1
    assert orbit.events == []
    assert orbit.stop is StopReason.EQUILIBRIUM


def test_non_finite_start_raises(burgers):
    config = IntegratorConfig.for_problem(burgers)
    with pytest.raises(NonFiniteState):
        integrate(burgers, 1.0, 3.0, PhaseState(math.nan, 0.0), config)


def test_spiral_regime_overshoots():
    problem, config, orbit = _shot(0.0, 1.0, 1.0)
    first = orbit.events[0]
    assert first.kind is EventKind.CROSSED_V_PLUS
    assert abs(first.state.v - problem.u_plus) <= config.abs_tol
    assert first.state.w < -config.abs_tol


def test_node_regime_is_captured_monotonically():
    problem, config, orbit = _shot(0.0, 1.0, 2.5)
    event = orbit.terminal_event
    assert event.kind is EventKind.ENTERED_CAPTURE_BALL
    assert abs(math.hypot(event.state.v - problem.u_plus, event.state.w) - config.r_stop) <= config.abs_tol
    assert np.all(orbit.w < 0)
    assert np.all(np.diff(orbit.t) > 0)
    assert np.all(np.diff(orbit.v) < 0)


def test_rk45_agrees_on_capture():
    _, _, orbit = _shot(0.0, 1.0, 2.5, method="RK45")
    assert orbit.terminal_event.kind is EventKind.ENTERED_CAPTURE_BALL


def test_multiple_crossings_are_counted():
    _, _, orbit = _shot(0.0, 1.0, 1.0, max_crossings=3)
    assert orbit.count(EventKind.CROSSED_V_PLUS) == 3
    assert np.all(np.diff(orbit.t) > 0)


def test_linear_node_approach_slope():
    problem, config, orbit = _shot(0.0, 1.0, 3.0)
    slope = entry_slope(problem, orbit, config.r_stop)
    assert slope == pytest.approx(eigen_data(problem, 1.0, 3.0).chi_plus, abs=1e-4)


def test_event_time_converges_with_tolerance():
    problem = reference_problem(0.0)
    coarse_cfg = IntegratorConfig.for_problem(problem)
    fine_cfg = IntegratorConfig.for_problem(problem, rel_tol=5e-9, abs_tol=5e-11)
    start = PhaseState(1.0, -0.5)
    coarse = integrate(problem, 1.0, 1.0, start, coarse_cfg).first(EventKind.CROSSED_V_PLUS)
    fine = integrate(problem, 1.0, 1.0, start, fine_cfg).first(EventKind.CROSSED_V_PLUS)
    assert abs(coarse.t - fine.t) < 10 * coarse_cfg.abs_tol


def test_event_time_after_saddle_escape_converges():
    _, _, coarse = _shot(0.0, 1.0, 1.0)
    _, _, fine = _shot(0.0, 1.0, 1.0, rel_tol=5e-9, abs_tol=5e-11)
    t_coarse = coarse.first(EventKind.CROSSED_V_PLUS).t
    t_fine = fine.first(EventKind.CROSSED_V_PLUS).t
    assert abs(t_coarse - t_fine) < 1e-6


def test_max_steps_stops_integration():
    _, _, orbit = _shot(0.0, 1.0, 2.5, max_steps=5)
    assert orbit.stop is StopReason.MAX_STEPS
    assert orbit.terminal_event is None


# ── Orbit helpers ────────────────────────────────────────────────────────

def test_orbit_csv_format():
    _, _, orbit = _shot(0.0, 1.0, 1.0)
    text = orbit.to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,v,w"
    assert lines[-2].startswith("# event,crossed_v_plus,")
    assert lines[-1] == "# stop,event"
    back = Orbit.from_csv(text)
    np.testing.assert_array_equal(back.t, orbit.t)
    np.testing.assert_array_equal(back.w, orbit.w)
    assert back.events == orbit.events


def test_w_of_v_resamples_monotone_part():
    problem, _, orbit = _shot(0.0, 1.0, 2.5)
    grid = np.linspace(0.1, 1.9, 19)
    w = orbit.w_of_v(grid)
    assert np.all(np.isfinite(w))
    assert np.all(w < 0)
    assert math.isnan(orbit.w_of_v([problem.u_minus + 1.0])[0])


def test_orbit_residual_small_for_computed_wave():
    problem, _, orbit = _shot(0.0, 1.0, 2.5)
    assert orbit_residual(problem, 0.0, 1.0, 2.5, orbit) < 0.05
    assert orbit_residual(problem, 0.0, 1.0, 1.0, orbit) > 0.1
