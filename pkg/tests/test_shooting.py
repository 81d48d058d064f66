from __future__ import annotations

import math

import numpy as np
import pytest

from rosenau.errors import BracketFailure, InvalidConfig, ZeroDelta
from rosenau.models import bounds_report, eps0, h_closed_form, reference_problem
from rosenau.shooting import (
    Classification,
    CurvePoint,
    EntryKind,
    boundary_curve,
    curve_minima,
    curve_to_csv,
    eps_min,
    launch_state,
    shoot,
)


# ── launch_state ─────────────────────────────────────────────────────────

def test_launch_state_follows_unstable_direction(burgers):
    start = launch_state(burgers, 1.0, 3.0, 1e-7)
    assert 2.0 - start.v == pytest.approx(9.57e-8, rel=1e-3)
    assert start.w == pytest.approx(-2.90e-8, rel=2e-3)


def test_launch_state_edge_cases(burgers):
    start = launch_state(burgers, 1.0, 3.0, 0.0)
    assert (start.v, start.w) == (2.0, 0.0)
    diagonal = launch_state(burgers, 1.0, 0.0, 1e-7)
    assert 2.0 - diagonal.v == pytest.approx(-diagonal.w, rel=1e-7)
    assert 2.0 - diagonal.v == pytest.approx(1e-7 / math.sqrt(2), rel=1e-7)


# ── Classification ───────────────────────────────────────────────────────

def test_classification_flags():
    assert Classification.main().is_monotone
    assert Classification.side().is_monotone
    assert Classification.unresolved("degenerate_node").is_monotone
    assert not Classification.unresolved("escaped").is_monotone
    assert not Classification.non_monotone(2).is_monotone
    assert Classification.non_monotone(0).crossings == 1
    assert Classification.non_monotone(3).to_dict() == {"kind": "non_monotone", "crossings": 3}
    assert Classification.unresolved("step_floor").to_dict() == {"kind": "unresolved", "reason": "step_floor"}


# ── shoot ────────────────────────────────────────────────────────────────

def test_shoot_below_eps0_is_non_monotone():
    result = shoot(reference_problem(0.0), 1.0, 1.0)
    assert result.classification.kind is EntryKind.NON_MONOTONE
    assert result.classification.crossings >= 1
    assert result.entry_slope is None


def test_shoot_above_minimum_enters_main():
    result = shoot(reference_problem(0.0), 1.0, 2.5)
    assert result.classification.kind is EntryKind.MONOTONE_MAIN
    assert result.entry_slope is not None


def test_shoot_below_h_at_small_delta_is_non_monotone():
    result = shoot(reference_problem(1.0), 1e-4, 0.9)
    assert result.classification.kind is EntryKind.NON_MONOTONE


def test_shoot_at_eps0_reports_degenerate_node():
    result = shoot(reference_problem(0.0), 1.0, 2.0)
    assert result.classification == Classification.unresolved("degenerate_node")
    assert result.classification.is_monotone
    assert result.entry_slope is not None


def test_shoot_argument_checks(burgers):
    with pytest.raises(ZeroDelta):
        shoot(burgers, 0.0, 1.0)
    with pytest.raises(InvalidConfig):
        shoot(burgers, 1.0, -1.0)


@pytest.mark.parametrize("epsilon, kind", [(1.0, EntryKind.NON_MONOTONE), (2.5, EntryKind.MONOTONE_MAIN)])
def test_classification_is_offset_stable(epsilon, kind):
    problem = reference_problem(0.0)
    for offset in (1e-6, 1e-7, 1e-8):
        assert shoot(problem, 1.0, epsilon, offset=offset).classification.kind is kind


def test_monotone_set_is_an_upward_ray():
    problem = reference_problem(1.0)
    for eps in (2.0, 2.2, 4.0):
        assert shoot(problem, 0.05, eps).classification.is_monotone


def test_orbits_are_ordered_in_epsilon():
    problem = reference_problem(0.0)
    grid = np.linspace(0.1, 1.9, 37)
    low = shoot(problem, 1.0, 2.5).orbit.w_of_v(grid)
    high = shoot(problem, 1.0, 3.5).orbit.w_of_v(grid)
    assert np.all(high >= low - 1e-9)


# ── eps_min ──────────────────────────────────────────────────────────────

@pytest.mark.parametrize("delta", [0.1, 1.0, 10.0])
def test_eps_min_recovers_linear_threshold(delta):
    result = eps_min(reference_problem(0.0), delta, tol=1e-6)
    assert result.eps_min == pytest.approx(2.0 * math.sqrt(delta), rel=1e-3)
    assert result.linear
    assert result.bracket[0] < result.eps_min <= result.bracket[1]


def test_eps_min_large_delta_is_linearly_determined():
    problem = reference_problem(1.0)
    result = eps_min(problem, 50.0, tol=1e-6)
    assert abs(result.eps_min - eps0(problem, 50.0)) <= 1e-3 * eps0(problem, 50.0)


def test_eps_min_switches_entry_direction():
    problem = reference_problem(1.0)
    tol = 1e-6
    result = eps_min(problem, 0.05, tol=tol)
    assert not result.linear
    assert result.entry_at_min.kind is EntryKind.MONOTONE_SIDE
    assert result.bracket[1] - result.bracket[0] <= tol * max(1.0, result.eps_min)
    assert result.eps_min >= eps0(problem, 0.05) - tol
    above = shoot(problem, 0.05, result.eps_min + 10 * tol)
    assert above.classification.kind is EntryKind.MONOTONE_MAIN


def test_eps_min_argument_checks(burgers):
    with pytest.raises(ZeroDelta):
        eps_min(burgers, 0.0)
    with pytest.raises(InvalidConfig):
        eps_min(burgers, 1.0, tol=0.0)


# ── Sweeps ───────────────────────────────────────────────────────────────

def _point(delta: float, value: float) -> CurvePoint:
    return CurvePoint(delta, value, 0.0, Classification.side(), 10)


def test_curve_minima_reports_every_local_minimum():
    points = [_point(d, e) for d, e in [(1, 3.0), (2, 2.0), (3, 2.5), (4, 1.0), (5, 1.5), (6, math.nan)]]
    assert [p.delta for p in curve_minima(points)] == [2, 4]
    assert curve_minima(points[:2]) == []


def test_curve_to_csv_layout():
    points = [_point(0.5, 0.8), CurvePoint(1.0, math.nan, 2.0, Classification.unresolved("bracket_failure"), 0)]
    lines = curve_to_csv(points).splitlines()
    assert lines == [
        "delta,eps_min,eps0,entry,iterations",
        "0.5,0.8,0.0,monotone_side,10",
        "1.0,nan,2.0,unresolved,0",
    ]


def test_boundary_curve_is_worker_count_independent():
    problem = reference_problem(0.0)
    grid = [0.1, 1.0, 10.0]
    serial = boundary_curve(problem, grid, tol=1e-6, workers=1)
    parallel = boundary_curve(problem, grid, tol=1e-6, workers=2)
    assert curve_to_csv(serial) == curve_to_csv(parallel)
    for point in serial:
        assert point.eps_min == pytest.approx(point.eps0, rel=1e-3)


def test_boundary_curve_warm_start_matches_cold():
    problem = reference_problem(0.0)
    grid = [0.5, 2.0]
    cold = boundary_curve(problem, grid, tol=1e-6, workers=1)
    warm = boundary_curve(problem, grid, tol=1e-6, warm_start=True)
    assert [p.eps_min for p in cold] == pytest.approx([p.eps_min for p in warm], rel=1e-5)


def test_boundary_curve_rejects_unsorted_grid(burgers):
    with pytest.raises(InvalidConfig):
        boundary_curve(burgers, [1.0, 0.5], workers=1)
    with pytest.raises(InvalidConfig):
        boundary_curve(burgers, [0.0, 0.5], workers=1)


def test_boundary_curve_records_bracket_failures(burgers, monkeypatch):
    def fail(*args, **kwargs):
        raise BracketFailure("no monotone shot")

    monkeypatch.setattr("rosenau.shooting.eps_min", fail)
    (point,) = boundary_curve(burgers, [0.3], workers=1)
    assert math.isnan(point.eps_min)
    assert point.entry == Classification.unresolved("bracket_failure")
    assert point.eps0 == pytest.approx(eps0(burgers, 0.3))


# ── Long sweeps ──────────────────────────────────────────────────────────

@pytest.mark.slow
def test_small_delta_approaches_h():
    problem = reference_problem(1.0)
    result = eps_min(problem, 1e-3, tol=1e-4)
    assert result.eps_min == pytest.approx(h_closed_form(problem), rel=0.03)


@pytest.mark.slow
def test_half_alpha_small_delta_window():
    result = eps_min(reference_problem(0.5), 1e-3, tol=1e-4)
    assert 0.375 <= result.eps_min <= 0.42


@pytest.mark.slow
def test_alpha_one_curve_dips_below_h():
    problem = reference_problem(1.0)
    points = boundary_curve(problem, np.logspace(-3, math.log10(5.0), 30), tol=1e-4)
    values = [p.eps_min for p in points]
    assert all(math.isfinite(v) for v in values)
    assert 0.75 <= min(values) <= 0.85
    assert curve_minima(points)


@pytest.mark.slow
def test_alpha_quarter_curve_increases():
    problem = reference_problem(0.25)
    points = boundary_curve(problem, np.logspace(-3, 1, 12), tol=1e-5)
    values = [p.eps_min for p in points]
    assert all(b > a for a, b in zip(values, values[1:]))
    # below 1/2 the boundary goes to zero with delta
    assert values[0] < eps0(problem, 0.1)


@pytest.mark.slow
def test_half_alpha_curve_is_nondecreasing():
    tol = 1e-5
    points = boundary_curve(reference_problem(0.5), np.logspace(-4, 1, 20), tol=tol)
    values = [p.eps_min for p in points]
    assert all(b >= a - 2 * tol for a, b in zip(values, values[1:]))
    assert min(values) >= 0.375 - tol
    assert values[0] == pytest.approx(0.375, rel=0.05)


@pytest.mark.slow
def test_eps_min_increases_with_alpha():
    tol = 1e-5
    values = [eps_min(reference_problem(a), 0.05, tol=tol).eps_min for a in (0.25, 0.5, 0.75, 1.0)]
    assert all(b >= a - 2 * tol for a, b in zip(values, values[1:]))


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5])
@pytest.mark.parametrize("delta", [0.01, 0.1])
def test_eps_min_respects_c_alpha_bound(alpha, delta):
    problem = reference_problem(alpha)
    tol = 1e-5
    bound = bounds_report(problem, alpha, delta).c_alpha_bound
    assert eps_min(problem, delta, tol=tol).eps_min >= bound - tol


@pytest.mark.slow
def test_minimality_exchange_bound():
    problem = reference_problem(1.0)
    report = bounds_report(problem, 1.0)
    grid = np.logspace(math.log10(0.05), math.log10(2.0), 16)
    points = boundary_curve(problem, grid, tol=1e-5)
    linear = [p.delta for p in points if abs(p.eps_min - p.eps0) <= 1e-5 * max(1.0, p.eps0)]
    assert linear
    assert report.delta_alpha_lower <= min(linear)
    for p in points:
        assert p.eps_min >= report.mu_alpha - 1e-5
