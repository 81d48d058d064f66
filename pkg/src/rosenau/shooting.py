"""Shooting from the saddle, entry classification, bisection for ε_min and δ-sweeps."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import BracketFailure, InvalidConfig, NonFiniteState, ZeroDelta
from .models import WaveProblem, bounds_report, eigen_data, eps0, h_closed_form
from .ode import EventKind, IntegratorConfig, Orbit, PhaseState, integrate
from .utils import default_workers, fmt_float

log = logging.getLogger(__name__)

LAUNCH_OFFSET = 1e-7
DEGENERATE_TOL = 1e-5
MAX_DOUBLINGS = 20


# ── Classification ───────────────────────────────────────────────────────

class EntryKind(Enum):
    MONOTONE_MAIN = "monotone_main"
    MONOTONE_SIDE = "monotone_side"
    NON_MONOTONE = "non_monotone"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class Classification:
    kind: EntryKind
    crossings: int = 0
    reason: str = ""

    @classmethod
    def main(cls) -> Classification:
        return cls(EntryKind.MONOTONE_MAIN)

    @classmethod
    def side(cls) -> Classification:
        return cls(EntryKind.MONOTONE_SIDE)

    @classmethod
    def non_monotone(cls, crossings: int) -> Classification:
        return cls(EntryKind.NON_MONOTONE, crossings=max(1, crossings))

    @classmethod
    def unresolved(cls, reason: str) -> Classification:
        return cls(EntryKind.UNRESOLVED, reason=reason)

    @property
    def is_monotone(self) -> bool:
        """Monotone wave found; a degenerate-node capture counts, its entry direction does not."""
        if self.kind in (EntryKind.MONOTONE_MAIN, EntryKind.MONOTONE_SIDE):
            return True
        return self.kind is EntryKind.UNRESOLVED and self.reason == "degenerate_node"

    @property
    def label(self) -> str:
        return self.kind.value

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind.value}
        if self.kind is EntryKind.NON_MONOTONE:
            d["crossings"] = self.crossings
        if self.kind is EntryKind.UNRESOLVED:
            d["reason"] = self.reason
        return d


@dataclass
class ShootResult:
    classification: Classification
    orbit: Orbit
    entry_slope: float | None = None
    epsilon: float = 0.0
    delta: float = 0.0

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "classification": self.classification.label,
            "detail": self.classification.to_dict(),
            "entry_slope": self.entry_slope,
            "orbit": self.orbit.to_dict(),
        }


@dataclass(frozen=True)
class BisectionResult:
    eps_min: float
    bracket: tuple[float, float]
    iterations: int
    entry_at_min: Classification
    unresolved: int = 0
    linear: bool = False
    shots: int = 0
    lower_bound: float = 0.0

    def to_dict(self) -> dict:
        return {
            "eps_min": self.eps_min,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "entry_at_min": self.entry_at_min.label,
            "entry_detail": self.entry_at_min.to_dict(),
            "unresolved": self.unresolved,
            "linear": self.linear,
            "shots": self.shots,
            "lower_bound": self.lower_bound,
        }


@dataclass(frozen=True)
class CurvePoint:
    delta: float
    eps_min: float
    eps0: float
    entry: Classification = field(default_factory=lambda: Classification.unresolved("not_computed"))
    iterations: int = 0
    unresolved: int = 0
    linear: bool = False

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "eps_min": self.eps_min,
            "eps0": self.eps0,
            "entry": self.entry.label,
            "iterations": self.iterations,
            "unresolved": self.unresolved,
            "linear": self.linear,
        }


# ── Single shot ──────────────────────────────────────────────────────────

def launch_state(problem: WaveProblem, delta: float, epsilon: float, offset: float) -> PhaseState:
    """Step ``offset`` from (u₋, 0) along the unstable eigenvector into v < u₋, w < 0."""
    theta = eigen_data(problem, delta, epsilon).theta_plus
    norm = math.hypot(1.0, theta)
    return PhaseState(problem.u_minus - offset / norm, -offset * theta / norm)


def entry_slope(problem: WaveProblem, orbit: Orbit, r_stop: float) -> float | None:
    """Mean of w/(v - u₊) on the approach annulus plus the capture state."""
    dist = np.abs(orbit.v - problem.u_plus)
    mask = (dist >= r_stop) & (dist <= 10.0 * r_stop)
    slopes = list(orbit.w[mask] / (orbit.v[mask] - problem.u_plus))
    capture = orbit.first(EventKind.ENTERED_CAPTURE_BALL)
    if capture is not None and capture.state.v != problem.u_plus:
        slopes.append(capture.state.w / (capture.state.v - problem.u_plus))
    if not slopes:
        return None
    return float(np.mean(slopes))


def classify(
    problem: WaveProblem,
    delta: float,
    epsilon: float,
    orbit: Orbit,
    config: IntegratorConfig,
    degenerate_tol: float = DEGENERATE_TOL,
) -> tuple[Classification, float | None]:
    crossings = orbit.count(EventKind.CROSSED_V_PLUS)
    if crossings:
        return Classification.non_monotone(crossings), None
    if orbit.first(EventKind.CROSSED_W_ZERO) is not None:
        return Classification.non_monotone(1), None

    terminal = orbit.terminal_event
    if terminal is None:
        return Classification.unresolved(orbit.stop.value), None
    if terminal.kind is not EventKind.ENTERED_CAPTURE_BALL:
        return Classification.unresolved(terminal.kind.value), None
    if orbit.w.max() > 10.0 * config.abs_tol:
        return Classification.non_monotone(1), None

    eig = eigen_data(problem, delta, epsilon)
    if not eig.is_node:
        return Classification.unresolved("spiral_capture"), None
    slope = entry_slope(problem, orbit, config.r_stop)
    threshold = eps0(problem, delta)
    if abs(epsilon - threshold) <= degenerate_tol * max(1.0, threshold):
        return Classification.unresolved("degenerate_node"), slope
    if slope is None:
        return Classification.unresolved("no_entry_samples"), None
    if slope < eig.midpoint:
        return Classification.side(), slope
    return Classification.main(), slope


def shoot(
    problem: WaveProblem,
    delta: float,
    epsilon: float,
    config: IntegratorConfig | None = None,
    offset: float | None = None,
    degenerate_tol: float = DEGENERATE_TOL,
) -> ShootResult:
    """Integrate the unstable manifold of the saddle and classify the result."""
    if delta <= 0:
        raise ZeroDelta(f"delta must be > 0 (got {delta})")
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise InvalidConfig(f"epsilon must be >= 0 (got {epsilon})")
    config = config or IntegratorConfig.for_problem(problem)
    offset = LAUNCH_OFFSET * problem.width if offset is None else offset

    start = launch_state(problem, delta, epsilon, offset)
    try:
        orbit = integrate(problem, delta, epsilon, start, config)
    except NonFiniteState as e:
        log.warning("shot at eps=%r delta=%r left the finite range: %s", epsilon, delta, e)
        orbit = Orbit(np.array([0.0]), np.array([start.v]), np.array([start.w]))
        return ShootResult(Classification.unresolved("non_finite"), orbit, None, epsilon, delta)

    classification, slope = classify(problem, delta, epsilon, orbit, config, degenerate_tol)
    log.debug("shot eps=%r delta=%r -> %s", epsilon, delta, classification.label)
    return ShootResult(classification, orbit, slope if classification.is_monotone else None, epsilon, delta)


# ── Bisection ────────────────────────────────────────────────────────────

def eps_min(
    problem: WaveProblem,
    delta: float,
    tol: float = 1e-6,
    config: IntegratorConfig | None = None,
    hint: float | None = None,
) -> BisectionResult:
    """Bisect the monotone/non-monotone indicator in ε.

    The monotone set is an upward ray, so the answer is the upper end of
    the final bracket. Unresolved shots count as non-monotone.
    """
    if delta <= 0:
        raise ZeroDelta(f"delta must be > 0 (got {delta})")
    if not (math.isfinite(tol) and tol > 0):
        raise InvalidConfig(f"tol must be positive (got {tol})")
    config = config or IntegratorConfig.for_problem(problem)
    lower = bounds_report(problem, problem.alpha, delta).lower_bound()
    counts = {"shots": 0, "unresolved": 0}

    def trial(eps: float) -> ShootResult:
        result = shoot(problem, delta, eps, config, degenerate_tol=10.0 * tol)
        counts["shots"] += 1
        c = result.classification
        if c.kind is EntryKind.UNRESOLVED and not c.is_monotone:
            counts["unresolved"] += 1
            log.warning("unresolved shot at eps=%r delta=%r (%s); treated as non-monotone", eps, delta, c.reason)
        return result

    first = trial(lower)
    if first.classification.is_monotone:
        linear = lower <= eps0(problem, delta) * (1.0 + 1e-12)
        log.info("alpha=%g delta=%g: monotone at the lower bound, eps_min=%r", problem.alpha, delta, lower)
        return BisectionResult(
            eps_min=lower,
            bracket=(lower - tol * max(1.0, lower), lower),
            iterations=0,
            entry_at_min=first.classification,
            unresolved=counts["unresolved"],
            linear=linear,
            shots=counts["shots"],
            lower_bound=lower,
        )

    lo = lower
    hi = max(lower, 1.0)
    if problem.alpha > 0.5:
        hi = max(hi, h_closed_form(problem))
    if hint is not None and hint > lo:
        hi = hint
    if hi <= lo:
        hi = 2.0 * lo
    ceiling = hi * 2.0 ** MAX_DOUBLINGS
    best = trial(hi)
    while not best.classification.is_monotone:
        lo = hi
        hi *= 2.0
        if hi > ceiling:
            raise BracketFailure(
                f"no monotone shot up to eps={lo!r} at alpha={problem.alpha}, delta={delta}"
            )
        best = trial(hi)

    iterations = 0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        result = trial(mid)
        iterations += 1
        if result.classification.is_monotone:
            hi, best = mid, result
        else:
            lo = mid

    log.info(
        "alpha=%g delta=%g: eps_min=%r (%d iterations, entry %s)",
        problem.alpha, delta, hi, iterations, best.classification.label,
    )
    return BisectionResult(
        eps_min=hi,
        bracket=(lo, hi),
        iterations=iterations,
        entry_at_min=best.classification,
        unresolved=counts["unresolved"],
        linear=False,
        shots=counts["shots"],
        lower_bound=lower,
    )


# ── Sweeps ───────────────────────────────────────────────────────────────

def _curve_point(
    problem: WaveProblem,
    delta: float,
    tol: float,
    config: IntegratorConfig | None,
    hint: float | None = None,
) -> CurvePoint:
    threshold = eps0(problem, delta)
    try:
        r = eps_min(problem, delta, tol, config, hint)
    except BracketFailure as e:
        log.warning("delta=%g: %s", delta, e)
        return CurvePoint(delta, math.nan, threshold, Classification.unresolved("bracket_failure"), 0)
    return CurvePoint(delta, r.eps_min, threshold, r.entry_at_min, r.iterations, r.unresolved, r.linear)


def _curve_point_job(args: tuple) -> CurvePoint:
    return _curve_point(*args)


def boundary_curve(
    problem: WaveProblem,
    delta_grid,
    tol: float = 1e-6,
    workers: int | None = None,
    warm_start: bool = False,
    config: IntegratorConfig | None = None,
) -> list[CurvePoint]:
    """ε_min at every δ of a sorted positive grid, in grid order.

    Points are independent unless ``warm_start`` is set, in which case they
    run serially and each bracket starts from the previous ε_min.
    """
    grid = [float(d) for d in delta_grid]
    if not grid:
        return []
    if any(not (math.isfinite(d) and d > 0) for d in grid):
        raise InvalidConfig("delta grid must be positive and finite")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidConfig("delta grid must be strictly increasing")

    workers = workers or default_workers()
    if warm_start:
        points: list[CurvePoint] = []
        hint = None
        for d in grid:
            point = _curve_point(problem, d, tol, config, hint)
            points.append(point)
            hint = point.eps_min if math.isfinite(point.eps_min) else None
            log.info("delta=%g eps_min=%r", d, point.eps_min)
        return points

    jobs = [(problem, d, tol, config) for d in grid]
    if workers == 1 or len(grid) == 1:
        points = [_curve_point_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(grid))) as pool:
            points = list(pool.map(_curve_point_job, jobs))
    for p in points:
        log.info("delta=%g eps_min=%r", p.delta, p.eps_min)
    return points


def curve_minima(points: list[CurvePoint]) -> list[CurvePoint]:
    """Interior local minima of eps_min along a sweep; every one found is returned."""
    out = []
    for i in range(1, len(points) - 1):
        a, b, c = points[i - 1].eps_min, points[i].eps_min, points[i + 1].eps_min
        if not all(math.isfinite(x) for x in (a, b, c)):
            continue
        if b <= a and b <= c and (b < a or b < c):
            out.append(points[i])
    return out


def curve_to_csv(points: list[CurvePoint]) -> str:
    lines = ["delta,eps_min,eps0,entry,iterations"]
    for p in points:
        eps = fmt_float(p.eps_min) if math.isfinite(p.eps_min) else "nan"
        lines.append(f"{fmt_float(p.delta)},{eps},{fmt_float(p.eps0)},{p.entry.label},{p.iterations}")
    return "\n".join(lines) + "\n"
