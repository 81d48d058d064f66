"""Phase-plane integration of the travelling-wave system with event detection."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator

import numpy as np
from scipy.integrate import DOP853, RK45

from .errors import InvalidConfig, NonFiniteState, ZeroDelta
from .models import WaveProblem, f_equation_residual, horner
from .utils import fmt_float

log = logging.getLogger(__name__)

SOLVERS = {"DOP853": DOP853, "RK45": RK45}

ESCAPE_FACTOR = 1e3
EVENT_T_TOL = 1e-12
SUBSAMPLES = 8
NODE_ATOL_FACTOR = 1e-8


# ── Enums ────────────────────────────────────────────────────────────────

class EventKind(Enum):
    CROSSED_V_PLUS = "crossed_v_plus"
    CROSSED_W_ZERO = "crossed_w_zero"
    ENTERED_CAPTURE_BALL = "entered_capture_ball"
    ESCAPED = "escaped"
    STEP_FLOOR = "step_floor"


class StopReason(Enum):
    EVENT = "event"
    T_MAX = "t_max"
    MAX_STEPS = "max_steps"
    EQUILIBRIUM = "equilibrium"


# ── Value objects ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PhaseState:
    v: float
    w: float

    def is_finite(self) -> bool:
        return math.isfinite(self.v) and math.isfinite(self.w)

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.w], dtype=float)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 1_000_000
    t_max: float = 1e5
    r_stop: float = 2e-6
    min_step: float = 1e-13
    method: str = "DOP853"
    max_crossings: int = 1

    @classmethod
    def for_problem(cls, problem: WaveProblem, **overrides) -> IntegratorConfig:
        """Defaults scaled to the problem; keyword overrides win."""
        values = {"r_stop": 1e-6 * problem.width}
        values.update(overrides)
        config = cls(**values)
        config.validate(problem)
        return config

    def validate(self, problem: WaveProblem | None = None) -> None:
        for name in ("rel_tol", "abs_tol", "t_max", "r_stop", "min_step"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidConfig(f"{name} must be positive (got {value})")
        if self.max_steps < 1:
            raise InvalidConfig(f"max_steps must be positive (got {self.max_steps})")
        if self.max_crossings < 1:
            raise InvalidConfig(f"max_crossings must be >= 1 (got {self.max_crossings})")
        if self.method not in SOLVERS:
            raise InvalidConfig(f"unknown method {self.method!r}; expected one of {sorted(SOLVERS)}")
        if problem is not None and not self.r_stop < problem.width / 100.0:
            raise InvalidConfig(
                f"r_stop={self.r_stop} must be below (u_minus - u_plus)/100 = {problem.width / 100.0}"
            )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Event:
    kind: EventKind
    t: float
    state: PhaseState

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "t": self.t, "v": self.state.v, "w": self.state.w}


@dataclass
class Orbit:
    """Sampled trajectory: one row per accepted step plus located events."""

    t: np.ndarray
    v: np.ndarray
    w: np.ndarray
    events: list[Event] = field(default_factory=list)
    stop: StopReason = StopReason.EVENT

    def __len__(self) -> int:
        return len(self.t)

    @property
    def samples(self) -> Iterator[tuple[float, PhaseState]]:
        for t, v, w in zip(self.t, self.v, self.w):
            yield float(t), PhaseState(float(v), float(w))

    @property
    def terminal_event(self) -> Event | None:
        if self.stop is StopReason.EVENT and self.events:
            return self.events[-1]
        return None

    def first(self, kind: EventKind) -> Event | None:
        return next((e for e in self.events if e.kind is kind), None)

    def count(self, kind: EventKind) -> int:
        return sum(1 for e in self.events if e.kind is kind)

    def min_w(self) -> float:
        return float(np.min(self.w))

    def w_of_v(self, grid) -> np.ndarray:
        """Resample the monotone leading part as w(v); NaN outside its v-range."""
        v, w = self.v, self.w
        stop = len(v)
        cut = self.first(EventKind.CROSSED_V_PLUS) or self.first(EventKind.CROSSED_W_ZERO)
        if cut is not None:
            stop = int(np.searchsorted(self.t, cut.t, side="right"))
        dv = np.diff(v[:stop])
        bad = np.nonzero(dv >= 0)[0]
        if len(bad):
            stop = int(bad[0]) + 1
        vs, ws = v[:stop][::-1], w[:stop][::-1]
        return np.interp(np.asarray(grid, dtype=float), vs, ws, left=np.nan, right=np.nan)

    def to_csv(self) -> str:
        lines = ["t,v,w"]
        for t, v, w in zip(self.t, self.v, self.w):
            lines.append(f"{fmt_float(t)},{fmt_float(v)},{fmt_float(w)}")
        for e in self.events:
            lines.append(
                f"# event,{e.kind.value},{fmt_float(e.t)},{fmt_float(e.state.v)},{fmt_float(e.state.w)}"
            )
        lines.append(f"# stop,{self.stop.value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> Orbit:
        rows: list[tuple[float, float, float]] = []
        events: list[Event] = []
        stop = StopReason.EVENT
        for line in text.splitlines():
            line = line.strip()
            if not line or line == "t,v,w":
                continue
            if line.startswith("#"):
                parts = [p.strip() for p in line[1:].split(",")]
                if parts[0] == "event" and len(parts) == 5:
                    events.append(Event(
                        EventKind(parts[1]), float(parts[2]), PhaseState(float(parts[3]), float(parts[4])),
                    ))
                elif parts[0] == "stop" and len(parts) == 2:
                    stop = StopReason(parts[1])
                continue
            t, v, w = (float(x) for x in line.split(","))
            rows.append((t, v, w))
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), events, stop)

    def to_dict(self) -> dict:
        return {
            "samples": len(self),
            "stop": self.stop.value,
            "events": [e.to_dict() for e in self.events],
            "min_w": self.min_w() if len(self) else None,
        }


# ── Right-hand side ──────────────────────────────────────────────────────

def _rhs(problem: WaveProblem, alpha: float, delta: float, epsilon: float, origin: float = 0.0) -> Callable:
    """Right-hand side in the shifted variable z = (v - origin, w)."""
    q = problem.q_coeffs
    shift_plus, shift_minus = origin - problem.u_plus, origin - problem.u_minus
    inv_delta = 1.0 / delta

    def fun(t, z):
        dv, w = z[0], z[1]
        # shift_minus == 0 near the saddle, so v - u₋ is the integrated variable itself
        g = (dv + shift_plus) * (dv + shift_minus) * horner(q, origin + dv)
        if alpha == 0.0:
            damp = epsilon * w
        else:
            damp = epsilon * w / (1.0 + w * w) ** alpha
        return np.array([w, inv_delta * (g - damp)])

    return fun


def vector_field(problem: WaveProblem, delta: float, epsilon: float, state: PhaseState) -> tuple[float, float]:
    """(v', w') = (w, (g(v) - εw/(1+w²)^α)/δ) at the problem's α."""
    if delta <= 0:
        raise ZeroDelta(f"delta must be > 0 (got {delta})")
    dv, dw = _rhs(problem, problem.alpha, delta, epsilon)(0.0, (state.v, state.w))
    return float(dv), float(dw)


# ── Integration ──────────────────────────────────────────────────────────

def _locate(phi: Callable[[float], float], lo: float, hi: float, state_tol: float) -> float:
    """Bisect for the first t in (lo, hi] with phi(t) <= 0, given phi(lo) > 0."""
    for _ in range(200):
        t_tol = EVENT_T_TOL * max(1.0, abs(hi))
        if hi - lo <= t_tol and abs(phi(hi)) <= state_tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return hi


def integrate(
    problem: WaveProblem,
    delta: float,
    epsilon: float,
    start: PhaseState,
    config: IntegratorConfig,
    alpha: float | None = None,
) -> Orbit:
    """Advance from ``start`` until a terminal event, ``t_max`` or ``max_steps``.

    Terminal events are capture by the ball of radius ``r_stop`` around
    (u₊, 0), an upward w = 0 crossing inside the strip v > u₊, escape, a
    step-size floor, and the ``max_crossings``-th downward crossing of
    v = u₊. Events are located by bisection on the dense output.

    The solver works in v measured from the nearer equilibrium, so the
    relative tolerance resolves the launch offset at the saddle and the
    approach to the node alike.
    """
    if delta <= 0:
        raise ZeroDelta(f"delta must be > 0 (got {delta})")
    if not start.is_finite():
        raise NonFiniteState(f"start state {start} is not finite")
    config.validate(problem)
    alpha = problem.alpha if alpha is None else alpha

    fun = _rhs(problem, alpha, delta, epsilon)
    up = problem.u_plus
    tol = config.abs_tol
    escape = ESCAPE_FACTOR * problem.scale

    ts, vs, ws = [0.0], [start.v], [start.w]
    events: list[Event] = []

    def finish(stop: StopReason) -> Orbit:
        log.debug("integration stopped: %s after %d samples (eps=%g, delta=%g)", stop.value, len(ts), epsilon, delta)
        return Orbit(np.array(ts), np.array(vs), np.array(ws), events, stop)

    d0 = fun(0.0, start.as_array())
    if d0[0] == 0.0 and d0[1] == 0.0:
        return finish(StopReason.EQUILIBRIUM)
    if math.hypot(start.v - up, start.w) < config.r_stop:
        events.append(Event(EventKind.ENTERED_CAPTURE_BALL, 0.0, start))
        return finish(StopReason.EVENT)

    # event functions: positive before the event, <= 0 once it has happened
    def f_capture(y):
        return math.hypot(y[0] - up, y[1]) - config.r_stop

    def f_vplus(y):
        return y[0] - up

    def f_wzero(y):
        return -y[1]

    def f_escape(y):
        return escape - max(abs(y[0]), abs(y[1]))

    # located states must also pass the qualifier: overshoot for v = u₊, inside the strip for w = 0
    checks = [
        (EventKind.ENTERED_CAPTURE_BALL, f_capture, None),
        (EventKind.CROSSED_V_PLUS, f_vplus, lambda y: y[1] < -tol),
        (EventKind.CROSSED_W_ZERO, f_wzero, lambda y: y[0] > up + tol),
        (EventKind.ESCAPED, f_escape, None),
    ]

    um = problem.u_minus

    def nearer(v: float) -> float:
        return um if um - v < v - up else up

    def make_solver(origin: float, t0: float, y0: np.ndarray):
        # absolute tolerance well below both the capture radius and the starting offset
        z0 = np.array([y0[0] - origin, y0[1]])
        atol = min(tol, NODE_ATOL_FACTOR * config.r_stop)
        size = float(np.max(np.abs(z0)))
        if size > 0:
            atol = min(atol, config.rel_tol * size)
        return SOLVERS[config.method](
            _rhs(problem, alpha, delta, epsilon, origin), t0, z0, config.t_max,
            rtol=config.rel_tol, atol=atol,
        )

    origin = nearer(start.v)
    solver = make_solver(origin, 0.0, start.as_array())
    crossings = 0
    steps = 0
    while True:
        if steps >= config.max_steps:
            return finish(StopReason.MAX_STEPS)
        shift = np.array([origin, 0.0])
        t_old = solver.t
        y_old = solver.y + shift
        message = solver.step()
        steps += 1

        if solver.status == "failed":
            log.debug("solver failed at t=%g: %s", t_old, message)
            events.append(Event(EventKind.STEP_FLOOR, t_old, PhaseState(float(y_old[0]), float(y_old[1]))))
            return finish(StopReason.EVENT)
        t_new, y_new = solver.t, solver.y + shift
        if not (np.all(np.isfinite(y_new)) and math.isfinite(t_new)):
            raise NonFiniteState(f"non-finite state at t={t_new} (eps={epsilon}, delta={delta})")

        dense_z = solver.dense_output()

        def dense(t: float, dense_z=dense_z, shift=shift) -> np.ndarray:
            return dense_z(t) + shift

        grid = np.linspace(t_old, t_new, SUBSAMPLES + 1)
        states = [y_old] + [dense(t) for t in grid[1:-1]] + [y_new]

        hit = None
        for i in range(1, len(grid)):
            for kind, phi, qualifies in checks:
                if phi(states[i - 1]) > 0 and phi(states[i]) <= 0:
                    t_e = _locate(lambda t: phi(dense(t)), float(grid[i - 1]), float(grid[i]), tol)
                    if qualifies is not None and not qualifies(dense(t_e)):
                        continue
                    if hit is None or t_e < hit[1]:
                        hit = (kind, t_e)
            if hit is not None:
                break

        if hit is not None:
            kind, t_e = hit
            y_e = dense(t_e)
            state = PhaseState(float(y_e[0]), float(y_e[1]))
            ts.append(t_e)
            vs.append(state.v)
            ws.append(state.w)
            events.append(Event(kind, t_e, state))
            if kind is EventKind.CROSSED_V_PLUS:
                crossings += 1
                if crossings < config.max_crossings:
                    if t_new > t_e:
                        ts.append(float(t_new))
                        vs.append(float(y_new[0]))
                        ws.append(float(y_new[1]))
                    continue
            return finish(StopReason.EVENT)

        ts.append(float(t_new))
        vs.append(float(y_new[0]))
        ws.append(float(y_new[1]))

        if solver.status == "finished":
            return finish(StopReason.T_MAX)
        if t_new - t_old < config.min_step:
            events.append(Event(EventKind.STEP_FLOOR, t_new, PhaseState(float(y_new[0]), float(y_new[1]))))
            return finish(StopReason.EVENT)

        # restart centred on the other equilibrium once the orbit is closer to it
        if nearer(float(y_new[0])) != origin:
            origin = nearer(float(y_new[0]))
            solver = make_solver(origin, t_new, y_new)


# ── Diagnostics ──────────────────────────────────────────────────────────

def orbit_residual(problem: WaveProblem, alpha: float, delta: float, epsilon: float, orbit: Orbit) -> float:
    """Max |F-equation residual| along the monotone part, with F' by finite differences in v."""
    v, w = orbit.v, orbit.w
    stop = len(v)
    for i in range(1, len(v)):
        if not (v[i] < v[i - 1] and w[i] < 0):
            stop = i
            break
    margin = 0.05 * problem.width
    v_mono, F = v[:stop], -w[:stop]
    if len(v_mono) < 3:
        return math.nan
    dF = np.gradient(F, v_mono, edge_order=2)
    inside = (v_mono > problem.u_plus + margin) & (v_mono < problem.u_minus - margin)
    inside[0] = inside[-1] = False
    if not inside.any():
        return math.nan
    res = [
        f_equation_residual(problem, alpha, delta, epsilon, float(vv), float(ff), float(df))
        for vv, ff, df in zip(v_mono[inside], F[inside], dF[inside])
    ]
    return float(np.max(np.abs(res)))
