"""δ = 0 and δ → 0 analysis: singular branches, Hadeler-Rothe min-max, the Z₀ profile."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .errors import AlphaBelowHalf, OutOfInterval, RadicandNegative
from .models import WaveProblem, averaged_deficit, response, response_peak, tangency_point
from .utils import fmt_float, refine_max, refine_min

log = logging.getLogger(__name__)

TANGENCY_TOL = 1e-12
ROOT_RESIDUAL = 1e-12
LOG_A_RANGE = (-30.0, 30.0)
PROFILE_POINTS = 2048


# ── Singular branches ────────────────────────────────────────────────────

@dataclass(frozen=True)
class SingularBranches:
    """Roots w <= 0 of ε·w/(1+w²)^α = g(v) at one v.

    For α <= 1/2 the response is monotone and the single root is stored in
    ``w_plus`` with ``w_minus`` left as None. ``residual`` is the largest
    |ε·w/(1+w²)^α - g(v)| over the roots returned.
    """

    v: float
    w_plus: float | None = None
    w_minus: float | None = None
    residual: float = 0.0

    @property
    def exists(self) -> bool:
        return self.w_plus is not None

    @property
    def coincident(self) -> bool:
        return self.w_plus is not None and self.w_plus == self.w_minus

    def to_dict(self) -> dict:
        return {"v": self.v, "w_plus": self.w_plus, "w_minus": self.w_minus, "residual": self.residual}


def _root(fn, a: float, b: float) -> float:
    return float(brentq(fn, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def branch_solve(problem: WaveProblem, alpha: float, epsilon: float, v: float) -> SingularBranches:
    """Both singular roots at ``v``, bracketed on the monotone pieces of the response."""
    if not (problem.u_plus <= v <= problem.u_minus):
        raise OutOfInterval(f"v={v} outside [{problem.u_plus}, {problem.u_minus}]")
    g = problem.g(v)
    if g == 0.0:
        # endpoints: the second root, if any, sits at -inf
        return SingularBranches(v, 0.0, None)
    target = g / epsilon

    def phi(w: float) -> float:
        return response(alpha, w) - target

    if alpha > 0.5:
        peak = response_peak(alpha)
        w_star = tangency_point(alpha)
        gap = target + peak
        if gap < -TANGENCY_TOL * max(1.0, peak):
            return SingularBranches(v)
        if abs(gap) <= TANGENCY_TOL * max(1.0, peak):
            branches = SingularBranches(v, w_star, w_star)
        else:
            w_plus = _root(phi, w_star, 0.0)
            w_minus = None
            b = 2.0 * w_star
            while phi(b) <= 0 and math.isfinite(b) and b > -1e300:
                b *= 2.0
            if phi(b) > 0:
                w_minus = _root(phi, b, w_star)
            branches = SingularBranches(v, w_plus, w_minus)
    else:
        if alpha == 0.5 and target <= -1.0:
            return SingularBranches(v)
        b = min(-1.0, 2.0 * target)
        while phi(b) >= 0:
            b *= 2.0
            if not math.isfinite(b) or b < -1e300:
                return SingularBranches(v)
        branches = SingularBranches(v, _root(phi, b, 0.0))

    residual = max(
        abs(epsilon * response(alpha, w) - g) for w in (branches.w_plus, branches.w_minus) if w is not None
    )
    if residual > ROOT_RESIDUAL:
        log.warning("branch roots at v=%r have residual %.3g above %.0e", v, residual, ROOT_RESIDUAL)
    return dataclasses.replace(branches, residual=residual)


def branch_sweep(problem: WaveProblem, alpha: float, epsilon: float, n: int = 257) -> list[SingularBranches]:
    return [branch_solve(problem, alpha, epsilon, float(v)) for v in np.linspace(problem.u_plus, problem.u_minus, n)]


def branches_to_csv(branches: list[SingularBranches]) -> str:
    lines = ["v,w_plus,w_minus"]
    for b in branches:
        lines.append(f"{fmt_float(b.v)},{fmt_float(b.w_plus)},{fmt_float(b.w_minus)}")
    return "\n".join(lines) + "\n"


# ── Hadeler-Rothe ────────────────────────────────────────────────────────

def hadeler_rothe(problem: WaveProblem, alpha: float) -> tuple[float, float]:
    """inf over A > 0 of sup over v of (1/A)(1 + A²g(v)²)^α; returns (A*, value).

    The inner sup sits at the minimiser of g, so only S enters; the outer
    inf is a scalar minimisation in log A.
    """
    if alpha <= 0.5:
        raise AlphaBelowHalf(f"Hadeler-Rothe reduction needs alpha > 1/2 (got {alpha})")
    s = problem.S

    def log_value(log_a: float) -> float:
        a = math.exp(log_a)
        return -log_a + alpha * math.log1p((a * s) ** 2)

    log_a, best = refine_min(log_value, *LOG_A_RANGE)
    return math.exp(log_a), math.exp(best)


def hr_finite_delta(problem: WaveProblem, alpha: float, delta: float) -> tuple[float, float]:
    """Finite-δ version of the F ≈ -A·g ansatz; an estimate, not a bound.

    inf over A of sup over v of (-δ·A·g'(v) + 1/A)(1 + A²g(v)²)^α.
    """
    up, um = problem.u_plus, problem.u_minus

    def sup_over_v(log_a: float) -> float:
        a = math.exp(log_a)

        def k(v: float) -> float:
            g = problem.g(v)
            return (-delta * a * problem.g_prime(v) + 1.0 / a) * (1.0 + (a * g) ** 2) ** alpha

        return refine_max(k, up, um, n=513)[1]

    log_a, value = refine_min(sup_over_v, -20.0, 20.0, n=129)
    return math.exp(log_a), value


# ── Z₀ profile ───────────────────────────────────────────────────────────

def eps_star(problem: WaveProblem) -> float:
    """max over (u₊, u₋] of |G(v)|/(v - u₊)."""
    return averaged_deficit(problem)[1]


@dataclass
class SingularProfile:
    epsilon: float
    eps_star: float
    v: np.ndarray
    G: np.ndarray
    z0: np.ndarray
    z0_max: float
    v_at_max: float

    def predicted_min_w(self, delta: float) -> float:
        """Leading-order depth of the heteroclinic for small δ."""
        return -self.z0_max / math.sqrt(delta)

    def to_csv(self) -> str:
        lines = ["v,G,Z0"]
        for v, G, z in zip(self.v, self.G, self.z0):
            lines.append(f"{fmt_float(v)},{fmt_float(G)},{fmt_float(z)}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "eps_star": self.eps_star,
            "z0_max": self.z0_max,
            "v_at_max": self.v_at_max,
            "n_grid": len(self.v),
        }


def z0_profile(problem: WaveProblem, epsilon: float | None = None, n_grid: int = PROFILE_POINTS) -> SingularProfile:
    """Z₀(v) = √2·√(G(v) + ε(v - u₊)) on a uniform grid; ε defaults to eps_star."""
    star = eps_star(problem)
    epsilon = star if epsilon is None else float(epsilon)
    if epsilon < star * (1.0 - 1e-12):
        raise RadicandNegative(f"G(v) + eps(v - u_plus) turns negative for eps < {star!r} (got {epsilon!r})")
    up = problem.u_plus

    def radicand(v: float) -> float:
        return problem.G(v) + epsilon * (v - up)

    grid = np.linspace(up, problem.u_minus, n_grid)
    G = np.array([problem.G(float(v)) for v in grid])
    rad = G + epsilon * (grid - up)
    floor = -1e-12 * max(1.0, problem.K)
    if rad.min() < floor:
        i = int(np.argmin(rad))
        raise RadicandNegative(
            f"G(v) + eps(v - u_plus) = {rad[i]:.3g} < 0 at v={grid[i]:.6g}; need eps >= {star!r} (got {epsilon!r})"
        )
    z0 = np.sqrt(2.0 * np.maximum(rad, 0.0))

    # stationary points of the radicand solve g(v) + ε = 0; ties go to the smallest v
    candidates = [refine_max(radicand, up, problem.u_minus)]
    crit = problem.g_poly + Polynomial([epsilon])
    for r in crit.roots():
        if abs(r.imag) <= 1e-9 and up <= r.real <= problem.u_minus:
            candidates.append((float(r.real), radicand(float(r.real))))
    top = max(val for _, val in candidates)
    v_at = min(x for x, val in candidates if val >= top - 1e-14 * max(1.0, abs(top)))

    return SingularProfile(
        epsilon=epsilon,
        eps_star=star,
        v=grid,
        G=G,
        z0=z0,
        z0_max=math.sqrt(2.0 * max(top, 0.0)),
        v_at_max=v_at,
    )
