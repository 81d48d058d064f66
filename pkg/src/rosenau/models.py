"""Data models and closed forms: flux, wave problem, eigenvalues, thresholds, bounds."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import Polynomial

from .errors import AlphaBelowHalf, BadInterval, NegativeAlpha, NonConvexFlux, OutOfInterval
from .utils import GRID_POINTS, refine_max


CONVEXITY_FLOOR = 1e-12


# ── Polynomial helpers ───────────────────────────────────────────────────

def horner(coeffs: tuple[float, ...], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _deriv(coeffs: tuple[float, ...]) -> tuple[float, ...]:
    if len(coeffs) <= 1:
        return (0.0,)
    return tuple(k * c for k, c in enumerate(coeffs) if k > 0)


def _real_roots_in(poly: Polynomial, lo: float, hi: float) -> list[float]:
    """Real roots of ``poly`` inside [lo, hi] (complex roots with tiny imaginary part kept)."""
    if poly.degree() < 1:
        return []
    out = []
    for r in poly.roots():
        if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real)) and lo <= r.real <= hi:
            out.append(float(r.real))
    return out


def _polish(fn, crit: Polynomial, lo: float, hi: float, x0: float, y0: float) -> tuple[float, float]:
    """Improve a refined maximiser with the exact critical points of a polynomial objective."""
    best_x, best_y = x0, y0
    for r in _real_roots_in(crit, lo, hi):
        y = fn(r)
        if y > best_y:
            best_x, best_y = r, y
    return best_x, best_y


# ── Flux ─────────────────────────────────────────────────────────────────

class FluxKind(Enum):
    BURGERS = "burgers"
    POLYNOMIAL = "poly"


@dataclass(frozen=True)
class FluxSpec:
    """Strictly convex polynomial flux, coefficients in ascending powers."""

    kind: FluxKind = FluxKind.BURGERS
    coefficients: tuple[float, ...] = (0.0, 0.0, 0.5)

    def __post_init__(self) -> None:
        if self.kind is FluxKind.BURGERS:
            coeffs: tuple[float, ...] = (0.0, 0.0, 0.5)
        else:
            coeffs = tuple(float(c) for c in self.coefficients)
            while len(coeffs) > 1 and coeffs[-1] == 0.0:
                coeffs = coeffs[:-1]
        if len(coeffs) < 3:
            raise NonConvexFlux(f"flux polynomial must have degree >= 2 (got {list(coeffs)})")
        if not all(math.isfinite(c) for c in coeffs):
            raise NonConvexFlux("flux coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def burgers(cls) -> FluxSpec:
        return cls(FluxKind.BURGERS)

    @classmethod
    def polynomial(cls, coefficients) -> FluxSpec:
        return cls(FluxKind.POLYNOMIAL, tuple(coefficients))

    @property
    def poly(self) -> Polynomial:
        return Polynomial(self.coefficients)

    def f(self, u: float) -> float:
        return horner(self.coefficients, u)

    def df(self, u: float) -> float:
        return horner(_deriv(self.coefficients), u)

    def d2f(self, u: float) -> float:
        return horner(_deriv(_deriv(self.coefficients)), u)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "coefficients": list(self.coefficients)}

    @classmethod
    def from_dict(cls, d: dict) -> FluxSpec:
        return cls(FluxKind(d.get("kind", "burgers")), tuple(d.get("coefficients", (0.0, 0.0, 0.5))))


# ── WaveProblem ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class WaveProblem:
    """Validated (flux, u₋, u₊, α) with the derived scalars cached.

    Build it with :func:`validate_problem`; the derived fields are not
    checked again here.
    """

    flux: FluxSpec
    u_minus: float
    u_plus: float
    alpha: float
    lam: float                     # Rankine-Hugoniot speed
    S: float                       # max of -g over [u₊, u₋]
    K: float                       # integral of |g| over [u₊, u₋]
    v_bar: float                   # minimiser of g
    q_coeffs: tuple[float, ...]    # g(v) = (v - u₊)(v - u₋) q(v)
    G_coeffs: tuple[float, ...]    # antiderivative of g with G(u₊) = 0

    @property
    def width(self) -> float:
        return self.u_minus - self.u_plus

    @property
    def scale(self) -> float:
        return max(abs(self.u_minus), abs(self.u_plus), 1.0)

    def g(self, v: float) -> float:
        """g without the interval check; zero exactly at both endpoints."""
        return (v - self.u_plus) * (v - self.u_minus) * horner(self.q_coeffs, v)

    def g_prime(self, v: float) -> float:
        return self.flux.df(v) - self.lam

    def G(self, v: float) -> float:
        if v == self.u_plus:
            return 0.0
        return horner(self.G_coeffs, v)

    @property
    def g_poly(self) -> Polynomial:
        roots = Polynomial([-self.u_plus, 1.0]) * Polynomial([-self.u_minus, 1.0])
        return roots * Polynomial(self.q_coeffs)

    @property
    def G_poly(self) -> Polynomial:
        return Polynomial(self.G_coeffs)

    def with_alpha(self, alpha: float) -> WaveProblem:
        if not math.isfinite(alpha) or alpha < 0:
            raise NegativeAlpha(f"alpha must be >= 0 (got {alpha})")
        return dataclasses.replace(self, alpha=float(alpha))

    def to_dict(self) -> dict:
        return {
            "flux": self.flux.to_dict(),
            "u_minus": self.u_minus,
            "u_plus": self.u_plus,
            "alpha": self.alpha,
            "lambda": self.lam,
            "S": self.S,
            "K": self.K,
        }


def _check_convex(flux: FluxSpec, lo: float, hi: float) -> None:
    grid = np.linspace(lo, hi, GRID_POINTS)
    d2 = flux.poly.deriv(2)
    points = list(grid) + _real_roots_in(flux.poly.deriv(3), lo, hi)
    for u in points:
        value = float(d2(u))
        if not value > CONVEXITY_FLOOR:
            raise NonConvexFlux(f"f''({u:.6g}) = {value:.3g} is not positive on [{lo}, {hi}]")


def validate_problem(flux: FluxSpec, u_minus: float, u_plus: float, alpha: float) -> WaveProblem:
    """Check the standing assumptions and precompute λ, S, K."""
    u_minus, u_plus, alpha = float(u_minus), float(u_plus), float(alpha)
    if not (math.isfinite(u_minus) and math.isfinite(u_plus)) or u_minus <= u_plus:
        raise BadInterval(f"need u_minus > u_plus (got u_minus={u_minus}, u_plus={u_plus})")
    if not math.isfinite(alpha) or alpha < 0:
        raise NegativeAlpha(f"alpha must be >= 0 (got {alpha})")
    _check_convex(flux, u_plus, u_minus)

    lam = (flux.f(u_plus) - flux.f(u_minus)) / (u_plus - u_minus)
    g_full = flux.poly - flux.f(u_plus) - lam * Polynomial([-u_plus, 1.0])
    roots = Polynomial([-u_plus, 1.0]) * Polynomial([-u_minus, 1.0])
    q, _ = divmod(g_full, roots)
    q_coeffs = tuple(float(c) for c in np.atleast_1d(q.coef))
    g_poly = roots * Polynomial(q_coeffs)
    G_poly = g_poly.integ(lbnd=u_plus)

    def neg_g(v: float) -> float:
        return -(v - u_plus) * (v - u_minus) * horner(q_coeffs, v)

    v_bar, S = refine_max(neg_g, u_plus, u_minus)
    v_bar, S = _polish(neg_g, g_poly.deriv(), u_plus, u_minus, v_bar, S)
    K = -float(G_poly(u_minus))
    if not (S > 0 and K > 0):
        raise NonConvexFlux(f"-g is not positive inside ({u_plus}, {u_minus}): S={S}, K={K}")

    return WaveProblem(
        flux=flux,
        u_minus=u_minus,
        u_plus=u_plus,
        alpha=alpha,
        lam=lam,
        S=S,
        K=K,
        v_bar=v_bar,
        q_coeffs=q_coeffs,
        G_coeffs=tuple(float(c) for c in G_poly.coef),
    )


def reference_problem(alpha: float = 1.0) -> WaveProblem:
    """Burgers flux on [u₊, u₋] = [0, 2]: λ = 1, g(v) = v(v-2)/2, S = 1/2, K = 2/3."""
    return validate_problem(FluxSpec.burgers(), 2.0, 0.0, alpha)


# ── Pointwise quantities ─────────────────────────────────────────────────

def g_eval(problem: WaveProblem, v: float) -> float:
    """g(v) = f(v) - f(u₊) - λ(v - u₊) on [u₊, u₋]."""
    if not (problem.u_plus <= v <= problem.u_minus):
        raise OutOfInterval(f"v={v} outside [{problem.u_plus}, {problem.u_minus}]")
    return problem.g(v)


def response(alpha: float, s: float) -> float:
    """Diffusion response s / (1 + s²)^α."""
    return s / (1.0 + s * s) ** alpha


def response_peak(alpha: float) -> float:
    """A(α) = max over s >= 0 of s / (1 + s²)^α, finite for α > 1/2."""
    if alpha <= 0.5:
        raise AlphaBelowHalf(f"response is unbounded or not attained for alpha={alpha} <= 1/2")
    return (2.0 * alpha) ** (-alpha) * (2.0 * alpha - 1.0) ** (alpha - 0.5)


def eps0(problem: WaveProblem, delta: float) -> float:
    """Spiral/node threshold at (u₊, 0); independent of α."""
    return 2.0 * math.sqrt(delta) * math.sqrt(-problem.g_prime(problem.u_plus))


@dataclass(frozen=True)
class EigenData:
    chi_plus: float | None
    chi_minus: float | None
    theta_plus: float
    is_node: bool

    @property
    def midpoint(self) -> float | None:
        if not self.is_node:
            return None
        return 0.5 * (self.chi_plus + self.chi_minus)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def eigen_data(problem: WaveProblem, delta: float, epsilon: float) -> EigenData:
    """Eigenvalues at the node (u₊, 0) and the unstable one at the saddle (u₋, 0)."""
    gp = problem.g_prime(problem.u_plus)
    gm = problem.g_prime(problem.u_minus)
    theta = 2.0 * gm / (epsilon + math.sqrt(epsilon * epsilon + 4.0 * delta * gm))

    a = epsilon / delta
    disc = a * a + 4.0 * gp / delta
    if disc < -1e-12 * max(a * a, 4.0 * abs(gp) / delta):
        return EigenData(None, None, theta, False)
    root = math.sqrt(max(disc, 0.0))
    chi_minus = -0.5 * (a + root)
    # product of the roots is -g'(u₊)/δ; avoids cancellation in chi_plus
    chi_plus = (-gp / delta) / chi_minus
    return EigenData(chi_plus, chi_minus, theta, True)


def f_equation_residual(
    problem: WaveProblem, alpha: float, delta: float, epsilon: float,
    v: float, F: float, dF: float,
) -> float:
    """Residual of εF/(1+F²)^α = δFF' - g(v) for a monotone profile F = -v'."""
    return epsilon * response(alpha, F) - (delta * F * dF - problem.g(v))


# ── δ = 0 closed forms ───────────────────────────────────────────────────

def h_closed_form(problem: WaveProblem, alpha: float | None = None) -> float:
    """H(α), the minimal ε with a smooth monotone wave at δ = 0 (α >= 1/2)."""
    alpha = problem.alpha if alpha is None else alpha
    if alpha < 0.5:
        raise AlphaBelowHalf(f"H(alpha) needs alpha >= 1/2 (got {alpha})")
    if alpha == 0.5:
        return problem.S
    # 2^α (α/(2α-1))^α folded into one bounded power
    return (2.0 * alpha / (2.0 * alpha - 1.0)) ** alpha * problem.S * math.sqrt(2.0 * alpha - 1.0)


def tangency_point(alpha: float) -> float:
    """Double root z = -1/√(2α-1) of the tangency system."""
    if alpha <= 0.5:
        raise AlphaBelowHalf(f"tangency needs alpha > 1/2 (got {alpha})")
    return -1.0 / math.sqrt(2.0 * alpha - 1.0)


def averaged_deficit(problem: WaveProblem) -> tuple[float, float]:
    """Maximise (1/(v-u₊)) ∫_{u₊}^{v} |g| over (u₊, u₋]; returns (v*, value)."""
    u_p = problem.u_plus

    def mean_abs_g(v: float) -> float:
        if v <= u_p:
            return 0.0
        return -problem.G(v) / (v - u_p)

    v_star, value = refine_max(mean_abs_g, u_p, problem.u_minus)
    # stationary points solve G(v) - g(v)(v - u₊) = 0
    crit = problem.G_poly - problem.g_poly * Polynomial([-u_p, 1.0])
    lo = u_p + 1e-9 * problem.width
    return _polish(mean_abs_g, crit, lo, problem.u_minus, v_star, value)


def linear_determinacy_certified(problem: WaveProblem, alpha: float, delta: float) -> bool:
    """Sufficient condition for ε_min(α, δ) = ε₀(δ).

    With c = -g'(u₊) and K(v) = (-g'(v)/√c + √c)(1 + g(v)²/(δc))^α, the
    wave at ε₀ is monotone whenever K(v) <= K(u₊) = 2√c on [u₊, u₋].
    """
    c = -problem.g_prime(problem.u_plus)
    rc = math.sqrt(c)

    def K(v: float) -> float:
        g = problem.g(v)
        return (-problem.g_prime(v) / rc + rc) * (1.0 + g * g / (delta * c)) ** alpha

    _, k_max = refine_max(K, problem.u_plus, problem.u_minus)
    return k_max <= 2.0 * rc * (1.0 + 1e-12)


# ── Bounds ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class BoundsReport:
    alpha: float
    eps0: float | None = None
    h_alpha: float | None = None
    c_alpha_bound: float | None = None
    half_alpha_bound: float = 0.0
    a_alpha: float | None = None
    mu_alpha: float | None = None
    delta_alpha_lower: float | None = None
    linear_determinacy: bool | None = None

    def lower_bound(self) -> float:
        """Largest populated quantity that provably bounds ε_min from below."""
        candidates = [0.0]
        if self.eps0 is not None:
            candidates.append(self.eps0)
        if self.alpha <= 0.5 and self.c_alpha_bound is not None:
            candidates.append(self.c_alpha_bound)
        if self.alpha >= 0.5:
            candidates.append(self.half_alpha_bound)
        if self.mu_alpha is not None:
            candidates.append(self.mu_alpha)
        return max(candidates)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lower_bound"] = self.lower_bound()
        return d


def bounds_report(problem: WaveProblem, alpha: float | None = None, delta: float | None = None) -> BoundsReport:
    """Every analytic threshold and bound available at (α, δ)."""
    alpha = problem.alpha if alpha is None else float(alpha)
    if alpha < 0:
        raise NegativeAlpha(f"alpha must be >= 0 (got {alpha})")
    _, half = averaged_deficit(problem)

    c_alpha = None
    if alpha <= 0.5 and delta is not None:
        c_alpha = (
            delta ** (0.5 - alpha) * 2.0 ** (alpha - 0.5)
            * problem.K ** (alpha + 0.5) / problem.width
        )

    a_alpha = mu = delta_lower = None
    if alpha > 0.5:
        a_alpha = response_peak(alpha)
        mu = half / a_alpha
        # ε₀(δ) >= μ(α) is necessary for linear determinacy
        delta_lower = mu * mu / (4.0 * -problem.g_prime(problem.u_plus))

    return BoundsReport(
        alpha=alpha,
        eps0=eps0(problem, delta) if delta is not None else None,
        h_alpha=h_closed_form(problem, alpha) if alpha >= 0.5 else None,
        c_alpha_bound=c_alpha,
        half_alpha_bound=half,
        a_alpha=a_alpha,
        mu_alpha=mu,
        delta_alpha_lower=delta_lower,
        linear_determinacy=(
            linear_determinacy_certified(problem, alpha, delta) if delta else None
        ),
    )
