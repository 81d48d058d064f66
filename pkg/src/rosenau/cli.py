"""Command-line front end: closed forms, shots, ε_min, sweeps, singular limit, min-max oracle."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import RosenauError
from .models import (
    FluxKind,
    FluxSpec,
    WaveProblem,
    bounds_report,
    eps0,
    h_closed_form,
    tangency_point,
    validate_problem,
)
from .ode import IntegratorConfig
from .shooting import boundary_curve, curve_minima, curve_to_csv, eps_min, shoot
from .singular import branch_sweep, branches_to_csv, eps_star, hadeler_rothe, hr_finite_delta, z0_profile
from .utils import default_workers, dumps_json, write_text

log = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [rosenau] %(levelname)s %(message)s"


@dataclass
class RunSpec:
    command: str
    flux: FluxSpec
    u_minus: float = 2.0
    u_plus: float = 0.0
    alpha: float = 1.0
    delta: float | None = None
    epsilon: float | None = None
    tol: float = 1e-6
    delta_min: float | None = None
    delta_max: float | None = None
    count: int = 30
    log_grid: bool = True
    warm_start: bool = False
    max_crossings: int = 1
    n_grid: int = 2048
    branch_epsilon: float | None = None
    workers: int = field(default_factory=default_workers)
    out: Path | None = None
    orbit: Path | None = None
    branches: Path | None = None

    def problem(self) -> WaveProblem:
        return validate_problem(self.flux, self.u_minus, self.u_plus, self.alpha)

    def delta_grid(self) -> np.ndarray:
        if self.log_grid:
            return np.logspace(math.log10(self.delta_min), math.log10(self.delta_max), self.count)
        return np.linspace(self.delta_min, self.delta_max, self.count)


# ── Parsing ──────────────────────────────────────────────────────────────

def _coeffs(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(c) for c in text.split(",") if c.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--flux", choices=[k.value for k in FluxKind], default=FluxKind.BURGERS.value)
    common.add_argument("--coeffs", type=_coeffs, help="ascending polynomial coefficients for --flux poly")
    common.add_argument("--u-minus", type=float, default=2.0)
    common.add_argument("--u-plus", type=float, default=0.0)
    common.add_argument("--alpha", type=float, default=1.0)
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="rosenau", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("closed-form", parents=[common], help="thresholds, closed forms and bounds")
    p.add_argument("--delta", type=float)

    p = sub.add_parser("shoot", parents=[common], help="classify a single shot")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--orbit", type=Path, help="write the orbit CSV here")
    p.add_argument("--max-crossings", type=int, default=1)

    p = sub.add_parser("epsmin", parents=[common], help="bisect for eps_min at one delta")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("curve", parents=[common], help="eps_min over a delta grid")
    p.add_argument("--delta-min", type=float, required=True)
    p.add_argument("--delta-max", type=float, required=True)
    p.add_argument("--count", type=int, default=30)
    p.add_argument("--linear", action="store_true", help="linear instead of log spacing")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--warm-start", action="store_true")

    p = sub.add_parser("singular", parents=[common], help="Z0 profile, eps_star and singular branches")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-grid", type=int, default=2048)
    p.add_argument("--out", type=Path)
    p.add_argument("--branches", type=Path)
    p.add_argument("--branch-epsilon", type=float)

    p = sub.add_parser("hr", parents=[common], help="Hadeler-Rothe min-max value")
    p.add_argument("--delta", type=float)

    return parser


def _check(parser: argparse.ArgumentParser, ok: bool, flag: str, message: str) -> None:
    if not ok:
        parser.error(f"argument {flag}: {message}")


def spec_from_args(parser: argparse.ArgumentParser, ns: argparse.Namespace) -> RunSpec:
    """Range-check every numeric flag; failures exit 2 before any work or output."""
    finite = math.isfinite
    _check(parser, finite(ns.u_minus), "--u-minus", "must be finite")
    _check(parser, finite(ns.u_plus), "--u-plus", "must be finite")
    _check(parser, ns.u_minus > ns.u_plus, "--u-minus", "must exceed --u-plus")
    _check(parser, finite(ns.alpha) and ns.alpha >= 0, "--alpha", "must be >= 0")
    if ns.flux == FluxKind.POLYNOMIAL.value:
        _check(parser, bool(ns.coeffs), "--coeffs", "required with --flux poly")
        flux = FluxSpec.polynomial(ns.coeffs)
    else:
        _check(parser, ns.coeffs is None, "--coeffs", "only valid with --flux poly")
        flux = FluxSpec.burgers()

    spec = RunSpec(command=ns.command, flux=flux, u_minus=ns.u_minus, u_plus=ns.u_plus, alpha=ns.alpha)
    delta = getattr(ns, "delta", None)
    if delta is not None:
        if ns.command == "closed-form":
            _check(parser, finite(delta) and delta >= 0, "--delta", "must be >= 0")
        else:
            _check(parser, finite(delta) and delta > 0, "--delta", "must be > 0")
        spec.delta = delta

    if ns.command == "shoot":
        _check(parser, finite(ns.epsilon) and ns.epsilon >= 0, "--epsilon", "must be >= 0")
        _check(parser, ns.max_crossings >= 1, "--max-crossings", "must be >= 1")
        spec.epsilon, spec.orbit, spec.max_crossings = ns.epsilon, ns.orbit, ns.max_crossings
    elif ns.command in ("epsmin", "curve"):
        _check(parser, finite(ns.tol) and ns.tol > 0, "--tol", "must be > 0")
        spec.tol = ns.tol
    if ns.command == "curve":
        _check(parser, finite(ns.delta_min) and ns.delta_min > 0, "--delta-min", "must be > 0")
        _check(parser, finite(ns.delta_max) and ns.delta_max > ns.delta_min, "--delta-max", "must exceed --delta-min")
        _check(parser, ns.count >= 2, "--count", "must be >= 2")
        _check(parser, ns.workers is None or ns.workers >= 1, "--workers", "must be >= 1")
        spec.delta_min, spec.delta_max, spec.count = ns.delta_min, ns.delta_max, ns.count
        spec.log_grid, spec.warm_start, spec.out = not ns.linear, ns.warm_start, ns.out
        if ns.workers is not None:
            spec.workers = ns.workers
    elif ns.command == "singular":
        _check(parser, ns.epsilon is None or (finite(ns.epsilon) and ns.epsilon > 0), "--epsilon", "must be > 0")
        _check(parser, ns.n_grid >= 2, "--n-grid", "must be >= 2")
        _check(parser, ns.branches is None or ns.branch_epsilon is not None, "--branch-epsilon", "required with --branches")
        _check(
            parser, ns.branch_epsilon is None or (finite(ns.branch_epsilon) and ns.branch_epsilon > 0),
            "--branch-epsilon", "must be > 0",
        )
        spec.epsilon, spec.n_grid, spec.out = ns.epsilon, ns.n_grid, ns.out
        spec.branches, spec.branch_epsilon = ns.branches, ns.branch_epsilon
    elif ns.command == "hr":
        _check(parser, ns.alpha > 0.5, "--alpha", "must be > 1/2 for hr")
    return spec


# ── Commands ─────────────────────────────────────────────────────────────

def _closed_form(spec: RunSpec, problem: WaveProblem) -> dict:
    report = bounds_report(problem, spec.alpha, spec.delta)
    data = {
        "problem": problem.to_dict(),
        "lambda": problem.lam,
        "S": problem.S,
        "K": problem.K,
        "eps_star": eps_star(problem),
        "eps0": eps0(problem, spec.delta) if spec.delta is not None else None,
        "h_alpha": h_closed_form(problem) if spec.alpha >= 0.5 else None,
        "tangency": tangency_point(spec.alpha) if spec.alpha > 0.5 else None,
        "linear_determinacy": report.linear_determinacy,
        "bounds": report.to_dict(),
    }
    return data


def _shoot(spec: RunSpec, problem: WaveProblem) -> dict:
    config = IntegratorConfig.for_problem(problem, max_crossings=spec.max_crossings)
    result = shoot(problem, spec.delta, spec.epsilon, config)
    if spec.orbit is not None:
        write_text(spec.orbit, result.orbit.to_csv())
        log.info("orbit written to %s", spec.orbit)
    data = result.to_dict()
    data["alpha"] = spec.alpha
    return data


def _epsmin(spec: RunSpec, problem: WaveProblem) -> dict:
    result = eps_min(problem, spec.delta, spec.tol)
    data = result.to_dict()
    data.update({"alpha": spec.alpha, "delta": spec.delta, "eps0": eps0(problem, spec.delta)})
    return data


def _curve(spec: RunSpec, problem: WaveProblem) -> dict:
    points = boundary_curve(problem, spec.delta_grid(), spec.tol, spec.workers, spec.warm_start)
    write_text(spec.out, curve_to_csv(points))
    return {
        "alpha": spec.alpha,
        "out": str(spec.out),
        "points": len(points),
        "failures": sum(1 for p in points if not math.isfinite(p.eps_min)),
        "minima": [p.to_dict() for p in curve_minima(points)],
    }


def _singular(spec: RunSpec, problem: WaveProblem) -> dict:
    profile = z0_profile(problem, spec.epsilon, spec.n_grid)
    data = profile.to_dict()
    if spec.out is not None:
        write_text(spec.out, profile.to_csv())
    if spec.branches is not None:
        sweep = branch_sweep(problem, spec.alpha, spec.branch_epsilon)
        write_text(spec.branches, branches_to_csv(sweep))
        data["branches_missing"] = sum(1 for b in sweep if not b.exists)
    return data


def _hr(spec: RunSpec, problem: WaveProblem) -> dict:
    a_star, value = hadeler_rothe(problem, spec.alpha)
    data = {"alpha": spec.alpha, "a_star": a_star, "value": value, "h_alpha": h_closed_form(problem)}
    if spec.delta is not None:
        a_d, value_d = hr_finite_delta(problem, spec.alpha, spec.delta)
        data["finite_delta"] = {"delta": spec.delta, "a_star": a_d, "value": value_d}
    return data


HANDLERS = {
    "closed-form": _closed_form,
    "shoot": _shoot,
    "epsmin": _epsmin,
    "curve": _curve,
    "singular": _singular,
    "hr": _hr,
}


def run(spec: RunSpec) -> int:
    """Dispatch one subcommand and print its JSON result on stdout."""
    problem = spec.problem()
    data = HANDLERS[spec.command](spec, problem)
    sys.stdout.write(dumps_json(data))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    level = logging.DEBUG if ns.verbose else logging.WARNING if ns.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    try:
        return run(spec_from_args(parser, ns))
    except RosenauError as e:
        print(f"rosenau: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
