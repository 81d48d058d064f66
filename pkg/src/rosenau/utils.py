"""Utility helpers: atomic file I/O, environment configuration, scalar refinement."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar


WORKERS_ENV = "ROSENAU_WORKERS"

GRID_POINTS = 4096


# ── Configuration ────────────────────────────────────────────────────────

def default_workers() -> int:
    """Return the sweep worker count: $ROSENAU_WORKERS, else the CPU count."""
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            n = 0
        if n > 0:
            return n
    return os.cpu_count() or 1


# ── File I/O ─────────────────────────────────────────────────────────────

def write_text(path: Path, text: str) -> None:
    """Write text atomically: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dumps_json(data: dict | list) -> str:
    """Serialise with stable key order; floats keep their shortest round-trip repr."""
    return json.dumps(_json_safe(data), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _json_safe(obj):
    # NaN/inf are not valid JSON; emit null instead.
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def fmt_float(x: float | None) -> str:
    """CSV cell for a float: repr, empty when absent."""
    if x is None:
        return ""
    return repr(float(x))


# ── Scalar refinement ────────────────────────────────────────────────────

def refine_max(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    n: int = GRID_POINTS,
    xatol: float = 1e-14,
) -> tuple[float, float]:
    """Maximise a smooth scalar function on [lo, hi].

    Evaluates on an ``n``-point grid, then refines the best grid point with
    bounded Brent (golden-section with parabolic steps) on its two
    neighbouring cells. Returns ``(x_max, f(x_max))``.
    """
    xs = np.linspace(lo, hi, n)
    ys = np.array([fn(float(x)) for x in xs])
    i = int(np.nanargmax(ys))
    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, n - 1)])
    best_x, best_y = float(xs[i]), float(ys[i])
    if b > a:
        res = minimize_scalar(
            lambda x: -fn(x), bounds=(a, b), method="bounded",
            options={"xatol": xatol, "maxiter": 500},
        )
        if res.success and -res.fun >= best_y:
            best_x, best_y = float(res.x), float(-res.fun)
    return best_x, best_y


def refine_min(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    n: int = 257,
    xatol: float = 1e-12,
) -> tuple[float, float]:
    """Minimise a unimodal scalar function on [lo, hi]; returns ``(x_min, f(x_min))``."""
    x, y = refine_max(lambda t: -fn(t), lo, hi, n=n, xatol=xatol)
    return x, -y
