"""Adaptive quadrature and supremum search on subintervals of (0, inf).

All work happens in the log variable x = ln t, so power-like integrands
become smooth and the endpoints 0 and inf are reached by window extension
instead of special-casing.  Everything is deterministic: fixed node sets,
fixed refinement order, no randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InputError

_INF = math.inf

# Log-axis cap: e^345 ~ 3.2e149 keeps t**k products inside float range.
_X_CAP = 345.0
_CHUNK = 8.0

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (x, w)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class GridSpec:
    """Log-uniform evaluation grid on [t_min, t_max]."""

    t_min: float
    t_max: float
    points_per_decade: int = 24

    def __post_init__(self):
        if not (0.0 < self.t_min < self.t_max < _INF):
            raise InputError(f"need 0 < t_min < t_max < inf, got [{self.t_min}, {self.t_max}]")
        if self.points_per_decade < 1:
            raise InputError("points_per_decade must be a positive integer")

    @property
    def n_nodes(self) -> int:
        decades = math.log10(self.t_max / self.t_min)
        return int(math.ceil(self.points_per_decade * decades)) + 1

    def nodes(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.n_nodes)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.t_min, self.t_max, self.points_per_decade * factor)

    def widened(self, factor: float = 10.0) -> "GridSpec":
        return GridSpec(self.t_min / factor, self.t_max * factor, self.points_per_decade)

    def to_json(self) -> dict:
        return {"t_min": self.t_min, "t_max": self.t_max,
                "points_per_decade": self.points_per_decade}

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpec":
        return cls(float(obj["t_min"]), float(obj["t_max"]), int(obj["points_per_decade"]))


@dataclass(frozen=True)
class Estimate:
    """Result of a quadrature or supremum search."""

    value: float
    abs_error: float = 0.0
    argmax: Optional[float] = None
    converged: bool = True


def _eval_log(f: Callable, x: np.ndarray) -> np.ndarray:
    """Evaluate t*f(t) at t = e^x, tolerating scalar-only integrands."""
    t = np.exp(x)
    with np.errstate(all="ignore"):
        try:
            y = np.asarray(f(t), dtype=float)
            if y.shape != t.shape:
                raise TypeError
        except (TypeError, ValueError):
            y = np.array([float(f(ti)) for ti in t])
    return y * t


def _panel_pair(f: Callable, x0: float, x1: float) -> tuple[float, float, bool]:
    """(coarse GL8, fine GL16, finite?) integrals of f(e^x)e^x over [x0, x1]."""
    half = 0.5 * (x1 - x0)
    mid = 0.5 * (x0 + x1)
    xs8, ws8 = _gl(8)
    xs16, ws16 = _gl(16)
    y8 = _eval_log(f, mid + half * xs8)
    y16 = _eval_log(f, mid + half * xs16)
    ok = bool(np.all(np.isfinite(y8)) and np.all(np.isfinite(y16)))
    if not ok:
        return _INF, _INF, False
    return half * float(ws8 @ y8), half * float(ws16 @ y16), True


def integrate(f: Callable, a: float, b: float, rel_tol: float = 1e-8,
              max_panels: int = 4096) -> Estimate:
    """Integrate a nonnegative f over (a, b), 0 <= a < b <= inf.

    Adaptive panel bisection (worst-panel-first) of the log-substituted
    integrand; improper endpoints handled by chunked window extension.
    Any non-finite sample makes the result +inf.
    """
    if not (0.0 <= a < b):
        raise InputError(f"need 0 <= a < b, got ({a}, {b})")
    if a == b:
        return Estimate(0.0)

    # Seed window in x = ln t.
    if a > 0.0 and b < _INF:
        x_lo, x_hi = math.log(a), math.log(b)
        extend_left = extend_right = False
    elif a > 0.0:
        x_lo = math.log(a)
        x_hi = max(x_lo + 2 * _CHUNK, min(_X_CAP, x_lo + 48.0))
        extend_left, extend_right = False, True
    elif b < _INF:
        x_hi = math.log(b)
        x_lo = min(x_hi - 2 * _CHUNK, max(-_X_CAP, x_hi - 48.0))
        extend_left, extend_right = True, False
    else:
        x_lo, x_hi = -24.0, 24.0
        extend_left = extend_right = True

    width = x_hi - x_lo
    n0 = min(max(8, int(math.ceil(width))), 64)
    edges = np.linspace(x_lo, x_hi, n0 + 1)
    panels = []  # (x0, x1, coarse, fine)
    hit_inf = False
    for i in range(n0):
        c, fine, ok = _panel_pair(f, edges[i], edges[i + 1])
        if not ok:
            hit_inf = True
        panels.append([edges[i], edges[i + 1], c, fine])

    def total() -> float:
        return sum(p[3] for p in panels)

    # Window extension toward improper endpoints.
    floor = 1e-300
    capped = False
    for direction in ("left", "right"):
        if direction == "left" and not extend_left:
            continue
        if direction == "right" and not extend_right:
            continue
        edge = x_lo if direction == "left" else x_hi
        while True:
            nxt = edge - _CHUNK if direction == "left" else edge + _CHUNK
            if abs(nxt) > _X_CAP:
                capped = True
                break
            lo, hi = (nxt, edge) if direction == "left" else (edge, nxt)
            c, fine, ok = _panel_pair(f, lo, hi)
            if not ok:
                hit_inf = True
            panels.append([lo, hi, c, fine])
            edge = nxt
            if ok and abs(fine) <= max(rel_tol * abs(total()) / 16.0, floor):
                break
            if not ok:
                break

    if hit_inf:
        # Isolate the bad spot: refine offending panels a few times; a genuine
        # region of +inf survives and the integral is +inf.
        for _ in range(24):
            bad = [p for p in panels if not math.isfinite(p[3])]
            if not bad:
                break
            if len(panels) > max_panels:
                break
            for p in bad:
                panels.remove(p)
                mid = 0.5 * (p[0] + p[1])
                for lo, hi in ((p[0], mid), (mid, p[1])):
                    c, fine, _ok = _panel_pair(f, lo, hi)
                    panels.append([lo, hi, c, fine])
        if any(not math.isfinite(p[3]) for p in panels):
            return Estimate(_INF, abs_error=_INF, converged=True)

    # Worst-panel-first refinement.
    while len(panels) < max_panels:
        err = sum(abs(p[3] - p[2]) for p in panels)
        tot = total()
        if err <= rel_tol * max(abs(tot), floor):
            return Estimate(tot, abs_error=err, converged=not capped)
        worst = max(panels, key=lambda p: abs(p[3] - p[2]))
        panels.remove(worst)
        mid = 0.5 * (worst[0] + worst[1])
        for lo, hi in ((worst[0], mid), (mid, worst[1])):
            c, fine, ok = _panel_pair(f, lo, hi)
            if not ok:
                return Estimate(_INF, abs_error=_INF, converged=True)
            panels.append([lo, hi, c, fine])

    err = sum(abs(p[3] - p[2]) for p in panels)
    return Estimate(total(), abs_error=err, converged=False)


def _scalar(f: Callable, t: float) -> float:
    return float(np.asarray(f(t)).reshape(-1)[0])


def _golden(f: Callable, x_lo: float, x_hi: float, iters: int = 80) -> tuple[float, float]:
    """Golden-section maximum of f(e^x) on [x_lo, x_hi]; returns (x*, f*)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = x_lo, x_hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = _scalar(f, math.exp(c))
    fd = _scalar(f, math.exp(d))
    for _ in range(iters):
        if b - a < 1e-13 * max(1.0, abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = _scalar(f, math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = _scalar(f, math.exp(d))
    if fc >= fd:
        return c, fc
    return d, fd


def sup_on_interval(f: Callable, a: float, b: float, grid: GridSpec,
                    refine: bool = True) -> Estimate:
    """Supremum of f over (a, b) by grid scan plus golden-section refinement.

    The scan runs on the log-uniform grid clipped to [a, b]; improper
    endpoints fall back to the grid's own window (truncation policy).
    +inf at any node propagates.
    """
    lo = grid.t_min if a <= 0.0 else max(a, 1e-300)
    hi = grid.t_max if b == _INF else b
    lo, hi = min(lo, hi), max(lo, hi)
    if lo == hi:
        v = _scalar(f, lo)
        return Estimate(v, argmax=lo)
    n = max(9, int(math.ceil(grid.points_per_decade * math.log10(hi / lo))) + 1)
    ts = np.geomspace(lo, hi, n)
    with np.errstate(all="ignore"):
        try:
            ys = np.asarray(f(ts), dtype=float)
            if ys.shape != ts.shape:
                raise TypeError
        except (TypeError, ValueError):
            ys = np.array([float(f(t)) for t in ts])
    if np.any(np.isposinf(ys)) or np.any(np.isnan(ys)):
        i = int(np.argmax(~np.isfinite(ys)))
        return Estimate(_INF, argmax=float(ts[i]))
    i = int(np.argmax(ys))
    best_t, best_y = float(ts[i]), float(ys[i])
    if refine:
        x_lo = math.log(ts[max(i - 1, 0)])
        x_hi = math.log(ts[min(i + 1, n - 1)])
        if x_hi > x_lo:
            x_star, y_star = _golden(f, x_lo, x_hi)
            if not math.isfinite(y_star):
                return Estimate(_INF, argmax=math.exp(x_star))
            if y_star > best_y:
                best_t, best_y = math.exp(x_star), y_star
    gap = best_y - max(float(ys[max(i - 1, 0)]), float(ys[min(i + 1, n - 1)]))
    return Estimate(best_y, abs_error=max(gap, 0.0), argmax=best_t)
