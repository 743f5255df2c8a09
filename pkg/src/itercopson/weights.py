"""Closed-form weights on (0, inf): evaluation, integration, dual tails.

A weight is a finite sum of terms

    coef * t**power * |ln t|**log_power * exp(exp_rate * t)

each restricted to a support interval [a, b] within [0, inf].  The family
covers every weight used by the condition evaluators (powers, exponentials,
power-log branches, indicator rectangles) and is closed under the dual
transform v -> v**(1-p') on single-term stretches, which is what makes
sigma-tail integrals mostly exact.

Conventions in force throughout: 0*inf = 0, 0/0 = 0, a**0 = 1 for every
a in [0, inf] (so a vanishing weight has an infinite dual density).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import quadrature
from .errors import InputError, ToleranceNotMet

_INF = math.inf


def _is_nonneg_int(x: float) -> bool:
    return x >= 0.0 and float(x).is_integer()


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class WeightTerm:
    """One factor-product term with an interval support."""

    coef: float
    power: float = 0.0
    log_power: float = 0.0
    exp_rate: float = 0.0
    support: tuple[float, float] = (0.0, _INF)

    def __post_init__(self):
        if not (self.coef >= 0.0):
            raise InputError(f"coef must be nonnegative, got {self.coef}")
        a, b = self.support
        if not (0.0 <= a < b <= _INF):
            raise InputError(f"support must satisfy 0 <= a < b <= inf, got {self.support}")

    def value(self, t: float) -> float:
        if t <= 0.0:
            raise InputError(f"weights are defined on (0, inf); got t={t}")
        a, b = self.support
        if t < a or t > b or self.coef == 0.0:
            return 0.0
        ln = abs(math.log(t))
        if ln == 0.0:
            logfac = 1.0 if self.log_power == 0.0 else (0.0 if self.log_power > 0.0 else _INF)
        else:
            logfac = ln ** self.log_power
        try:
            out = self.coef * t ** self.power * logfac * math.exp(self.exp_rate * t)
        except OverflowError:
            return _INF
        return out

    def values(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        a, b = self.support
        out = np.zeros_like(ts)
        mask = (ts >= a) & (ts <= b)
        if self.coef == 0.0 or not mask.any():
            return out
        t = ts[mask]
        with np.errstate(all="ignore"):
            ln = np.abs(np.log(t))
            if self.log_power == 0.0:
                logfac = np.ones_like(t)
            else:
                logfac = ln ** self.log_power
                at_one = ln == 0.0
                logfac[at_one] = 0.0 if self.log_power > 0.0 else _INF
            vals = self.coef * t ** self.power * logfac * np.exp(self.exp_rate * t)
        vals[np.isnan(vals)] = _INF  # overflow products of inf*finite
        out[mask] = vals
        return out

    def scaled(self, factor: float) -> "WeightTerm":
        return WeightTerm(self.coef * factor, self.power, self.log_power,
                          self.exp_rate, self.support)

    def to_json(self) -> dict:
        a, b = self.support
        return {"coef": self.coef, "power": self.power, "log_power": self.log_power,
                "exp_rate": self.exp_rate, "support": [a, "inf" if b == _INF else b]}

    @classmethod
    def from_json(cls, obj: dict) -> "WeightTerm":
        a, b = obj.get("support", [0.0, "inf"])
        b = _INF if b in ("inf", None) else float(b)
        return cls(float(obj["coef"]), float(obj.get("power", 0.0)),
                   float(obj.get("log_power", 0.0)), float(obj.get("exp_rate", 0.0)),
                   (float(a), b))


# -- convergence tests (dominant-exponent criteria) -------------------------


def _converges_at_zero(power: float, log_power: float) -> bool:
    return power > -1.0 or (power == -1.0 and log_power < -1.0)


def _converges_at_inf(power: float, log_power: float, exp_rate: float) -> bool:
    if exp_rate != 0.0:
        return exp_rate < 0.0
    return power < -1.0 or (power == -1.0 and log_power < -1.0)


def _log_blowup_divergent(log_power: float) -> bool:
    # integral of |ln t|**lam across t=1 diverges iff lam <= -1
    return log_power <= -1.0


# -- closed-form antiderivatives --------------------------------------------


def _power_anti(c: float, alpha: float, t):
    """Antiderivative of c*t**alpha, vector-safe; endpoints must be pre-checked."""
    if alpha == -1.0:
        return c * np.log(t)
    with np.errstate(all="ignore"):
        return c * np.asarray(t, dtype=float) ** (alpha + 1.0) / (alpha + 1.0)


def _exp_anti(c: float, gamma: float, t):
    with np.errstate(all="ignore"):
        out = c * np.exp(gamma * np.asarray(t, dtype=float)) / gamma
    return out


def _powlog_anti_below(c: float, alpha: float, n: int, t):
    """Antiderivative of c*t**alpha*(-ln t)**n on (0, 1], alpha != -1."""
    t = np.asarray(t, dtype=float)
    L = -np.log(t)
    acc = np.zeros_like(t)
    cj = 1.0 / (alpha + 1.0)
    for j in range(n + 1):
        acc = acc + cj * L ** (n - j)
        cj = cj * (n - j) / (alpha + 1.0)
    return c * t ** (alpha + 1.0) * acc


def _powlog_anti_above(c: float, alpha: float, n: int, t):
    """Antiderivative of c*t**alpha*(ln t)**n on [1, inf), alpha != -1."""
    t = np.asarray(t, dtype=float)
    L = np.log(t)
    acc = np.zeros_like(t)
    dj = 1.0 / (alpha + 1.0)
    for j in range(n + 1):
        acc = acc + dj * L ** (n - j)
        dj = dj * (-(n - j)) / (alpha + 1.0)
    return c * t ** (alpha + 1.0) * acc


def _powlog_segment(c: float, alpha: float, n: int, lo: float, hi: float) -> float:
    """Exact integral of c*t**alpha*|ln t|**n over [lo, hi] on one side of 1."""
    if hi <= 1.0:
        if alpha == -1.0:
            low = _INF if lo == 0.0 else (-math.log(lo)) ** (n + 1) / (n + 1)
            upp = 0.0 if hi == 1.0 else (-math.log(hi)) ** (n + 1) / (n + 1)
            return c * (low - upp)
        f_hi = float(_powlog_anti_below(1.0, alpha, n, hi))
        f_lo = 0.0 if lo == 0.0 else float(_powlog_anti_below(1.0, alpha, n, lo))
        return c * (f_hi - f_lo)
    if alpha == -1.0:
        upp = _INF if hi == _INF else (math.log(hi)) ** (n + 1) / (n + 1)
        low = 0.0 if lo == 1.0 else (math.log(lo)) ** (n + 1) / (n + 1)
        return c * (upp - low)
    f_hi = 0.0 if hi == _INF else float(_powlog_anti_above(1.0, alpha, n, hi))
    f_lo = float(_powlog_anti_above(1.0, alpha, n, lo))
    return c * (f_hi - f_lo)


def _term_numeric(term: WeightTerm, lo: float, hi: float, rel_tol: float) -> float:
    """Quadrature fallback for one term over [lo, hi] (divergence pre-checked)."""
    pieces = []
    if lo < 1.0 < hi:
        pieces = [(lo, 1.0), (1.0, hi)]
    else:
        pieces = [(lo, hi)]
    total = 0.0
    for a, b in pieces:
        est = quadrature.integrate(lambda t: term.values(t), a, b, rel_tol=rel_tol)
        if not est.converged:
            raise ToleranceNotMet(
                f"quadrature did not converge on term {term} over ({a}, {b})",
                estimate=quadrature.Estimate(total + est.value, est.abs_error, converged=False))
        total += est.value
    return total


def _term_integral(term: WeightTerm, lo: float, hi: float, rel_tol: float = 1e-10) -> float:
    """Integral of one term over [lo, hi] intersected with its support.

    Returns +inf when a dominant-exponent test certifies divergence.
    """
    if term.coef == 0.0:
        return 0.0
    a = max(lo, term.support[0])
    b = min(hi, term.support[1])
    if b <= a:
        return 0.0
    alpha, lam, gamma = term.power, term.log_power, term.exp_rate
    if a == 0.0 and not _converges_at_zero(alpha, lam):
        return _INF
    if b == _INF and not _converges_at_inf(alpha, lam, gamma):
        return _INF
    if lam < 0.0 and _log_blowup_divergent(lam) and a <= 1.0 <= b and (a < 1.0 or b > 1.0):
        return _INF
    if gamma == 0.0 and lam == 0.0:
        if alpha == -1.0:
            if a == 0.0 or b == _INF:
                return _INF
            return term.coef * math.log(b / a)
        hi_v = 0.0 if b == _INF else float(_power_anti(term.coef, alpha, b))
        lo_v = 0.0 if a == 0.0 else float(_power_anti(term.coef, alpha, a))
        return hi_v - lo_v
    if alpha == 0.0 and lam == 0.0:
        hi_v = 0.0 if b == _INF else float(_exp_anti(term.coef, gamma, b))
        lo_v = float(_exp_anti(term.coef, gamma, a))
        return hi_v - lo_v
    if gamma == 0.0 and _is_nonneg_int(lam):
        n = int(lam)
        total = 0.0
        if a < 1.0:
            total += _powlog_segment(term.coef, alpha, n, a, min(b, 1.0))
        if b > 1.0:
            total += _powlog_segment(term.coef, alpha, n, max(a, 1.0), b)
        return total
    return _term_numeric(term, a, b, rel_tol)


def _term_cumulative_vec(term: WeightTerm, ts: np.ndarray) -> np.ndarray:
    """Vectorized integral of one term over (0, t] for an array of t."""
    ts = np.asarray(ts, dtype=float)
    alpha, lam, gamma = term.power, term.log_power, term.exp_rate
    a, b = term.support
    lo = np.full_like(ts, a)
    hi = np.minimum(ts, b)
    live = hi > lo
    out = np.zeros_like(ts)
    if term.coef == 0.0 or not live.any():
        return out
    if a == 0.0 and not _converges_at_zero(alpha, lam):
        out[live] = _INF
        return out
    closed_powlog = gamma == 0.0 and _is_nonneg_int(lam) and lam > 0.0
    if gamma == 0.0 and lam == 0.0 and alpha != -1.0:
        anti = lambda t: _power_anti(term.coef, alpha, t)
        lo_val = 0.0 if a == 0.0 else float(anti(a))
        out[live] = anti(hi[live]) - lo_val
    elif gamma == 0.0 and lam == 0.0:  # alpha == -1, needs a > 0
        out[live] = term.coef * (np.log(hi[live]) - math.log(a))
    elif alpha == 0.0 and lam == 0.0:
        anti = lambda t: _exp_anti(term.coef, gamma, t)
        out[live] = anti(hi[live]) - float(anti(a))
    elif closed_powlog:
        out[live] = np.array([_term_integral(term, 0.0, float(t)) for t in hi[live]])
    else:
        divergent_one = (lam < 0.0 and _log_blowup_divergent(lam) and a < 1.0)
        for i in np.nonzero(live)[0]:
            if divergent_one and hi[i] >= 1.0:
                out[i] = _INF
            else:
                out[i] = _term_integral(term, 0.0, float(hi[i]))
    return out


# ---------------------------------------------------------------------------
# weight expressions


@dataclass(frozen=True)
class WeightExpr:
    """Sum of terms; the empty sum is the zero weight."""

    terms: tuple[WeightTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    # constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c: float, support: tuple[float, float] = (0.0, _INF)) -> "WeightExpr":
        return cls((WeightTerm(c, support=support),))

    @classmethod
    def power(cls, c: float, alpha: float,
              support: tuple[float, float] = (0.0, _INF)) -> "WeightExpr":
        return cls((WeightTerm(c, power=alpha, support=support),))

    @classmethod
    def exponential(cls, c: float, rate: float,
                    support: tuple[float, float] = (0.0, _INF)) -> "WeightExpr":
        return cls((WeightTerm(c, exp_rate=rate, support=support),))

    @classmethod
    def zero(cls) -> "WeightExpr":
        return cls(())

    def scaled(self, factor: float) -> "WeightExpr":
        if factor < 0.0:
            raise InputError("weights are nonnegative; scale factor must be >= 0")
        return WeightExpr(tuple(t.scaled(factor) for t in self.terms))

    # evaluation --------------------------------------------------------
    def value(self, t: float) -> float:
        return sum(term.value(t) for term in self.terms) if self.terms else 0.0

    def values(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.zeros_like(ts)
        for term in self.terms:
            out = out + term.values(ts)
        return out

    def cumulative(self, ts) -> np.ndarray:
        """Vectorized integral over (0, t]."""
        ts = np.asarray(ts, dtype=float)
        out = np.zeros_like(ts)
        for term in self.terms:
            out = out + _term_cumulative_vec(term, ts)
        return out

    @property
    def is_zero(self) -> bool:
        return all(t.coef == 0.0 for t in self.terms)

    def support_hull(self) -> tuple[float, float]:
        live = [t for t in self.terms if t.coef > 0.0]
        if not live:
            return (0.0, 0.0)
        return (min(t.support[0] for t in live), max(t.support[1] for t in live))

    # serialization -----------------------------------------------------
    def to_json(self) -> list:
        return [t.to_json() for t in self.terms]

    @classmethod
    def from_json(cls, obj: Sequence[dict]) -> "WeightExpr":
        return cls(tuple(WeightTerm.from_json(o) for o in obj))


def eval_weight(w: WeightExpr, t: float) -> float:
    """Pointwise value of the weight at t > 0 (extended real)."""
    if t <= 0.0 or math.isnan(t):
        raise InputError(f"eval_weight requires t > 0, got {t}")
    return w.value(t)


def integrate_weight(w: WeightExpr, a: float, b: float, rel_tol: float = 1e-10) -> float:
    """Integral of the weight over [a, b], 0 <= a < b <= inf.

    Exact for pure-power, pure-exponential and integer power-log terms;
    adaptive quadrature otherwise; +inf when a dominant-exponent test
    certifies divergence.
    """
    if not (0.0 <= a < b <= _INF):
        raise InputError(f"need 0 <= a < b <= inf, got ({a}, {b})")
    total = 0.0
    for term in w.terms:
        val = _term_integral(term, a, b, rel_tol=rel_tol)
        if val == _INF:
            return _INF
        total += val
    return total


# ---------------------------------------------------------------------------
# dual weight v**(1-p') and its tails


def dual_exponent(p: float) -> float:
    if p <= 1.0:
        raise InputError(f"dual transform needs p > 1, got p={p}")
    return 1.0 - p / (p - 1.0)  # equals -1/(p-1)


def dual_value(v: WeightExpr, p: float, t: float) -> float:
    """Pointwise v(t)**(1-p'), with 0**(1-p') = +inf."""
    e = dual_exponent(p)
    val = eval_weight(v, t)
    if val == 0.0:
        return _INF
    if val == _INF:
        return 0.0
    return val ** e


def dual_values(v: WeightExpr, p: float, ts) -> np.ndarray:
    e = dual_exponent(p)
    vals = v.values(ts)
    with np.errstate(all="ignore"):
        out = vals ** e
    out[vals == 0.0] = _INF
    out[np.isposinf(vals)] = 0.0
    return out


def _transformed(term: WeightTerm, e: float, lo: float, hi: float) -> WeightTerm:
    return WeightTerm(term.coef ** e, term.power * e, term.log_power * e,
                      term.exp_rate * e, (lo, hi))


class DualTail:
    """Evaluator for integrals of v**(1-p') over subintervals of (0, inf).

    Splits (0, inf) at all support endpoints of v (and at 1 when a log
    factor is live); on single-term stretches the transform is exact, on
    overlap stretches it falls back to fixed-panel quadrature, and zero
    stretches of positive measure contribute +inf.
    """

    _PANELS = 24
    _GLN = 8

    def __init__(self, v: WeightExpr, p: float):
        self.v = v
        self.e = dual_exponent(p)
        pts = {0.0, _INF}
        for term in v.terms:
            if term.coef > 0.0:
                pts.update(term.support)
        if any(t.coef > 0.0 and t.log_power != 0.0 for t in v.terms):
            pts.add(1.0)
        edges = sorted(pts)
        self.stretches = []
        for x0, x1 in zip(edges[:-1], edges[1:]):
            active = tuple(t for t in v.terms
                           if t.coef > 0.0 and t.support[0] <= x0 and t.support[1] >= x1)
            self.stretches.append((x0, x1, active))

    # -- stretch integrals ----------------------------------------------
    def _single_exact(self, term: WeightTerm, lo: float, hi: float) -> float:
        return _term_integral(_transformed(term, self.e, lo, hi), lo, hi)

    def _multi_divergent(self, active, lo: float, hi: float) -> bool:
        e = self.e
        if hi == _INF:
            dom = max(active, key=lambda t: (t.exp_rate, t.power, t.log_power))
            if not _converges_at_inf(dom.power * e, dom.log_power * e, dom.exp_rate * e):
                return True
        if lo == 0.0:
            dom = min(active, key=lambda t: (t.power, -t.log_power))
            if not _converges_at_zero(dom.power * e, dom.log_power * e):
                return True
        # all active terms vanishing at t=1 makes the dual blow up there
        if lo <= 1.0 <= hi and all(t.log_power > 0.0 for t in active):
            lam_min = min(t.log_power for t in active)
            if _log_blowup_divergent(lam_min * e):
                return True
        return False

    def _multi_numeric(self, active, lo: float, hi: float, rel_tol: float = 1e-10) -> float:
        expr = WeightExpr(active)

        def integrand(ts):
            vals = expr.values(ts)
            with np.errstate(all="ignore"):
                out = vals ** self.e
            out[vals == 0.0] = _INF
            out[np.isposinf(vals)] = 0.0
            return out

        pieces = [(lo, 1.0), (1.0, hi)] if lo < 1.0 < hi else [(lo, hi)]
        total = 0.0
        for a, b in pieces:
            est = quadrature.integrate(integrand, a, b, rel_tol=rel_tol)
            if not est.converged:
                raise ToleranceNotMet("dual-tail quadrature did not converge",
                                      estimate=est)
            total += est.value
        return total

    def _stretch_integral(self, x0: float, x1: float, active, lo: float, hi: float) -> float:
        lo = max(lo, x0)
        hi = min(hi, x1)
        if hi <= lo:
            return 0.0
        if not active:
            return _INF  # zero weight: 0**(1-p') = inf on positive measure
        if len(active) == 1:
            return self._single_exact(active[0], lo, hi)
        if self._multi_divergent(active, lo, hi):
            return _INF
        return self._multi_numeric(active, lo, hi)

    def partial(self, a: float, b: float) -> float:
        """Integral of v**(1-p') over [a, b]."""
        if not (0.0 <= a <= b <= _INF):
            raise InputError(f"need 0 <= a <= b <= inf, got ({a}, {b})")
        if a == b:
            return 0.0
        total = 0.0
        for x0, x1, active in self.stretches:
            val = self._stretch_integral(x0, x1, active, a, b)
            if val == _INF:
                return _INF
            total += val
        return total

    def __call__(self, t: float) -> float:
        return self.partial(t, _INF)

    # -- vectorized partials ---------------------------------------------
    def _single_exact_vec(self, term: WeightTerm, los: np.ndarray, hi: float) -> np.ndarray:
        e = self.e
        tr = _transformed(term, e, float(np.min(los)), hi)
        alpha, lam, gamma = tr.power, tr.log_power, tr.exp_rate
        if gamma == 0.0 and lam == 0.0 and alpha != -1.0:
            hi_v = 0.0 if hi == _INF else float(_power_anti(tr.coef, alpha, hi))
            if hi == _INF and not _converges_at_inf(alpha, lam, gamma):
                return np.full_like(los, _INF)
            return hi_v - _power_anti(tr.coef, alpha, los)
        if alpha == 0.0 and lam == 0.0 and gamma != 0.0:
            if hi == _INF and gamma >= 0.0:
                return np.full_like(los, _INF)
            hi_v = 0.0 if hi == _INF else float(_exp_anti(tr.coef, gamma, hi))
            return hi_v - _exp_anti(tr.coef, gamma, los)
        return np.array([self._single_exact(term, float(lo), hi) for lo in los])

    def _multi_numeric_vec(self, active, los: np.ndarray, hi: float) -> np.ndarray:
        # fixed-panel Gauss-Legendre on the log axis, one row per query
        expr = WeightExpr(active)
        e = self.e
        hi_x = math.log(hi)
        lo_x = np.log(los)
        k = self._PANELS * self._GLN
        edges = lo_x[:, None] + (hi_x - lo_x)[:, None] * np.linspace(0, 1, self._PANELS + 1)
        xs_ref, ws_ref = np.polynomial.legendre.leggauss(self._GLN)
        half = 0.5 * np.diff(edges, axis=1)            # (Q, P)
        mid = 0.5 * (edges[:, :-1] + edges[:, 1:])
        nodes = mid[:, :, None] + half[:, :, None] * xs_ref  # (Q, P, G)
        wts = half[:, :, None] * ws_ref
        tnodes = np.exp(nodes)
        vals = expr.values(tnodes.ravel()).reshape(tnodes.shape)
        with np.errstate(all="ignore"):
            integ = vals ** e * tnodes
        integ[vals == 0.0] = _INF
        integ[np.isposinf(vals)] = 0.0
        return np.einsum("qpg,qpg->q", integ, wts)

    def partial_vec(self, a_arr, b: float) -> np.ndarray:
        """Vectorized partial(a_i, b) for an increasing-safe array of a_i <= b."""
        a_arr = np.asarray(a_arr, dtype=float)
        out = np.zeros_like(a_arr)
        for x0, x1, active in self.stretches:
            lo = np.clip(a_arr, x0, min(x1, b))
            hi = min(x1, b)
            live = hi > lo
            if not live.any():
                continue
            if not active:
                out[live] = _INF
                continue
            if len(active) == 1:
                vals = self._single_exact_vec(active[0], lo[live], hi)
            elif self._multi_divergent(active, float(np.min(lo[live])), hi):
                vals = np.full(int(live.sum()), _INF)
            else:
                vals = self._multi_numeric_vec(active, lo[live], hi)
            out[live] = out[live] + vals
        return out


def sigma_tail(v: WeightExpr, p: float, t: float, rel_tol: float = 1e-10) -> float:
    """Dual-weight tail integral from t to inf of v(s)**(1-p').

    +inf when the tail diverges, including the case of v vanishing on a
    set of positive measure inside (t, inf).
    """
    if p <= 1.0:
        raise InputError(f"sigma_tail needs p > 1, got p={p}")
    if t < 0.0:
        raise InputError(f"sigma_tail needs t >= 0, got t={t}")
    return DualTail(v, p).partial(t, _INF)
