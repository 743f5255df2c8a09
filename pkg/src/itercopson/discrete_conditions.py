"""Discrete conditions on a discretizing sequence, and the two sequence
lemmas (discrete Hoelder with its saturating sequence, geometric-growth
summation bounds) as tested utilities.

The four discrete functionals are per-cell sups/integrals of
phi(t) * (int_t^{t_k} v^(1-p'))^(1/p') raised to regime-specific powers:

    D1 = sup_k  sup_{t in cell}  phi (dual mass)^(1/p')          regime a
    D2 = (sum_k sup_{t in cell} [phi (dual)^(1/p')]^r)^(1/r)     regime b
    D3 = sup_k  (cell integral)^((p-m)/(pm))                     regime c
    D4 = (sum_k (cell integral)^(q(p-m)/(m(p-q))))^(1/r)         regime d

with cell integral = int_cell phi^(mp/(p-m)) (dual)^(p(m-1)/(p-m)) v^(1-p').
Sums over a truncated window are lower bounds; the window completeness
flags ride along in the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core, quadrature, weights
from .conditions import _mul, _pow, classify_regime
from .core import Problem
from .discretizer import DiscretizingSequence
from .errors import InputError

_INF = math.inf

_ALLOWED_REGIMES = {"D1": {"a", "c", "d"}, "D2": {"b"}, "D3": {"c"}, "D4": {"d"}}


@dataclass
class DiscreteConditionValue:
    name: str
    value: float
    contributions: tuple[float, ...] = ()
    complete_low: bool = False
    complete_high: bool = False
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        enc = lambda x: "inf" if x == _INF else x
        return {"name": self.name, "value": enc(self.value),
                "contributions": [enc(c) for c in self.contributions],
                "complete_low": self.complete_low,
                "complete_high": self.complete_high,
                "diagnostics": self.diagnostics}


def _cells(problem: Problem, seq: DiscretizingSequence):
    """(lo, hi, hi_effective) per window cell; the sentinel cell is sampled
    up to a finite horizon but integrated to infinity."""
    out = []
    for j in range(seq.n_steps):
        lo, hi, _ = seq.step(j)
        hi_eff = hi if hi < _INF else max(problem.grid.t_max, 4.0 * lo)
        out.append((lo, hi, hi_eff))
    return out


def _cell_sup(ctx: core.ProblemContext, sigma: weights.DualTail,
              lo: float, hi: float, hi_eff: float, phi_expo: float,
              dual_expo: float) -> float:
    """sup over the cell of phi(t)^phi_expo * (int_t^hi v^(1-p'))^dual_expo."""
    ts = np.geomspace(lo, hi_eff, 33)
    vals = _mul(_pow(ctx.phi(ts), phi_expo), _pow(sigma.partial_vec(ts, hi), dual_expo))
    if np.any(np.isposinf(vals)):
        return _INF
    i = int(np.argmax(vals))
    best = float(vals[i])
    x_lo = math.log(ts[max(i - 1, 0)])
    x_hi = math.log(ts[min(i + 1, len(ts) - 1)])
    if x_hi > x_lo:
        f = lambda t: float(_mul(_pow(ctx.phi(np.array([t])), phi_expo),
                                 _pow(np.array([sigma.partial(t, hi)]), dual_expo))[0])
        from .quadrature import _golden
        _, refined = _golden(f, x_lo, x_hi, iters=48)
        best = max(best, refined)
    return best


def _cell_integral(problem: Problem, ctx: core.ProblemContext,
                   sigma: weights.DualTail, lo: float, hi: float) -> float:
    par = problem.params
    p, m = par.p, par.m
    e_phi = m * p / (p - m)
    e_dual = p * (m - 1.0) / (p - m)

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return _mul(_pow(ctx.phi(ts), e_phi),
                    _pow(sigma.partial_vec(ts, hi), e_dual),
                    weights.dual_values(problem.v, p, ts))

    est = quadrature.integrate(f, lo, hi, rel_tol=1e-7)
    return est.value


def eval_D(problem: Problem, seq: DiscretizingSequence, name: str) -> DiscreteConditionValue:
    """Evaluate one discrete condition on the sequence window."""
    par = problem.params
    regime = classify_regime(par)
    if name not in _ALLOWED_REGIMES:
        raise InputError(f"unknown discrete condition {name!r}")
    if regime.label not in _ALLOWED_REGIMES[name]:
        raise InputError(f"{name} does not apply in regime {regime.label!r}")
    ctx = core.context(problem)
    sigma = ctx.sigma
    cells = _cells(problem, seq)
    pp = par.p_prime

    if name == "D1":
        contribs = tuple(_cell_sup(ctx, sigma, lo, hi, hi_eff, 1.0, 1.0 / pp)
                         for lo, hi, hi_eff in cells)
        value = max(contribs) if contribs else 0.0
    elif name == "D2":
        r = par.r
        contribs = tuple(_cell_sup(ctx, sigma, lo, hi, hi_eff, r, r / pp)
                         for lo, hi, hi_eff in cells)
        value = sum(contribs) ** (1.0 / r) if all(map(math.isfinite, contribs)) else _INF
    elif name == "D3":
        expo = (par.p - par.m) / (par.m * par.p)
        contribs = tuple(_cell_integral(problem, ctx, sigma, lo, hi)
                         for lo, hi, _ in cells)
        value = max(float(_pow(np.array([c]), expo)[0]) for c in contribs) \
            if contribs else 0.0
    else:  # D4
        r = par.r
        expo = par.q * (par.p - par.m) / (par.m * (par.p - par.q))
        contribs = tuple(_cell_integral(problem, ctx, sigma, lo, hi)
                         for lo, hi, _ in cells)
        powered = [float(_pow(np.array([c]), expo)[0]) for c in contribs]
        value = sum(powered) ** (1.0 / r) if all(map(math.isfinite, powered)) else _INF
    return DiscreteConditionValue(name, value, contribs, seq.complete_low,
                                  seq.complete_high)


# ---------------------------------------------------------------------------
# sequence lemmas


@dataclass
class HolderReport:
    lhs: float
    rhs: float
    holds: bool
    saturator: tuple[float, ...]
    saturator_value: float
    saturator_target: float

    @property
    def saturator_gap(self) -> float:
        scale = max(self.saturator_target, self.saturator_value, 1e-300)
        return abs(self.saturator_value - self.saturator_target) / scale


def check_discrete_holder(a_seq, b_seq, p: float, q: float) -> HolderReport:
    """Discrete Hoelder inequality (sum a^q b)^(1/q) <= (sum a^p)^(1/p)
    (sum b^(p/(p-q)))^((p-q)/(pq)) plus its saturating sequence.

    The saturator c_k ~ b_k^(1/(p-q)) normalized to sum c^p = 1 turns the
    b-factor into (sum c^q b)^(1/q) exactly.
    """
    if not (0.0 < q < p < _INF):
        raise InputError(f"need 0 < q < p < inf, got q={q}, p={p}")
    a = np.asarray(a_seq, dtype=float)
    b = np.asarray(b_seq, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError("sequences must be 1-d and of equal length")
    if np.any(a < 0.0) or np.any(b < 0.0):
        raise InputError("sequences must be nonnegative")
    lhs = float(np.sum(a ** q * b)) ** (1.0 / q)
    b_sum = float(np.sum(b ** (p / (p - q))))
    rhs = float(np.sum(a ** p)) ** (1.0 / p) * b_sum ** ((p - q) / (p * q))
    target = b_sum ** ((p - q) / (p * q))
    if b_sum > 0.0:
        c = b ** (1.0 / (p - q)) / b_sum ** (1.0 / p)
    else:
        c = np.zeros_like(b)
        c[0] = 1.0
    sat = float(np.sum(c ** q * b)) ** (1.0 / q)
    holds = lhs <= rhs * (1.0 + 1e-12) + 1e-300
    return HolderReport(lhs, rhs, holds, tuple(c), sat, target)


@dataclass
class GeomGrowthReport:
    ratios: dict
    c_emp: float
    d_verified: float


def check_geom_growth(b_seq, c_seq, alpha: float, D: float) -> GeomGrowthReport:
    """Geometric-growth summation bounds: with b_{k+1} >= D b_k the tail-sum,
    tail-sup and sup forms are each controlled by the diagonal form; the
    report carries the three empirical ratios and their maximum."""
    if not (D > 1.0):
        raise InputError(f"growth factor must exceed 1, got D={D}")
    if not (alpha > 0.0):
        raise InputError(f"alpha must be positive, got {alpha}")
    b = np.asarray(b_seq, dtype=float)
    c = np.asarray(c_seq, dtype=float)
    if b.shape != c.shape or b.ndim != 1:
        raise InputError("sequences must be 1-d and of equal length")
    if np.any(b < 0.0) or np.any(c < 0.0):
        raise InputError("sequences must be nonnegative")
    growth = b[1:] / np.maximum(b[:-1], 1e-300)
    bad = np.flatnonzero(growth < D * (1.0 - 1e-12))
    if bad.size:
        raise InputError(f"growth hypothesis b_k+1 >= D b_k fails at index {bad[0]}")
    tail_sum = np.cumsum(c[::-1])[::-1]
    tail_sup = np.maximum.accumulate(c[::-1])[::-1]
    diag = float(np.sum(c ** alpha * b))
    l_sum = float(np.sum(tail_sum ** alpha * b))
    l_sup = float(np.sum(tail_sup ** alpha * b))
    l_max = float(np.max(tail_sum ** alpha * b))
    r_max = float(np.max(c ** alpha * b))

    def ratio(lhs, rhs):
        if lhs == 0.0:
            return 0.0
        return lhs / rhs if rhs > 0.0 else _INF

    ratios = {"tail_sum": ratio(l_sum, diag), "tail_sup": ratio(l_sup, diag),
              "sup": ratio(l_max, r_max)}
    c_emp = max(ratios.values())
    d_min = float(np.min(growth)) if growth.size else _INF
    return GeomGrowthReport(ratios, c_emp, d_min)
