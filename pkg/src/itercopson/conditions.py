"""Continuous weight conditions characterizing the optimal constant.

Eight condition functionals for p > 1 (A1..A6 plus the starred variants of
A4 and A5) and five for p = 1 (At1..At5), each an explicit sup/integral
expression in (u, v, w) whose finiteness is equivalent to the boundedness
of the iterated operator in its exponent regime:

    regime a  (p <= m, p <= q):  A1
    regime b  (p <= m, q <  p):  A2 + A3
    regime c  (m <  p, p <= q):  A1 + A4   (A4* as cross-check)
    regime d  (m <  p, q <  p):  A3 + A5   (A5* as cross-check)

and the tilde analogues at p = 1.  A6 is the simpler regime-(d) alternative
that is two-sided only for m <= q.

Outer sups and integrals run on the problem window [t_min, t_max] (the
standing truncation policy; sensitivity is probed by re-running on a wider
window).  Inner sigma tails are honest extended reals: a divergent dual
tail is +inf, never a truncated number.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import core, quadrature, weights
from .core import Problem
from .errors import InputError
from .quadrature import Estimate

_INF = math.inf

A_NAMES = ("A1", "A2", "A3", "A4", "A4*", "A5", "A5*", "A6")
AT_NAMES = ("At1", "At2", "At3", "At4", "At5")
CONDITION_NAMES = A_NAMES + AT_NAMES


@dataclass(frozen=True)
class Regime:
    label: str
    conditions: tuple[str, ...]

    @property
    def p_is_one(self) -> bool:
        return self.label.endswith("t")


@dataclass
class ConditionValue:
    name: str
    value: float
    argmax: Optional[float] = None
    breakdown: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"name": self.name,
               "value": "inf" if self.value == _INF else self.value}
        if self.argmax is not None:
            out["argmax"] = self.argmax
        if self.breakdown:
            out["breakdown"] = {k: ("inf" if v == _INF else v)
                                for k, v in self.breakdown.items()}
        if self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out


def classify_regime(params: core.Parameters) -> Regime:
    p, q, m = params.p, params.q, params.m
    if p == 1.0:
        if m >= 1.0 and q >= 1.0:
            return Regime("at", ("At1",))
        if m >= 1.0:
            return Regime("bt", ("At2", "At3"))
        if q >= 1.0:
            return Regime("ct", ("At1", "At4"))
        return Regime("dt", ("At3", "At5"))
    if p <= m and q >= p:
        return Regime("a", ("A1",))
    if p <= m:
        return Regime("b", ("A2", "A3"))
    if q >= p:
        return Regime("c", ("A1", "A4", "A4*"))
    return Regime("d", ("A3", "A5", "A5*"))


def _require(cond: bool, message: str):
    if not cond:
        raise InputError(message)


def _pow(base: np.ndarray, expo: float) -> np.ndarray:
    """base**expo under the conventions 0**0 = inf**0 = 1, 0**neg = inf."""
    base = np.asarray(base, dtype=float)
    with np.errstate(all="ignore"):
        out = base ** expo
    if expo < 0.0:
        out[base == 0.0] = _INF
        out[np.isposinf(base)] = 0.0
    return out


def _mul(*factors) -> np.ndarray:
    """Product under the convention 0 * inf = 0."""
    factors = [np.asarray(f, dtype=float) for f in factors]
    zero = np.zeros(np.broadcast_shapes(*(f.shape for f in factors)), dtype=bool)
    for f in factors:
        zero |= np.broadcast_to(f == 0.0, zero.shape)
    with np.errstate(all="ignore"):
        out = factors[0]
        for f in factors[1:]:
            out = out * f
    out = np.where(zero, 0.0, out)
    out[np.isnan(out)] = _INF  # leftover inf-inf style artifacts are conservative
    return out


class ConditionEvaluator:
    """Cached per-problem arrays backing the condition formulas."""

    def __init__(self, problem: Problem, rel_tol: float = 1e-7):
        self.problem = problem
        self.params = problem.params
        self.ctx = core.context(problem)
        self.rel_tol = rel_tol
        g = problem.grid
        self.t_min, self.t_max = g.t_min, g.t_max
        n = max(2 * g.n_nodes, 129)
        self.zs = np.geomspace(g.t_min, g.t_max, n)

    @functools.cached_property
    def U0z(self) -> np.ndarray:
        return self.ctx.U0(self.zs)

    @functools.cached_property
    def sigz(self) -> np.ndarray:
        if self.params.p == 1.0:
            raise InputError("sigma tail undefined at p = 1")
        return self.ctx.sigma.partial_vec(self.zs, _INF)

    @functools.cached_property
    def phiz(self) -> np.ndarray:
        return self.ctx.phi(self.zs)

    @functools.cached_property
    def vz(self) -> np.ndarray:
        return self.problem.v.values(self.zs)

    @functools.cached_property
    def v_tail_inf(self) -> np.ndarray:
        """Suffix infimum of v over the window plus growth probes beyond it."""
        probes = self.t_max * 10.0 ** np.arange(1, 7)
        beyond = float(np.min(self.problem.v.values(probes)))
        vals = np.minimum(self.vz, _INF)
        out = np.minimum.accumulate(np.concatenate((vals[::-1], [beyond]))[::-1])
        return out[:-1]

    def sigma_vec(self, ts: np.ndarray) -> np.ndarray:
        return self.ctx.sigma.partial_vec(np.asarray(ts, dtype=float), _INF)

    # -- inner sup over z in (t, inf), window-truncated ------------------
    def _inner_sup(self, ts: np.ndarray, u_expo: float, zpow: np.ndarray) -> np.ndarray:
        """sup_{z > t} (int_t^z u)**u_expo * zpow(z) on the z grid."""
        ts = np.asarray(ts, dtype=float)
        u0t = self.ctx.U0(ts)
        if not np.all(np.isfinite(u0t)):
            return np.array([self._inner_sup_scalar(float(t), u_expo, zpow)
                             for t in ts])
        umat = np.maximum(self.U0z[None, :] - u0t[:, None], 0.0)
        vals = _mul(_pow(umat, u_expo), zpow[None, :])
        vals = np.where(self.zs[None, :] > ts[:, None], vals, 0.0)
        return np.max(vals, axis=1)

    def _inner_sup_scalar(self, t: float, u_expo: float, zpow: np.ndarray) -> float:
        mask = self.zs > t
        if not mask.any():
            return 0.0
        out = 0.0
        for z, zp in zip(self.zs[mask], zpow[mask]):
            uval = float(self.ctx.u_partial(np.array([t]), float(z))[0])
            out = max(out, float(_mul(_pow(np.array([uval]), u_expo),
                                      np.array([zp]))[0]))
        return out

    # -- inner integrals of the A4/A5 family ------------------------------
    @functools.cached_property
    def _j_grid(self):
        g = self.problem.grid
        n_seg = max(4 * g.n_nodes, 257)
        edges = np.log(np.geomspace(self.t_min, self.t_max, n_seg + 1))
        xs, ws = np.polynomial.legendre.leggauss(4)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes_x = mid[:, None] + half[:, None] * xs          # (S, 4)
        wts = half[:, None] * ws
        s_nodes = np.exp(nodes_x)
        return {"edges_t": np.exp(edges), "s": s_nodes, "w": wts * s_nodes}

    @functools.cached_property
    def _j_tables(self):
        jg = self._j_grid
        s_flat = jg["s"].ravel()
        p = self.params.p
        uval = self.problem.u.values(s_flat).reshape(jg["s"].shape)
        u0s = self.ctx.U0(s_flat).reshape(jg["s"].shape)
        out = {"u": uval, "u0": u0s, "sig": None, "dual": None}
        if p > 1.0:
            out["sig"] = self.ctx.sigma.partial_vec(s_flat, _INF).reshape(jg["s"].shape)
            out["dual"] = weights.dual_values(self.problem.v, p,
                                              s_flat).reshape(jg["s"].shape)
        return out

    def _j_integral(self, ts: np.ndarray, starred: bool) -> np.ndarray:
        """J(t) = int_t^tmax (int_t^s u)^e1 * sig(s)^e2 * tail(s) ds.

        Plain: e1 = p/(p-m), e2 = p(m-1)/(p-m), tail = v^(1-p').
        Starred: e1 = m/(p-m), e2 = m(p-1)/(p-m), tail = u.
        The sliver between t and the first full segment vanishes like
        (s-t)^(1+e1) and is dropped.
        """
        p, m = self.params.p, self.params.m
        _require(m < p, "A4/A5 family needs m < p")
        if starred:
            e1, e2 = m / (p - m), m * (p - 1.0) / (p - m)
        else:
            e1, e2 = p / (p - m), p * (m - 1.0) / (p - m)
        jg, jt = self._j_grid, self._j_tables
        ts = np.asarray(ts, dtype=float)
        u0t = self.ctx.U0(ts)
        if not np.all(np.isfinite(u0t)):
            raise InputError("A4/A5 family requires u integrable at 0 "
                             "for the vectorized path")
        umat = np.maximum(jt["u0"][None, :, :] - u0t[:, None, None], 0.0)
        tail = jt["u"] if starred else jt["dual"]
        integrand = _mul(_pow(umat, e1), _pow(jt["sig"], e2)[None, :, :],
                         tail[None, :, :], jg["w"][None, :, :])
        live = jg["s"][None, :, :] > ts[:, None, None]
        integrand = np.where(live, integrand, 0.0)
        if np.isinf(integrand).any():
            out = np.where(np.isinf(integrand).any(axis=(1, 2)), _INF,
                           np.einsum("qsk->q", np.where(np.isinf(integrand), 0.0,
                                                        integrand)))
            return out
        return np.einsum("qsk->q", integrand)

    # -- outer layers ------------------------------------------------------
    def outer_integral(self, f, power: float) -> Estimate:
        """(int_0^tmax f)^power with +inf short-circuit on positive measure."""
        probe = f(self.zs)
        bad = ~np.isfinite(probe)
        if bad.any():
            runs = np.flatnonzero(bad[:-1] & bad[1:])
            if runs.size:
                return Estimate(_INF, argmax=float(self.zs[runs[0]]))
        est = quadrature.integrate(f, 0.0, self.t_max, rel_tol=self.rel_tol)
        if est.value == _INF or est.value == 0.0:
            return Estimate(est.value, est.abs_error, converged=est.converged)
        return Estimate(est.value ** power, abs_error=est.abs_error,
                        converged=est.converged)

    def outer_sup(self, f) -> Estimate:
        return quadrature.sup_on_interval(f, 0.0, _INF, self.problem.grid)


@functools.lru_cache(maxsize=64)
def _evaluator(problem: Problem) -> ConditionEvaluator:
    return ConditionEvaluator(problem)


def _eval_A1(ev: ConditionEvaluator) -> ConditionValue:
    par = ev.params

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return _mul(ev.ctx.phi(ts), _pow(ev.sigma_vec(ts), 1.0 / par.p_prime))

    est = ev.outer_sup(f)
    return ConditionValue("A1", est.value, argmax=est.argmax)


def _eval_A2(ev: ConditionEvaluator) -> ConditionValue:
    par = ev.params
    r = par.r
    zpow = _pow(ev.sigz, r / par.p_prime)

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        sup = ev._inner_sup(ts, r / par.m, zpow)
        return _mul(_pow(ev.ctx.W(ts), r / par.p), ev.problem.w.values(ts), sup)

    est = ev.outer_integral(f, 1.0 / r)
    return ConditionValue("A2", est.value,
                          diagnostics={"abs_error": est.abs_error})


def _eval_A3(ev: ConditionEvaluator) -> ConditionValue:
    par = ev.params
    r = par.r
    zpow = _pow(ev.sigz, r / par.p_prime)

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        sup = ev._inner_sup(ts, par.q / par.m, zpow)
        return _mul(_pow(ev.ctx.phi_q(ts), r / par.p), ev.problem.w.values(ts), sup)

    est = ev.outer_integral(f, 1.0 / r)
    return ConditionValue("A3", est.value,
                          diagnostics={"abs_error": est.abs_error})


def _eval_A4(ev: ConditionEvaluator, starred: bool) -> ConditionValue:
    par = ev.params
    outer_expo = (par.p - par.m) / (par.p * par.m)

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        j = ev._j_integral(ts, starred)
        return _mul(_pow(ev.ctx.W(ts), 1.0 / par.q), _pow(j, outer_expo))

    est = ev.outer_sup(f)
    return ConditionValue("A4*" if starred else "A4", est.value, argmax=est.argmax)


def _eval_A5(ev: ConditionEvaluator, starred: bool) -> ConditionValue:
    par = ev.params
    r = par.r
    inner_expo = par.q * (par.p - par.m) / (par.m * (par.p - par.q))

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        j = ev._j_integral(ts, starred)
        return _mul(_pow(ev.ctx.W(ts), r / par.p), ev.problem.w.values(ts),
                    _pow(j, inner_expo))

    est = ev.outer_integral(f, 1.0 / r)
    return ConditionValue("A5*" if starred else "A5", est.value,
                          diagnostics={"abs_error": est.abs_error})


def _eval_A6(ev: ConditionEvaluator) -> ConditionValue:
    par = ev.params
    r = par.r
    rq = par.r_over_q_prime

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        dual = weights.dual_values(ev.problem.v, par.p, ts)
        return _mul(_pow(ev.ctx.phi(ts), r), _pow(ev.sigma_vec(ts), rq), dual)

    est = ev.outer_integral(f, 1.0 / r)
    return ConditionValue("A6", est.value,
                          diagnostics={"abs_error": est.abs_error})


def _eval_At1(ev: ConditionEvaluator) -> ConditionValue:
    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return _mul(ev.ctx.phi(ts), _pow(ev.problem.v.values(ts), -1.0))

    est = ev.outer_sup(f)
    return ConditionValue("At1", est.value, argmax=est.argmax)


def _eval_At2(ev: ConditionEvaluator) -> ConditionValue:
    par = ev.params
    qp = par.q_prime
    zpow = _pow(ev.vz, qp)

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        sup = ev._inner_sup(ts, -qp / par.m, zpow)
        return _mul(_pow(ev.ctx.W(ts), -qp), ev.problem.w.values(ts), sup)

    est = ev.outer_integral(f, -1.0 / qp)
    return ConditionValue("At2", est.value,
                          diagnostics={"abs_error": est.abs_error})


def _eval_At3(ev: ConditionEvaluator) -> ConditionValue:
    par = ev.params
    qp = par.q_prime
    zpow = _pow(ev.vz, qp)

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        sup = ev._inner_sup(ts, par.q / par.m, zpow)
        return _mul(_pow(ev.ctx.phi_q(ts), -qp), ev.problem.w.values(ts), sup)

    est = ev.outer_integral(f, -1.0 / qp)
    return ConditionValue("At3", est.value,
                          diagnostics={"abs_error": est.abs_error})


def _inner_At4(ev: ConditionEvaluator, ts: np.ndarray) -> np.ndarray:
    """int_t^tmax (int_t^z u)^(m/(1-m)) u(z) (essinf_{y>z} v)^(-m/(1-m)) dz."""
    par = ev.params
    m = par.m
    e1 = m / (1.0 - m)
    ts = np.asarray(ts, dtype=float)
    u0t = ev.ctx.U0(ts)
    jg, jt = ev._j_grid, ev._j_tables
    # essinf proxy at the quadrature nodes: step lookup into the z-grid suffix inf
    idx = np.searchsorted(ev.zs, jg["s"].ravel(), side="left")
    idx = np.clip(idx, 0, len(ev.zs) - 1)
    tail_inf = ev.v_tail_inf[idx].reshape(jg["s"].shape)
    vfac = _pow(tail_inf, -e1)
    umat = np.maximum(jt["u0"][None, :, :] - u0t[:, None, None], 0.0)
    integrand = _mul(_pow(umat, e1), jt["u"][None, :, :], vfac[None, :, :],
                     jg["w"][None, :, :])
    live = jg["s"][None, :, :] > ts[:, None, None]
    integrand = np.where(live, integrand, 0.0)
    has_inf = np.isinf(integrand).any(axis=(1, 2))
    out = np.einsum("qsk->q", np.where(np.isinf(integrand), 0.0, integrand))
    out[has_inf] = _INF
    return out


def _eval_At4(ev: ConditionEvaluator) -> ConditionValue:
    par = ev.params
    outer_expo = (1.0 - par.m) / par.m

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        inner = _inner_At4(ev, ts)
        return _mul(_pow(ev.ctx.W(ts), 1.0 / par.q), _pow(inner, outer_expo))

    est = ev.outer_sup(f)
    return ConditionValue("At4", est.value, argmax=est.argmax)


def _eval_At5(ev: ConditionEvaluator) -> ConditionValue:
    par = ev.params
    qp = par.q_prime
    expo = -qp * (1.0 - par.m) / par.m

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        inner = _inner_At4(ev, ts)
        return _mul(_pow(ev.ctx.W(ts), -qp), ev.problem.w.values(ts),
                    _pow(inner, expo))

    est = ev.outer_integral(f, -1.0 / qp)
    return ConditionValue("At5", est.value,
                          diagnostics={"abs_error": est.abs_error})


def _check_applicable(name: str, par: core.Parameters):
    if name not in CONDITION_NAMES:
        raise InputError(f"unknown condition {name!r}; expected one of {CONDITION_NAMES}")
    tilde = name.startswith("At")
    if tilde:
        _require(par.p == 1.0, f"{name} applies only at p = 1 (got p={par.p})")
    else:
        _require(par.p > 1.0, f"{name} requires p > 1 (got p={par.p})")
    if name in ("A2", "A3", "A5", "A5*", "A6"):
        _require(par.q < par.p, f"{name} requires q < p (got q={par.q}, p={par.p})")
    if name in ("A4", "A4*", "A5", "A5*", "A6"):
        _require(par.m < par.p, f"{name} requires m < p (got m={par.m}, p={par.p})")
    if name in ("At2", "At3", "At5"):
        _require(par.q < 1.0, f"{name} requires q < 1 (got q={par.q})")
    if name in ("At4", "At5"):
        _require(par.m < 1.0, f"{name} requires m < 1 (got m={par.m})")


_DISPATCH = {
    "A1": _eval_A1,
    "A2": _eval_A2,
    "A3": _eval_A3,
    "A4": lambda ev: _eval_A4(ev, starred=False),
    "A4*": lambda ev: _eval_A4(ev, starred=True),
    "A5": lambda ev: _eval_A5(ev, starred=False),
    "A5*": lambda ev: _eval_A5(ev, starred=True),
    "A6": _eval_A6,
    "At1": _eval_At1,
    "At2": _eval_At2,
    "At3": _eval_At3,
    "At4": _eval_At4,
    "At5": _eval_At5,
}


def eval_condition(problem: Problem, name: str) -> ConditionValue:
    """Evaluate one named condition functional on the problem window."""
    _check_applicable(name, problem.params)
    return _DISPATCH[name](_evaluator(problem))


def theorem_bound(problem: Problem) -> ConditionValue:
    """Regime-correct combination of condition values.

    Returns the sum of the applicable plain conditions; starred variants
    are evaluated alongside as cross-checks and reported in the breakdown
    together with their agreement ratio.
    """
    regime = classify_regime(problem.params)
    breakdown = {}
    diagnostics = {"regime": regime.label}
    total = 0.0
    for name in regime.conditions:
        val = eval_condition(problem, name)
        breakdown[name] = val.value
        if not name.endswith("*"):
            total += val.value  # inf propagates
    for plain, starred in (("A4", "A4*"), ("A5", "A5*")):
        if plain in breakdown and starred in breakdown:
            a, b = breakdown[plain], breakdown[starred]
            if math.isfinite(a) and math.isfinite(b) and b > 0.0:
                diagnostics[f"{plain}_star_ratio"] = a / b
    return ConditionValue("theorem_bound", total, breakdown=breakdown,
                          diagnostics=diagnostics)


def sigma_finite_everywhere(problem: Problem) -> bool:
    """Whether int_t^inf v^(1-p') is finite for every t in (0, inf).

    Decided by the stretch machinery at a probe below the window (the
    dual-tail integrator certifies divergence symbolically per stretch).
    """
    probe = problem.grid.t_min / 100.0
    return math.isfinite(core.context(problem).sigma.partial(probe, _INF))
