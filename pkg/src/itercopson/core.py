"""Primitive objects of the inequality: exponents, problems, the fundamental
function phi, admissibility, and the two sides of the defining ratio.

phi(t) = ( int_0^t ( int_s^t u )^(q/m) w(s) ds )^(1/q) is the quantity that
drives both the weight conditions and the discretizing sequence.  For a
single power u on (0, inf) and a single power w on an interval the inner
integral collapses to a regularized incomplete Beta function, which keeps
phi exact and fast on the hot paths; everything else goes through adaptive
quadrature with the inner integral in closed form.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from . import quadrature, weights
from .errors import InputError, ToleranceNotMet
from .quadrature import Estimate, GridSpec
from .weights import WeightExpr

_INF = math.inf


@dataclass(frozen=True)
class Parameters:
    """Exponent triple (p, q, m) with the derived quantities used everywhere."""

    p: float
    q: float
    m: float

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise InputError(f"p must be >= 1 (got p={self.p}); the inequality "
                             "fails for every nontrivial weight otherwise")
        if not (self.q > 0.0 and self.m > 0.0):
            raise InputError(f"q and m must be positive, got q={self.q}, m={self.m}")

    @property
    def p_prime(self) -> float:
        return _INF if self.p == 1.0 else self.p / (self.p - 1.0)

    @property
    def q_prime(self) -> float:
        # signed conjugate: negative for q < 1, +inf at q = 1
        return _INF if self.q == 1.0 else self.q / (self.q - 1.0)

    @property
    def r(self) -> float:
        if not self.q < self.p:
            raise InputError(f"r = pq/(p-q) requires q < p, got p={self.p}, q={self.q}")
        return self.p * self.q / (self.p - self.q)

    @property
    def r_over_q_prime(self) -> float:
        # convention: r/q' = 0 when q = 1
        if self.q == 1.0:
            return 0.0
        return self.r * (self.q - 1.0) / self.q

    @property
    def doubling_factor(self) -> float:
        return 2.0 ** (self.q / self.m + 1.0)

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "m": self.m}

    @classmethod
    def from_json(cls, obj: dict) -> "Parameters":
        return cls(float(obj["p"]), float(obj["q"]), float(obj["m"]))


@dataclass(frozen=True)
class Problem:
    """A weight triple with exponents and the numerical window."""

    params: Parameters
    u: WeightExpr
    v: WeightExpr
    w: WeightExpr
    grid: GridSpec
    anchor: float = 1.0

    def __post_init__(self):
        if not (self.anchor > 0.0 and math.isfinite(self.anchor)):
            raise InputError(f"anchor must be a positive real, got {self.anchor}")

    def to_json(self) -> dict:
        return {"params": self.params.to_json(),
                "weights": {"u": self.u.to_json(), "v": self.v.to_json(),
                            "w": self.w.to_json()},
                "grid": self.grid.to_json(),
                "anchor": self.anchor}

    @classmethod
    def from_json(cls, obj: dict) -> "Problem":
        wts = obj["weights"]
        return cls(Parameters.from_json(obj["params"]),
                   WeightExpr.from_json(wts["u"]),
                   WeightExpr.from_json(wts["v"]),
                   WeightExpr.from_json(wts["w"]),
                   GridSpec.from_json(obj["grid"]),
                   float(obj.get("anchor", 1.0)))


class TestFunction:
    """Piecewise-constant nonnegative function on the log grid.

    One value per grid node; node i owns the cell between the geometric
    midpoints of its neighbors (window edges at the extremes).  The
    function vanishes outside [t_min, t_max].
    """

    __test__ = False  # not a pytest class, despite the name

    def __init__(self, nodes, values):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape:
            raise InputError("nodes and values must be 1-d arrays of equal length")
        if np.any(values < 0.0):
            raise InputError("test-function values must be nonnegative")
        self.nodes = nodes
        self.values = values
        mids = np.sqrt(nodes[:-1] * nodes[1:])
        self.edges = np.concatenate(([nodes[0]], mids, [nodes[-1]]))
        self.widths = np.diff(self.edges)
        masses = self.values * self.widths
        self.suffix = np.concatenate((np.cumsum(masses[::-1])[::-1], [0.0]))

    @classmethod
    def from_problem(cls, problem: Problem, values) -> "TestFunction":
        return cls(problem.grid.nodes(), values)

    def with_values(self, values) -> "TestFunction":
        return TestFunction(self.nodes, values)

    @property
    def total_mass(self) -> float:
        return float(self.suffix[0])

    def value_at(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        idx = np.searchsorted(self.edges, ts, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.values))
        out = np.zeros_like(ts)
        out[inside] = self.values[np.clip(idx[inside], 0, len(self.values) - 1)]
        return out

    def tail_integral(self, ss) -> np.ndarray:
        """H(s) = integral of the function over (s, inf); exact."""
        ss = np.asarray(ss, dtype=float)
        idx = np.searchsorted(self.edges, ss, side="right") - 1
        idx = np.clip(idx, -1, len(self.values) - 1)
        out = np.empty_like(ss)
        below = idx < 0
        out[below] = self.suffix[0]
        inside = ~below
        i = idx[inside]
        out[inside] = self.suffix[i] - self.values[i] * (ss[inside] - self.edges[i])
        out[ss >= self.edges[-1]] = 0.0
        return np.maximum(out, 0.0)

    def scaled(self, factor: float) -> "TestFunction":
        return TestFunction(self.nodes, self.values * factor)

    def __eq__(self, other):
        return (isinstance(other, TestFunction)
                and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.values, other.values))


@dataclass
class AdmissibilityReport:
    admissible: bool
    reason: str = ""
    top_flag: Optional[str] = None        # "0" or "inf"
    phi_inf: float = math.nan             # finite when top_flag == "0"
    inconclusive: bool = False
    limit_zero_ratio: float = math.nan    # phi(t_min/256)/phi(t_min)
    phi_samples: tuple = ()


class ProblemContext:
    """Cached vectorized evaluators bound to one Problem."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.params = problem.params
        self.grid = problem.grid
        self.u, self.v, self.w = problem.u, problem.v, problem.w
        self._sigma = None
        self._beta = self._beta_setup()
        self._cum_u_ok = None

    # -- sigma tail -----------------------------------------------------
    @property
    def sigma(self) -> weights.DualTail:
        if self.params.p <= 1.0:
            raise InputError("sigma tail requires p > 1")
        if self._sigma is None:
            self._sigma = weights.DualTail(self.v, self.params.p)
        return self._sigma

    # -- cumulative integrals --------------------------------------------
    def W(self, ts) -> np.ndarray:
        return self.w.cumulative(np.asarray(ts, dtype=float))

    def U0(self, ts) -> np.ndarray:
        return self.u.cumulative(np.asarray(ts, dtype=float))

    def u_partial(self, ss, t: float) -> np.ndarray:
        """int_s^t u as an array over s <= t."""
        ss = np.asarray(ss, dtype=float)
        if self._cum_u_ok is None:
            probe = self.U0(np.array([self.grid.t_max]))
            self._cum_u_ok = bool(np.all(np.isfinite(probe)))
        if self._cum_u_ok:
            ref = float(self.U0(np.array([t]))[0]) if t < _INF else _INF
            if math.isfinite(ref):
                return np.maximum(ref - self.U0(ss), 0.0)
        return np.array([weights.integrate_weight(self.u, float(s), t) for s in ss])

    # -- phi ---------------------------------------------------------------
    def _beta_setup(self):
        """Incomplete-Beta closed form: single power u on (0,inf), single power w."""
        if len(self.u.terms) != 1 or len(self.w.terms) != 1:
            return None
        ut, wt = self.u.terms[0], self.w.terms[0]
        if ut.coef <= 0.0 or wt.coef <= 0.0:
            return None
        if ut.log_power or ut.exp_rate or wt.log_power or wt.exp_rate:
            return None
        if ut.support != (0.0, _INF):
            return None
        if not (ut.power > -1.0 and wt.power > -1.0):
            return None
        qm = self.params.q / self.params.m
        a1 = ut.power + 1.0
        b1 = (wt.power + 1.0) / a1
        b2 = qm + 1.0
        kappa = wt.power + 1.0 + a1 * qm
        scale = wt.coef * (ut.coef / a1) ** qm * special.beta(b1, b2) / a1
        return {"a1": a1, "b1": b1, "b2": b2, "kappa": kappa, "scale": scale,
                "w_lo": wt.support[0], "w_hi": wt.support[1]}

    def phi_q(self, ts) -> np.ndarray:
        """phi(t)**q, vectorized."""
        ts = np.asarray(ts, dtype=float)
        if self.u.is_zero or self.w.is_zero:
            return np.zeros_like(ts)
        fb = self._beta
        if fb is not None:
            lo = np.full_like(ts, max(fb["w_lo"], 0.0))
            hi = np.minimum(ts, fb["w_hi"])
            out = np.zeros_like(ts)
            live = hi > lo
            if live.any():
                t = ts[live]
                with np.errstate(all="ignore"):
                    y_lo = (lo[live] / t) ** fb["a1"]
                    y_hi = (hi[live] / t) ** fb["a1"]
                    inc = (special.betainc(fb["b1"], fb["b2"], y_hi)
                           - special.betainc(fb["b1"], fb["b2"], y_lo))
                    out[live] = fb["scale"] * t ** fb["kappa"] * inc
            return out
        return np.array([self._phi_q_scalar(float(t)) for t in ts])

    def _phi_q_scalar(self, t: float) -> float:
        if t <= 0.0:
            raise InputError(f"phi requires t > 0, got {t}")
        qm = self.params.q / self.params.m

        def integrand(ss):
            inner = self.u_partial(ss, t)
            with np.errstate(all="ignore"):
                fac = inner ** qm
            fac[np.isposinf(inner)] = _INF
            wvals = self.w.values(ss)
            out = wvals * fac
            out[(wvals == 0.0)] = 0.0  # 0 * inf = 0
            return out

        est = quadrature.integrate(integrand, 0.0, t, rel_tol=1e-9)
        if not est.converged and math.isfinite(est.value):
            raise ToleranceNotMet(f"phi quadrature did not converge at t={t}",
                                  estimate=est)
        return est.value

    def phi(self, ts) -> np.ndarray:
        with np.errstate(all="ignore"):
            return self.phi_q(ts) ** (1.0 / self.params.q)

    def phi_scalar(self, t: float) -> float:
        return float(self.phi(np.array([t]))[0])

    # -- admissibility -----------------------------------------------------
    def admissibility(self) -> AdmissibilityReport:
        g = self.grid
        probes_low = g.t_min / 4.0 ** np.arange(1, 5)
        nodes = np.geomspace(g.t_min, g.t_max, 33)
        growth = 10.0
        probes_high = g.t_max * growth ** np.arange(1, 9)
        phi_nodes = self.phi(nodes)
        if np.any(~np.isfinite(phi_nodes)):
            t_bad = float(nodes[int(np.argmax(~np.isfinite(phi_nodes)))])
            return AdmissibilityReport(False, f"phi is not finite at t={t_bad:g}",
                                       phi_samples=tuple(phi_nodes))
        if np.any(phi_nodes == 0.0):
            t_bad = float(nodes[int(np.argmax(phi_nodes == 0.0))])
            return AdmissibilityReport(False, f"phi vanishes at t={t_bad:g}",
                                       phi_samples=tuple(phi_nodes))
        phi_low = self.phi(probes_low)
        if np.any(phi_low == 0.0) or np.any(~np.isfinite(phi_low)):
            return AdmissibilityReport(False, "phi degenerate below the window",
                                       phi_samples=tuple(phi_nodes))
        limit_ratio = float(phi_low[-1] / phi_nodes[0])
        phi_high = self.phi(probes_high)
        if np.any(~np.isfinite(phi_high)):
            top_flag, phi_inf, inconclusive = "inf", _INF, False
        else:
            ratio = float(phi_high[-1] / phi_high[-2])
            if ratio < 1.001:
                top_flag, phi_inf, inconclusive = "0", float(phi_high[-1]), False
            elif ratio >= 1.05:
                top_flag, phi_inf, inconclusive = "inf", _INF, False
            else:
                top_flag, phi_inf, inconclusive = None, math.nan, True
        return AdmissibilityReport(True, "", top_flag, phi_inf, inconclusive,
                                   limit_ratio, tuple(phi_nodes))

    # -- the two norms -----------------------------------------------------
    def cell_v_integrals(self, h: TestFunction) -> np.ndarray:
        return np.array([weights.integrate_weight(self.v, float(a), float(b))
                         for a, b in zip(h.edges[:-1], h.edges[1:])])

    def rhs_norm(self, h: TestFunction) -> float:
        p = self.params.p
        cell_v = self.cell_v_integrals(h)
        with np.errstate(all="ignore"):
            contrib = h.values ** p * cell_v
        contrib[h.values == 0.0] = 0.0
        total = float(np.sum(contrib))
        return total ** (1.0 / p)

    def copson_layer(self, h: TestFunction, ts) -> np.ndarray:
        """G(t) = int_t^inf H(s)^m u(s) ds for H the tail of h; exact-ish."""
        m = self.params.m
        ts = np.asarray(ts, dtype=float)
        e = h.edges
        n = len(h.values)
        xs, ws = np.polynomial.legendre.leggauss(16)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[:-1] + e[1:])
        s_nodes = mid[:, None] + half[:, None] * xs          # (n, 16)
        hv = h.tail_integral(s_nodes.ravel()).reshape(s_nodes.shape)
        uv = self.u.values(s_nodes.ravel()).reshape(s_nodes.shape)
        cell = np.einsum("ck,ck,k->c", hv ** m, uv, ws) * half
        suffix = np.concatenate((np.cumsum(cell[::-1])[::-1], [0.0]))

        idx = np.searchsorted(e, ts, side="right") - 1
        out = np.zeros_like(ts)
        below = idx < 0
        if below.any():
            u_hi = float(self.U0(np.array([e[0]]))[0])
            tb = ts[below]
            if math.isfinite(u_hi):
                du = u_hi - self.U0(tb)
            else:
                du = np.full_like(tb, _INF)
            out[below] = suffix[0] + h.total_mass ** m * du
        ins = (idx >= 0) & (idx < n)
        if ins.any():
            ti = ts[ins]
            i = idx[ins]
            hj = 0.5 * (e[i + 1] - ti)
            mj = 0.5 * (e[i + 1] + ti)
            sn = mj[:, None] + hj[:, None] * xs
            hvq = h.tail_integral(sn.ravel()).reshape(sn.shape)
            uvq = self.u.values(sn.ravel()).reshape(sn.shape)
            part = np.einsum("qk,qk,k->q", hvq ** m, uvq, ws) * hj
            out[ins] = suffix[i + 1] + part
        return out

    def lhs_norm(self, h: TestFunction, rel_tol: float = 1e-8) -> float:
        q, m = self.params.q, self.params.m
        if h.total_mass == 0.0:
            return 0.0
        top = float(h.edges[-1])

        def integrand(ts):
            g = self.copson_layer(h, ts)
            with np.errstate(all="ignore"):
                fac = g ** (q / m)
            fac[np.isposinf(g)] = _INF
            wv = self.w.values(ts)
            out = wv * fac
            out[wv == 0.0] = 0.0
            return out

        est = quadrature.integrate(integrand, 0.0, top, rel_tol=rel_tol)
        if est.value == _INF:
            return _INF
        return est.value ** (1.0 / q)

    def ratio(self, h: TestFunction, rel_tol: float = 1e-8) -> float:
        den = self.rhs_norm(h)
        num = self.lhs_norm(h, rel_tol=rel_tol)
        if den == 0.0:
            return 0.0 if num == 0.0 else _INF
        return num / den


@functools.lru_cache(maxsize=128)
def context(problem: Problem) -> ProblemContext:
    return ProblemContext(problem)


def phi(problem: Problem, t: float) -> float:
    """The fundamental function of the pair (u, w) at t > 0."""
    if t <= 0.0:
        raise InputError(f"phi requires t > 0, got {t}")
    return context(problem).phi_scalar(t)


def check_admissible(problem: Problem) -> AdmissibilityReport:
    """Sample phi over (and beyond) the window; classify the top behavior."""
    return context(problem).admissibility()


def lhs_norm(problem: Problem, h: TestFunction) -> float:
    """Outer weighted norm of the iterated Copson expression applied to h."""
    return context(problem).lhs_norm(h)


def rhs_norm(problem: Problem, h: TestFunction) -> float:
    """Weighted L^p norm of h against v (exact for piecewise-constant h)."""
    return context(problem).rhs_norm(h)
