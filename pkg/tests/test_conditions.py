import math

import numpy as np
import pytest

from itercopson.conditions import (classify_regime, eval_condition,
                                   sigma_finite_everywhere, theorem_bound)
from itercopson.core import Parameters, Problem
from itercopson.errors import InputError
from itercopson.quadrature import GridSpec
from itercopson.weights import WeightExpr

INF = math.inf
ONES = WeightExpr.constant(1.0)
GRID = GridSpec(1e-3, 1e3, 20)


def problem(p=2.0, q=2.0, m=2.0, u=ONES, v=ONES, w=ONES, grid=GRID, anchor=1.0):
    return Problem(Parameters(p, q, m), u, v, w, grid, anchor)


class TestRegime:
    @pytest.mark.parametrize("pqm,label", [
        ((2.0, 2.0, 2.0), "a"),
        ((2.0, 3.0, 2.5), "a"),
        ((2.0, 1.0, 3.0), "b"),
        ((2.0, 3.0, 1.0), "c"),
        ((2.0, 0.5, 0.75), "d"),
        ((1.0, 1.0, 1.0), "at"),
        ((1.0, 0.5, 2.0), "bt"),
        ((1.0, 2.0, 0.5), "ct"),
        ((1.0, 0.5, 0.5), "dt"),
    ])
    def test_classification(self, pqm, label):
        p, q, m = pqm
        assert classify_regime(Parameters(p, q, m)).label == label

    def test_boundary_q_equals_p(self):
        assert classify_regime(Parameters(2.0, 2.0, 1.0)).label == "c"


class TestA1:
    def test_benchmark_sqrt2_over_e(self):
        # phi = t/sqrt(2), sigma-tail of e^t is e^-t: sup t e^{-t/2}/sqrt(2)
        prob = problem(v=WeightExpr.exponential(1.0, 1.0))
        val = eval_condition(prob, "A1")
        assert val.value == pytest.approx(math.sqrt(2.0) / math.e, rel=1e-6)
        assert val.argmax == pytest.approx(2.0, rel=1e-4)

    def test_constant_v_divergent(self):
        val = eval_condition(problem(), "A1")
        assert val.value == INF

    def test_rate_two(self):
        # sup (t/sqrt(2)) (e^{-2t}/2)^{1/2} = 1/(2e) at t = 1
        prob = problem(v=WeightExpr.exponential(1.0, 2.0))
        val = eval_condition(prob, "A1")
        assert val.value == pytest.approx(1.0 / (2.0 * math.e), rel=1e-6)
        assert val.argmax == pytest.approx(1.0, rel=1e-4)


class TestApplicability:
    def test_a2_needs_q_below_p(self):
        with pytest.raises(InputError):
            eval_condition(problem(q=3.0), "A2")

    def test_a4_needs_m_below_p(self):
        with pytest.raises(InputError):
            eval_condition(problem(m=3.0, q=3.0), "A4")

    def test_tilde_needs_p_one(self):
        with pytest.raises(InputError):
            eval_condition(problem(), "At1")

    def test_unknown_name(self):
        with pytest.raises(InputError):
            eval_condition(problem(), "A9")


class TestRegimeBounds:
    def test_regime_a_bound_equals_a1(self):
        prob = problem(v=WeightExpr.exponential(1.0, 1.0))
        bound = theorem_bound(prob)
        assert bound.diagnostics["regime"] == "a"
        assert bound.value == pytest.approx(math.sqrt(2.0) / math.e, rel=1e-6)

    def test_constant_v_gives_inf_in_each_regime(self):
        for p, q, m in ((2.0, 2.0, 2.0), (2.0, 1.0, 3.0), (2.0, 3.0, 1.0),
                        (2.0, 0.5, 0.75)):
            bound = theorem_bound(problem(p=p, q=q, m=m))
            assert bound.value == INF

    def test_regime_b_finite(self):
        prob = problem(p=2.0, q=1.0, m=3.0, v=WeightExpr.exponential(1.0, 1.0))
        bound = theorem_bound(prob)
        assert bound.diagnostics["regime"] == "b"
        assert 0.0 < bound.value < INF
        assert set(bound.breakdown) == {"A2", "A3"}

    def test_regime_c_starred_agreement(self):
        prob = problem(p=2.0, q=3.0, m=1.5, v=WeightExpr.exponential(1.0, 1.0))
        bound = theorem_bound(prob)
        assert bound.diagnostics["regime"] == "c"
        assert 0.0 < bound.value < INF
        # integration by parts makes A4 and A4* equivalent when tails are finite
        assert sigma_finite_everywhere(prob)
        ratio = bound.diagnostics["A4_star_ratio"]
        assert 0.25 < ratio < 4.0

    def test_regime_d_counterexample_weights_finite(self):
        p, q, m = 2.0, 0.5, 0.75
        pprime = 2.0
        from itercopson.weights import WeightTerm
        v = WeightExpr((
            WeightTerm(1.0, power=p / m + p - 1.0,
                       log_power=(p - q) / (pprime * (q - 1.0)), support=(0.0, 0.5)),
            WeightTerm(1.0, exp_rate=1.0, support=(0.5, INF)),
        ))
        w10 = WeightExpr.constant(10.0, support=(0.0, 0.1))
        prob = problem(p=p, q=q, m=m, v=v, w=w10, grid=GridSpec(1e-4, 1e2, 16))
        bound = theorem_bound(prob)
        assert bound.diagnostics["regime"] == "d"
        assert 0.0 < bound.value < INF


class TestHomogeneity:
    @pytest.mark.parametrize("name,p,q,m", [
        ("A1", 2.0, 2.5, 2.5), ("A2", 2.0, 1.0, 3.0), ("A3", 2.0, 1.0, 3.0),
        ("A4", 2.0, 3.0, 1.2), ("A5", 2.5, 1.5, 1.2), ("A6", 2.0, 0.5, 0.75),
    ])
    def test_scaling(self, name, p, q, m):
        lam = 2.7
        v = WeightExpr.exponential(1.0, 1.0)
        base = problem(p=p, q=q, m=m, v=v,
                       u=WeightExpr.power(1.0, 0.2), w=WeightExpr.power(1.0, 0.1))
        val0 = eval_condition(base, name).value
        assert 0.0 < val0 < INF

        scaled_v = problem(p=p, q=q, m=m, v=v.scaled(lam),
                           u=WeightExpr.power(1.0, 0.2), w=WeightExpr.power(1.0, 0.1))
        assert eval_condition(scaled_v, name).value == pytest.approx(
            lam ** (-1.0 / p) * val0, rel=1e-6)

        scaled_w = problem(p=p, q=q, m=m, v=v, u=WeightExpr.power(1.0, 0.2),
                           w=WeightExpr.power(1.0, 0.1).scaled(lam))
        assert eval_condition(scaled_w, name).value == pytest.approx(
            lam ** (1.0 / q) * val0, rel=1e-6)

        scaled_u = problem(p=p, q=q, m=m, v=v,
                           u=WeightExpr.power(1.0, 0.2).scaled(lam),
                           w=WeightExpr.power(1.0, 0.1))
        assert eval_condition(scaled_u, name).value == pytest.approx(
            lam ** (1.0 / m) * val0, rel=1e-6)


class TestDomainMonotone:
    def test_enlarging_window_never_decreases(self):
        v = WeightExpr.exponential(1.0, 1.0)
        for name, p, q, m in (("A1", 2.0, 2.5, 2.5), ("A3", 2.0, 1.0, 3.0),
                              ("A6", 2.0, 0.5, 0.75)):
            small = problem(p=p, q=q, m=m, v=v, grid=GridSpec(1e-2, 1e2, 20))
            large = problem(p=p, q=q, m=m, v=v, grid=GridSpec(1e-3, 1e3, 20))
            vs = eval_condition(small, name).value
            vl = eval_condition(large, name).value
            # slack covers inner-sup grid sampling noise between windows
            assert vl >= vs * (1.0 - 5e-4)


class TestP1:
    def test_at1_closed_form(self):
        # phi = t/sqrt(2) (q=m=2 survives at p=1), v = e^t:
        # sup t e^{-t}/sqrt(2) = 1/(e sqrt(2)) at t = 1
        prob = problem(p=1.0, q=2.0, m=2.0, v=WeightExpr.exponential(1.0, 1.0))
        val = eval_condition(prob, "At1")
        assert val.value == pytest.approx(1.0 / (math.e * math.sqrt(2.0)), rel=1e-6)
        assert val.argmax == pytest.approx(1.0, rel=1e-3)

    def test_bt_regime_finite(self):
        prob = problem(p=1.0, q=0.5, m=2.0, v=WeightExpr.exponential(1.0, 1.0))
        bound = theorem_bound(prob)
        assert bound.diagnostics["regime"] == "bt"
        assert 0.0 < bound.value < INF

    def test_ct_regime_finite(self):
        prob = problem(p=1.0, q=2.0, m=0.5, v=WeightExpr.exponential(1.0, 1.0))
        bound = theorem_bound(prob)
        assert bound.diagnostics["regime"] == "ct"
        assert 0.0 < bound.value < INF

    def test_dt_regime_finite(self):
        prob = problem(p=1.0, q=0.5, m=0.5, v=WeightExpr.exponential(1.0, 1.0))
        bound = theorem_bound(prob)
        assert bound.diagnostics["regime"] == "dt"
        assert 0.0 < bound.value < INF
