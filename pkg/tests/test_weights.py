import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itercopson.errors import InputError
from itercopson.quadrature import integrate
from itercopson.weights import (DualTail, WeightExpr, WeightTerm, dual_value,
                                eval_weight, integrate_weight, sigma_tail)

INF = math.inf


def counterexample_v(p=2.0, q=0.5, m=0.75):
    """Two-branch weight: power-log piece on [0, 1/2], exponential above."""
    pprime = p / (p - 1.0)
    return WeightExpr((
        WeightTerm(1.0, power=p / m + p - 1.0, log_power=(p - q) / (pprime * (q - 1.0)),
                   support=(0.0, 0.5)),
        WeightTerm(1.0, exp_rate=1.0, support=(0.5, INF)),
    ))


class TestEval:
    def test_pure_power(self):
        w = WeightExpr.power(1.0, 2.0)
        assert eval_weight(w, 3.0) == pytest.approx(9.0, rel=1e-15)

    def test_counterexample_second_branch_at_one(self):
        v = counterexample_v()
        assert eval_weight(v, 1.0) == pytest.approx(math.e, rel=1e-15)

    def test_counterexample_first_branch(self):
        # exponents p/m+p-1 = 11/3 and (p-q)/(p'(q-1)) = -3/2 at (p,q,m)=(2,1/2,3/4)
        v = counterexample_v()
        expected = 0.25 ** (11.0 / 3.0) * math.log(4.0) ** (-1.5)
        assert expected == pytest.approx(3.80e-3, rel=5e-3)
        assert eval_weight(v, 0.25) == pytest.approx(expected, rel=1e-13)

    def test_negative_log_power_blows_up_at_one(self):
        w = WeightExpr((WeightTerm(1.0, log_power=-0.5),))
        assert eval_weight(w, 1.0) == INF

    def test_outside_support_is_zero(self):
        w = WeightExpr.constant(3.0, support=(1.0, 2.0))
        assert eval_weight(w, 0.5) == 0.0
        assert eval_weight(w, 3.0) == 0.0

    def test_invalid_t(self):
        w = WeightExpr.constant(1.0)
        with pytest.raises(InputError):
            eval_weight(w, 0.0)
        with pytest.raises(InputError):
            eval_weight(w, -1.0)

    def test_values_match_value(self):
        v = counterexample_v()
        ts = np.geomspace(1e-3, 10.0, 37)
        vec = v.values(ts)
        scal = np.array([eval_weight(v, t) for t in ts])
        np.testing.assert_allclose(vec, scal, rtol=1e-13)


class TestIntegrate:
    def test_unit_rectangle(self):
        w = WeightExpr.constant(1.0)
        assert integrate_weight(w, 0.0, 7.5) == pytest.approx(7.5, rel=1e-15)

    def test_exponential_tail(self):
        w = WeightExpr.exponential(1.0, -1.0)
        assert integrate_weight(w, 1.0, INF) == pytest.approx(math.exp(-1.0), rel=1e-14)

    def test_counterexample_rectangle(self):
        n = 17
        w = WeightExpr.constant(float(n), support=(0.0, 1.0 / n))
        assert integrate_weight(w, 0.0, 1.0 / n) == pytest.approx(1.0, rel=1e-14)

    def test_power_divergence_at_zero(self):
        w = WeightExpr.power(1.0, -1.5)
        assert integrate_weight(w, 0.0, 1.0) == INF

    def test_power_divergence_at_inf(self):
        assert integrate_weight(WeightExpr.constant(1.0), 1.0, INF) == INF
        assert integrate_weight(WeightExpr.power(2.0, -0.5), 1.0, INF) == INF

    def test_exp_growth_divergence(self):
        w = WeightExpr.exponential(1.0, 0.25)
        assert integrate_weight(w, 0.0, INF) == INF

    def test_integer_powlog_closed_form(self):
        # int_0^1 t * (-ln t)^2 dt = 2/(2^3) = 1/4 by Gamma(3)/(alpha+1)^3
        w = WeightExpr((WeightTerm(1.0, power=1.0, log_power=2.0, support=(0.0, 1.0)),))
        assert integrate_weight(w, 0.0, 1.0) == pytest.approx(0.25, rel=1e-13)

    def test_fractional_powlog_against_quadrature(self):
        term = WeightTerm(1.0, power=-11.0 / 3.0, log_power=1.5, support=(0.0, 0.5))
        w = WeightExpr((term,))
        got = integrate_weight(w, 0.01, 0.5)
        ref = integrate(lambda t: w.values(t), 0.01, 0.5, rel_tol=1e-11).value
        assert got == pytest.approx(ref, rel=1e-8)

    def test_log_blowup_divergent_across_one(self):
        w = WeightExpr((WeightTerm(1.0, log_power=-1.5),))
        assert integrate_weight(w, 0.5, 2.0) == INF

    def test_cumulative_matches_scalar(self):
        v = counterexample_v()
        ts = np.geomspace(1e-2, 5.0, 11)
        cum = v.cumulative(ts)
        ref = np.array([integrate_weight(v, 0.0, t) for t in ts])
        np.testing.assert_allclose(cum, ref, rtol=1e-8)


class TestSigmaTail:
    def test_exponential(self):
        v = WeightExpr.exponential(1.0, 1.0)
        assert sigma_tail(v, 2.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-13)

    def test_constant_divergent(self):
        v = WeightExpr.constant(1.0)
        assert sigma_tail(v, 2.0, 1.0) == INF

    def test_rate_two_from_zero(self):
        v = WeightExpr.exponential(1.0, 2.0)
        got = sigma_tail(v, 2.0, 0.0)
        ref = integrate(lambda t: np.exp(-2.0 * t), 0.0, INF, rel_tol=1e-11).value
        assert got == pytest.approx(0.5, rel=1e-13)
        assert got == pytest.approx(ref, rel=1e-9)

    def test_vanishing_stretch_gives_inf(self):
        v = WeightExpr.constant(1.0, support=(0.0, 1.0))
        assert sigma_tail(v, 2.0, 0.5) == INF

    def test_counterexample_tail_finite(self):
        v = counterexample_v()
        sig = sigma_tail(v, 2.0, 0.1)
        dual = lambda t: np.asarray([dual_value(v, 2.0, x) for x in np.atleast_1d(t)])
        # oracle split at the branch point so the jump sits on a panel edge
        ref = (integrate(dual, 0.1, 0.5, rel_tol=1e-10).value
               + integrate(dual, 0.5, INF, rel_tol=1e-10).value)
        assert math.isfinite(sig)
        assert sig == pytest.approx(ref, rel=1e-8)

    def test_partial_vec_matches_scalar(self):
        v = counterexample_v()
        tail = DualTail(v, 2.0)
        ts = np.geomspace(0.05, 3.0, 9)
        vec = tail.partial_vec(ts, 4.0)
        ref = np.array([tail.partial(float(t), 4.0) for t in ts])
        np.testing.assert_allclose(vec, ref, rtol=1e-8)


class TestInvariants:
    @given(st.floats(0.1, 3.0), st.floats(3.5, 8.0), st.floats(9.0, 40.0))
    @settings(max_examples=40, deadline=None)
    def test_additivity(self, a, b, c):
        v = counterexample_v()
        whole = integrate_weight(v, a, c)
        split = integrate_weight(v, a, b) + integrate_weight(v, b, c)
        assert whole == pytest.approx(split, rel=1e-8, abs=1e-12)

    @given(st.floats(0.25, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_scaling_linear(self, lam):
        v = counterexample_v()
        assert eval_weight(v.scaled(lam), 0.3) == pytest.approx(
            lam * eval_weight(v, 0.3), rel=1e-13)
        assert integrate_weight(v.scaled(lam), 0.1, 2.0) == pytest.approx(
            lam * integrate_weight(v, 0.1, 2.0), rel=1e-10)

    def test_integral_monotone_in_endpoints(self):
        v = counterexample_v()
        vals = [integrate_weight(v, 0.1, b) for b in (0.5, 1.0, 2.0, 4.0)]
        assert vals == sorted(vals)
        vals = [integrate_weight(v, a, 4.0) for a in (0.1, 0.2, 0.4)]
        assert vals == sorted(vals, reverse=True)

    @given(st.floats(0.3, 3.0), st.floats(0.5, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_sigma_scaling(self, lam, t):
        v = WeightExpr.exponential(1.0, 2.0)
        p = 2.0
        left = sigma_tail(v.scaled(lam), p, t)
        right = lam ** (1.0 - p / (p - 1.0)) * sigma_tail(v, p, t)
        assert left == pytest.approx(right, rel=1e-12)

    def test_sigma_nonincreasing(self):
        v = counterexample_v()
        ts = np.geomspace(0.02, 5.0, 12)
        sig = [sigma_tail(v, 2.0, float(t)) for t in ts]
        assert all(x >= y - 1e-12 for x, y in zip(sig, sig[1:]))

    def test_json_roundtrip(self):
        v = counterexample_v()
        again = WeightExpr.from_json(v.to_json())
        assert again == v
