import math

import numpy as np
import pytest

from itercopson.errors import InputError
from itercopson.quadrature import Estimate, GridSpec, integrate, sup_on_interval

INF = math.inf
GRID = GridSpec(1e-4, 1e4, points_per_decade=24)


class TestGridSpec:
    def test_node_count(self):
        g = GridSpec(1e-2, 1e2, points_per_decade=10)
        assert g.n_nodes == 41
        nodes = g.nodes()
        assert nodes[0] == pytest.approx(1e-2)
        assert nodes[-1] == pytest.approx(1e2)
        assert np.all(np.diff(np.log(nodes)) > 0)

    def test_validation(self):
        with pytest.raises(InputError):
            GridSpec(1.0, 1.0)
        with pytest.raises(InputError):
            GridSpec(0.0, 1.0)
        with pytest.raises(InputError):
            GridSpec(1.0, 2.0, points_per_decade=0)

    def test_json_roundtrip(self):
        assert GridSpec.from_json(GRID.to_json()) == GRID


class TestIntegrate:
    def test_unit_box(self):
        est = integrate(lambda t: np.ones_like(t), 0.0, 1.0, rel_tol=1e-10)
        assert est.converged
        assert est.value == pytest.approx(1.0, rel=1e-9)

    def test_exp_decay_half_line(self):
        est = integrate(lambda t: np.exp(-t), 0.0, INF, rel_tol=1e-10)
        assert est.value == pytest.approx(1.0, rel=1e-9)

    def test_gamma_two(self):
        # int_0^inf t e^-t dt = Gamma(2) = 1
        est = integrate(lambda t: t * np.exp(-t), 0.0, INF, rel_tol=1e-10)
        assert est.value == pytest.approx(1.0, rel=1e-9)

    def test_finite_window(self):
        est = integrate(lambda t: t ** 2, 2.0, 5.0, rel_tol=1e-12)
        assert est.value == pytest.approx((125.0 - 8.0) / 3.0, rel=1e-11)

    def test_inf_propagates(self):
        def f(t):
            t = np.asarray(t, dtype=float)
            return np.where((t > 0.2) & (t < 0.4), INF, 1.0)

        est = integrate(f, 0.0, 1.0)
        assert est.value == INF

    def test_divergent_tail_is_flagged(self):
        est = integrate(lambda t: 1.0 / t, 0.0, 1.0)
        assert not est.converged

    def test_error_estimate_is_consistent(self):
        est = integrate(lambda t: np.exp(-t), 0.0, INF, rel_tol=1e-8)
        assert est.abs_error <= 1e-6

    def test_deterministic(self):
        f = lambda t: t * np.exp(-0.5 * t)
        a = integrate(f, 0.0, INF, rel_tol=1e-9)
        b = integrate(f, 0.0, INF, rel_tol=1e-9)
        assert a == b

    def test_linearity(self):
        f = lambda t: np.exp(-t)
        g = lambda t: t * np.exp(-t)
        tol = 1e-9
        fa = integrate(f, 0.0, INF, rel_tol=tol)
        ga = integrate(g, 0.0, INF, rel_tol=tol)
        comb = integrate(lambda t: 2.0 * f(t) + 3.0 * g(t), 0.0, INF, rel_tol=tol)
        budget = 2.0 * (2.0 * fa.abs_error + 3.0 * ga.abs_error + comb.abs_error) + 1e-12
        assert abs(comb.value - (2.0 * fa.value + 3.0 * ga.value)) <= budget

    def test_bad_interval(self):
        with pytest.raises(InputError):
            integrate(lambda t: t, 2.0, 1.0)


class TestSup:
    def test_parabola(self):
        est = sup_on_interval(lambda t: t * (1.0 - t), 0.0, 1.0, GRID)
        assert est.value == pytest.approx(0.25, rel=1e-10)
        assert est.argmax == pytest.approx(0.5, rel=1e-5)

    def test_t_exp_decay(self):
        # max of t e^{-t/2} at t=2 equals 2/e
        est = sup_on_interval(lambda t: t * np.exp(-t / 2.0), 0.0, INF, GRID)
        assert est.value == pytest.approx(2.0 / math.e, rel=1e-10)
        assert est.argmax == pytest.approx(2.0, rel=1e-5)

    def test_constant(self):
        est = sup_on_interval(lambda t: np.full_like(np.asarray(t, dtype=float), 3.25),
                              0.0, INF, GRID)
        assert est.value == pytest.approx(3.25)

    def test_inf_propagates(self):
        def f(t):
            t = np.asarray(t, dtype=float)
            out = np.where(t > 1.0, INF, 1.0)
            return out

        est = sup_on_interval(f, 0.0, INF, GRID)
        assert est.value == INF

    def test_refinement_monotone(self):
        f = lambda t: t * np.exp(-t / 2.0)
        coarse = sup_on_interval(f, 0.0, INF, GRID)
        fine = sup_on_interval(f, 0.0, INF, GRID.refined())
        assert fine.value >= coarse.value - 1e-12
