import math

import pytest

from energynet.demand import build_demand_curve
from energynet.errors import BadElasticity


class TestAnchors:
    def test_urban_elasticity_exact(self):
        # 10% price rise cuts an elasticity -0.5 load by exactly 5%
        curve = build_demand_curve(1000.0, 5.0, -0.5)
        assert curve.quantity_at(5.5) == 950.0

    def test_rural_elasticity_exact(self):
        # 10% price rise cuts an elasticity -2.0 load by exactly 20%
        curve = build_demand_curve(1000.0, 5.0, -2.0)
        assert curve.quantity_at(5.5) == 800.0

    def test_baseline_price_gives_baseline_quantity(self):
        curve = build_demand_curve(640.0, 0.71, -0.5)
        assert curve.quantity_at(0.71) == 640.0

    def test_realistic_values_close(self):
        curve = build_demand_curve(800.0, 0.65, -2.0)
        assert curve.quantity_at(1.1 * 0.65) == pytest.approx(640.0, rel=1e-12)


class TestCurveShape:
    def test_inverse_consistency(self):
        curve = build_demand_curve(500.0, 0.8, -1.2)
        for q in (10.0, 250.0, 499.0, 700.0):
            if q < curve.q_zero_kw:
                assert curve.quantity_at(curve.price_at(q)) == pytest.approx(q)

    def test_downward_sloping(self):
        curve = build_demand_curve(300.0, 0.6, -0.7)
        prices = [curve.price_at(q) for q in (0.0, 100.0, 200.0, 300.0, 400.0)]
        assert prices == sorted(prices, reverse=True)

    def test_zero_price_point(self):
        curve = build_demand_curve(100.0, 0.5, -2.0)
        assert curve.q_zero_kw == 300.0
        assert curve.price_at(300.0) == 0.0
        assert curve.quantity_at(0.0) == 300.0

    def test_clipping(self):
        curve = build_demand_curve(100.0, 0.5, -2.0)
        assert curve.quantity_at(10.0) == 0.0
        assert curve.quantity_at(-1.0) == 300.0


class TestUtility:
    def test_marginal_utility_is_price(self):
        curve = build_demand_curve(400.0, 0.7, -0.8)
        h = 1e-5
        for q in (50.0, 200.0, 390.0):
            du = (curve.utility_cny_per_h(q + h) - curve.utility_cny_per_h(q - h)) / (2 * h)
            assert du == pytest.approx(curve.price_at(q), rel=1e-6)

    def test_quadrature_oracle(self):
        # trapezoid integration of the price curve, done independently
        curve = build_demand_curve(250.0, 0.9, -1.5)
        q = 310.0
        steps = 200_000
        total = 0.0
        for i in range(steps):
            a = q * i / steps
            b = q * (i + 1) / steps
            total += 0.5 * (curve.price_at(a) + curve.price_at(b)) * (b - a)
        assert curve.utility_cny_per_h(q) == pytest.approx(total, rel=1e-8)

    def test_concave(self):
        curve = build_demand_curve(100.0, 0.5, -1.0)
        u = [curve.utility_cny_per_h(q) for q in (50.0, 100.0, 150.0)]
        assert u[1] - u[0] > u[2] - u[1]

    def test_flat_beyond_zero_price(self):
        curve = build_demand_curve(100.0, 0.5, -2.0)
        assert curve.utility_cny_per_h(300.0) == curve.utility_cny_per_h(500.0)


class TestValidation:
    @pytest.mark.parametrize("eps", [0.0, 0.5, 2.0])
    def test_nonnegative_elasticity_rejected(self, eps):
        with pytest.raises(BadElasticity):
            build_demand_curve(100.0, 0.5, eps)

    def test_bad_baseline_rejected(self):
        with pytest.raises(BadElasticity):
            build_demand_curve(0.0, 0.5, -1.0)
        with pytest.raises(BadElasticity):
            build_demand_curve(100.0, -0.5, -1.0)
