import pytest

from energynet.bee import BeeKind
from energynet.errors import AccountingMismatch
from energynet.grid import FixedLoad, GridModel, Line, Plant
from energynet.isp import (
    ResourceFlow,
    account_surplus,
    compute_limits,
    compute_service_fee,
    verify_decoupling,
)
from energynet.opf import solve_opf

from conftest import mac, make_bee


def feeder_grid(load_kw=0.0, limit_kw=50.0):
    return GridModel(
        nodes=("hub", "spur"),
        lines=(Line("hub", "spur", 0.02, limit_kw),),
        plants=(Plant("gen", "hub", 0.0008, 0.55, 1000.0),),
        fixed_loads=(FixedLoad("spur-load", "spur", (load_kw,)),),
        name="feeder",
    )


class TestComputeLimits:
    def test_sole_user_on_unloaded_line(self):
        # 50 kW of headroom for two hours is a 100 kWh ceiling
        grid = feeder_grid(load_kw=0.0)
        sol = solve_opf(grid)
        static, dynamic = compute_limits(
            grid, sol, {"spur": ["eip-1"]}, period_hours=2.0)
        assert static["eip-1"] == pytest.approx(100.0, abs=1e-6)
        assert dynamic == static

    def test_pro_rata_between_two_users(self):
        grid = feeder_grid(load_kw=0.0)
        sol = solve_opf(grid)
        static, _ = compute_limits(
            grid, sol, {"spur": ["eip-1", "eip-2"]}, period_hours=2.0)
        assert static["eip-1"] == pytest.approx(50.0, abs=1e-6)
        assert static["eip-2"] == pytest.approx(50.0, abs=1e-6)

    def test_saturated_line_gives_zero(self):
        # cheap import maxes the 50 kW line; a dear local unit covers the rest
        grid = GridModel(
            nodes=("hub", "spur"),
            lines=(Line("hub", "spur", 0.02, 50.0),),
            plants=(Plant("cheap", "hub", 0.0008, 0.55, 1000.0),
                    Plant("dear", "spur", 0.0008, 1.20, 1000.0)),
            fixed_loads=(FixedLoad("spur-load", "spur", (200.0,)),),
            name="saturated",
        )
        sol = solve_opf(grid)
        assert abs(abs(sol.line_flow_kw[("hub", "spur")]) - 50.0) < 1e-6
        static, dynamic = compute_limits(grid, sol, {"spur": ["eip-1"]})
        assert static["eip-1"] == pytest.approx(0.0, abs=1e-6)
        assert dynamic["eip-1"] == pytest.approx(0.0, abs=1e-6)

    def test_hub_resources_unlimited(self):
        grid = feeder_grid()
        sol = solve_opf(grid)
        static, _ = compute_limits(grid, sol, {"hub": ["eip-9"]})
        assert static["eip-9"] is None


class TestServiceFee:
    def test_healthy_profit_no_fee(self):
        fees = compute_service_fee(100.0, 115.0, {"a": 3.0, "b": 1.0})
        assert fees == {"a": 0.0, "b": 0.0}

    def test_deficit_split_pro_rata(self):
        fees = compute_service_fee(100.0, 105.0, {"a": 3.0, "b": 1.0})
        assert fees["a"] + fees["b"] == 5.0
        assert fees["a"] == 3.75 and fees["b"] == 1.25

    def test_single_participant_pays_all(self):
        fees = compute_service_fee(100.0, 105.0, {"solo": 7.0})
        assert fees == {"solo": 5.0}

    def test_exactly_ten_percent_no_fee(self):
        fees = compute_service_fee(100.0, 110.0, {"a": 1.0})
        assert fees == {"a": 0.0}

    def test_no_usage_no_fee(self):
        assert compute_service_fee(100.0, 50.0, {}) == {}


class TestDecoupling:
    def grid(self):
        return GridModel(
            nodes=("hub", "east", "west"),
            lines=(Line("hub", "east", 0.02, 1000.0),
                   Line("hub", "west", 0.02, 1000.0)),
            plants=(Plant("gen", "hub", 0.0008, 0.55, 2000.0),),
            fixed_loads=(FixedLoad("east-load", "east", (300.0,)),
                         FixedLoad("west-load", "west", (200.0,))),
            name="tri",
        )

    def test_covered_trades_change_nothing(self):
        grid = self.grid()
        trades = [make_bee(quantity_wh=20_000, sender=mac(1), receiver=mac(2))]
        report = verify_decoupling(
            grid, trades, {"east": 50.0},
            {mac(1): "east", mac(2): "west"}, covered={0})
        assert report.decoupled
        assert report.identical  # bit-for-bit equal dispatch, flows, prices

    def test_empty_trades_decoupled(self):
        report = verify_decoupling(self.grid(), [], {}, {})
        assert report.decoupled and report.identical

    def test_shifting_trade_moves_two_nodes(self):
        grid = self.grid()
        trades = [make_bee(quantity_wh=20_000, sender=mac(1), receiver=mac(2))]
        report = verify_decoupling(
            grid, trades, {}, {mac(1): "east", mac(2): "west"})
        assert report.injection_delta_kw == {
            "hub": 0.0, "east": 10.0, "west": -10.0}
        assert not report.decoupled
        assert not report.identical


class TestSurplus:
    def test_lossless_single_node_has_zero_merchandise(self):
        grid = GridModel(
            nodes=("bus",), lines=(),
            plants=(Plant("gen", "bus", 0.0008, 0.55, 2000.0),),
            fixed_loads=(FixedLoad("town", "bus", (500.0,)),),
            name="island",
        )
        sol = solve_opf(grid)
        price = sol.nodal_price_cny_per_kwh["bus"]
        resources = [ResourceFlow(
            name="town", node="bus", kind="load", physical_kw=-500.0,
            utility_cny=2.0 * 500.0 * 1.2)]
        report = account_surplus(sol, resources, grid, period_hours=2.0)
        assert report.merchandise_surplus_cny == pytest.approx(0.0, abs=1e-9)
        assert report.consumer_surplus_cny["town"] == pytest.approx(
            1200.0 - price * 1000.0)
        assert report.grid_surplus_cny == pytest.approx(
            report.plant_profit_cny)

    def test_carbon_factor(self):
        # 1 MWh of thermal generation at the default intensity is 0.55 t
        grid = GridModel(
            nodes=("bus",), lines=(),
            plants=(Plant("gen", "bus", 0.0008, 0.55, 2000.0),),
            fixed_loads=(FixedLoad("town", "bus", (500.0,)),),
            name="island",
        )
        sol = solve_opf(grid)
        resources = [ResourceFlow(
            name="town", node="bus", kind="load", physical_kw=-500.0,
            utility_cny=1500.0)]
        report = account_surplus(sol, resources, grid, period_hours=2.0)
        assert report.carbon_t == pytest.approx(0.55, rel=1e-12)

    def test_partition_sums_to_welfare(self):
        grid = GridModel(
            nodes=("hub", "spur"),
            lines=(Line("hub", "spur", 0.05, 500.0),),
            plants=(Plant("gen", "hub", 0.0008, 0.55, 2000.0),),
            fixed_loads=(FixedLoad("town", "spur", (400.0,)),),
            name="pairt",
        )
        # the OPF must see the solar injection the resource flows describe
        sol = solve_opf(grid, injections={"spur": 50.0})
        resources = [
            ResourceFlow(name="town", node="spur", kind="load",
                         physical_kw=-400.0, utility_cny=900.0,
                         pool_bought_kwh=100.0, pool_paid_cny=55.0),
            ResourceFlow(name="pv", node="spur", kind="solar",
                         physical_kw=50.0, pool_sold_kwh=100.0,
                         pool_revenue_cny=55.0),
        ]
        report = account_surplus(sol, resources, grid, period_hours=2.0)
        total = (sum(report.consumer_surplus_cny.values())
                 + sum(report.producer_surplus_cny.values())
                 + report.grid_surplus_cny)
        assert total == report.welfare_cny  # identical arithmetic path
        # lossy export: loads pay more than generators receive
        assert report.merchandise_surplus_cny > 0

    def test_mismatched_books_raise(self):
        grid = GridModel(
            nodes=("bus",), lines=(),
            plants=(Plant("gen", "bus", 0.0008, 0.55, 2000.0),),
            fixed_loads=(FixedLoad("town", "bus", (500.0,)),),
            name="island",
        )
        sol = solve_opf(grid)
        lopsided = [ResourceFlow(
            name="town", node="bus", kind="load", physical_kw=-500.0,
            utility_cny=1000.0, pool_paid_cny=123.0)]  # paid with no seller
        with pytest.raises(AccountingMismatch):
            account_surplus(sol, lopsided, grid, period_hours=2.0)
