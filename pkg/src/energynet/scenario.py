"""Day-long comparison of traditional dispatch against pool-mediated exchange.

The day is twelve 2-hour periods.  Traditional mode fixes every consumer at
its baseline (the demand curve's anchor is, by construction, the response
to the reference tariff), keeps storage and EV fleets on their habitual
profiles, and lets the operator dispatch plants and curtail renewables.
Energy Internet mode reuses the traditional run as the operator's forecast:
its nodal prices become the published reference prices and its flows seed
the per-period exchange limits; resources then trade through the pool and
stack, the operator re-dispatches plants around the measured injections,
and the day is accounted resource by resource.

Traditional mode never touches the pool or the protocol stack; the report
records the frame count of each mode so that isolation is checkable.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import agents
from .agents import ResourceSpec, StoragePlan
from .bee import Bee, BeeKind, MacAddress
from .errors import AccountingMismatch, ConfigError, EnergyNetError
from .grid import GridModel, Line
from .isp import (
    ResourceFlow,
    SurplusReport,
    account_surplus,
    compute_limits,
    compute_service_fee,
)
from .netstack import NameRegistry, Network
from .opf import OpfSolution, solve_opf
from .pool import BeePool
from .profiles import Ledger
from .settlement import settle_fills

PERIODS_PER_DAY = 12


class Mode(enum.Enum):
    TRADITIONAL = "traditional"
    ENERGY_INTERNET = "energy_internet"


@dataclass(frozen=True)
class LanSpec:
    subnet: int
    node: str
    hosts: tuple[str, ...] = ()  # MAC strings, informational


@dataclass
class Scenario:
    name: str
    grid: GridModel
    resources: tuple[ResourceSpec, ...]
    lans: tuple[LanSpec, ...]
    wan: int = 1
    mode: Mode = Mode.ENERGY_INTERNET
    seed: int = 0
    period_hours: float = 2.0
    epoch: int = 1_700_000_000

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.grid.n_periods != PERIODS_PER_DAY:
            raise ConfigError(
                f"the day runs {PERIODS_PER_DAY} two-hour periods, grid "
                f"profiles have {self.grid.n_periods}"
            )
        nodes = set(self.grid.nodes)
        lan_nodes = {lan.node for lan in self.lans}
        for res in self.resources:
            if res.node not in nodes:
                raise ConfigError(f"resource {res.name}: unknown node {res.node}")
            if res.node not in lan_nodes:
                raise ConfigError(f"resource {res.name}: node {res.node} has no LAN")
        names = [r.name for r in self.resources]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate resource names")
        macs = [r.mac for r in self.resources]
        if len(set(macs)) != len(macs):
            raise ConfigError("duplicate resource MACs")
        grid_names = {p.name for p in self.grid.plants}
        grid_names |= {r.name for r in self.grid.renewables}
        grid_names |= {l.name for l in self.grid.elastic_loads}
        for res in self.resources:
            if res.type in ("plant", "wind", "solar", "load") \
                    and res.name not in grid_names:
                raise ConfigError(
                    f"resource {res.name} ({res.type}) not present in the grid model"
                )

    def by_type(self, *types: str) -> list[ResourceSpec]:
        return [r for r in self.resources if r.type in types]

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
        grid = GridModel.load(path.parent / raw["grid"])
        try:
            topo = json.loads((path.parent / raw["topology"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read topology: {exc}") from exc
        try:
            resources = tuple(
                ResourceSpec(
                    name=r["name"],
                    type=r["type"],
                    node=r["node"],
                    mac=MacAddress.parse(r["mac"]),
                    power_kw=r.get("power_kw", 0.0),
                    energy_kwh=r.get("energy_kwh", 0.0),
                    allowed_periods=tuple(r.get("allowed_periods", ())),
                    baseline_periods=tuple(r.get("baseline_periods", ())),
                    min_spread_cny=r.get("min_spread_cny", 0.05),
                )
                for r in raw["resources"]
            )
            lans = tuple(
                LanSpec(l["subnet"], l["node"], tuple(l.get("hosts", ())))
                for l in topo["lans"]
            )
            return cls(
                name=raw.get("name", path.stem),
                grid=grid,
                resources=resources,
                lans=lans,
                wan=topo.get("wan", 1),
                mode=Mode(raw.get("mode", "energy_internet")),
                seed=raw.get("seed", 0),
                period_hours=raw.get("period_hours", 2.0),
                epoch=raw.get("epoch", 1_700_000_000),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scenario config: {exc}") from exc


@dataclass
class ModeResult:
    mode: Mode
    solutions: list[OpfSolution]
    period_reports: list[SurplusReport]
    welfare_cny: float
    consumer_cny: float
    producer_cny: float
    grid_surplus_cny: float
    plant_profit_cny: float
    merchandise_cny: float
    carbon_t: float
    thermal_kwh: float
    loss_kwh: float
    curtailed_kwh: float
    resource_surplus_cny: dict[str, float]
    service_fees_cny: dict[str, float] = field(default_factory=dict)
    settled_bees: int = 0
    settled_kwh: float = 0.0
    link_frames: int = 0
    ledger_trade_rows: int = 0


@dataclass
class ScenarioReport:
    scenario: str
    seed: int
    mode: Mode
    period_hours: float
    traditional: ModeResult
    energy_internet: ModeResult | None

    @property
    def welfare_delta_pct(self) -> float | None:
        return self._pct(lambda m: m.welfare_cny)

    @property
    def carbon_delta_pct(self) -> float | None:
        return self._pct(lambda m: m.carbon_t)

    @property
    def grid_surplus_delta_pct(self) -> float | None:
        return self._pct(lambda m: m.grid_surplus_cny)

    def _pct(self, metric) -> float | None:
        if self.energy_internet is None:
            return None
        base = metric(self.traditional)
        if base == 0:
            return None
        return 100.0 * (metric(self.energy_internet) - base) / base

    @property
    def resource_profit_delta_cny(self) -> dict[str, float] | None:
        if self.energy_internet is None:
            return None
        ei = self.energy_internet.resource_surplus_cny
        base = self.traditional.resource_surplus_cny
        return {name: ei[name] - base.get(name, 0.0) for name in ei}


def reference_prices(scenario: Scenario,
                     solutions: list[OpfSolution]) -> dict[str, list[float]]:
    return {
        node: [s.nodal_price_cny_per_kwh[node] for s in solutions]
        for node in scenario.grid.nodes
    }


def _renewable_availability(grid: GridModel, period: int) -> dict[str, float]:
    return {r.name: r.available_kw[period] for r in grid.renewables}


def run_traditional(scenario: Scenario) -> ModeResult:
    """Centralized dispatch: fixed loads, habitual storage/EV, curtailment."""
    grid = scenario.grid
    hours = scenario.period_hours
    solutions: list[OpfSolution] = []
    reports: list[SurplusReport] = []
    curtailed = 0.0
    surplus: dict[str, float] = {r.name: 0.0 for r in scenario.resources
                                 if r.type != "plant"}
    for period in range(PERIODS_PER_DAY):
        injections: dict[str, float] = {}
        ev_kw: dict[str, float] = {}
        for ev in scenario.by_type("ev"):
            kw = agents.ev_baseline_kw(ev, period, hours=hours)
            ev_kw[ev.name] = kw
            if kw:
                injections[ev.node] = injections.get(ev.node, 0.0) - kw
        solution = solve_opf(grid, injections, period, dispatch_renewables=True)
        solutions.append(solution)

        flows: list[ResourceFlow] = []
        for res in scenario.resources:
            if res.type == "plant":
                continue
            if res.type == "load":
                load = next(l for l in grid.elastic_loads if l.name == res.name)
                p0 = load.baseline[period][0]
                curve = load.curve(period)
                flows.append(ResourceFlow(
                    name=res.name, node=res.node, kind="load",
                    physical_kw=-p0,
                    utility_cny=curve.utility_cny_per_h(p0) * hours,
                ))
            elif res.type in ("wind", "solar"):
                out = solution.renewable_dispatch_kw[res.name]
                avail = _renewable_availability(grid, period)[res.name]
                curtailed += (avail - out) * hours
                flows.append(ResourceFlow(
                    name=res.name, node=res.node, kind=res.type,
                    physical_kw=out,
                ))
            elif res.type == "battery":
                flows.append(ResourceFlow(
                    name=res.name, node=res.node, kind="battery",
                    physical_kw=0.0,
                ))
            elif res.type == "ev":
                flows.append(ResourceFlow(
                    name=res.name, node=res.node, kind="ev",
                    physical_kw=-ev_kw[res.name],
                ))
        report = account_surplus(solution, flows, grid, period_hours=hours)
        reports.append(report)
        for name, value in report.consumer_surplus_cny.items():
            surplus[name] += value
        for name, value in report.producer_surplus_cny.items():
            surplus[name] += value
    return _assemble(Mode.TRADITIONAL, scenario, solutions, reports, surplus,
                     curtailed, {}, 0, 0.0, 0, 0)


def _assemble(mode, scenario, solutions, reports, surplus, curtailed, fees,
              settled_bees, settled_kwh, link_frames, ledger_rows) -> ModeResult:
    hours = scenario.period_hours
    total_fees = sum(fees.values())
    for name, fee in fees.items():
        surplus[name] = surplus.get(name, 0.0) - fee
    kinds = {r.name: r.type for r in scenario.resources}
    consumer = sum(v for n, v in surplus.items() if kinds[n] == "load")
    producer = sum(v for n, v in surplus.items() if kinds[n] != "load")
    grid_surplus = sum(r.grid_surplus_cny for r in reports) + total_fees
    return ModeResult(
        mode=mode,
        solutions=solutions,
        period_reports=reports,
        welfare_cny=sum(r.welfare_cny for r in reports),
        consumer_cny=consumer,
        producer_cny=producer,
        grid_surplus_cny=grid_surplus,
        plant_profit_cny=sum(r.plant_profit_cny for r in reports),
        merchandise_cny=sum(r.merchandise_surplus_cny for r in reports),
        carbon_t=sum(r.carbon_t for r in reports),
        thermal_kwh=sum(
            sum(s.plant_dispatch_kw.values()) * hours for s in solutions),
        loss_kwh=sum(s.total_loss_kw * hours for s in solutions),
        curtailed_kwh=curtailed,
        resource_surplus_cny=surplus,
        service_fees_cny=fees,
        settled_bees=settled_bees,
        settled_kwh=settled_kwh,
        link_frames=link_frames,
        ledger_trade_rows=ledger_rows,
    )


def _headroom_with_local_demand(grid: GridModel):
    """Exchange-limit policy for the day-ahead forecast: a node's resources
    may move what its line can still carry plus what neighbors at the node
    itself can absorb (local trades never load the line)."""
    local_max = {n: 0.0 for n in grid.nodes}
    for load in grid.elastic_loads:
        worst = max(p0 * (1 - load.elasticity) for p0, _ in load.baseline)
        local_max[load.node] += worst

    def policy(node: str, line: Line, flow_kw: float) -> float:
        return max(line.limit_kw - abs(flow_kw), 0.0) + local_max[node]

    return policy


def run_energy_internet(scenario: Scenario,
                        baseline: ModeResult) -> ModeResult:
    grid = scenario.grid
    hours = scenario.period_hours
    prices = reference_prices(scenario, baseline.solutions)
    sys_price = [
        sum(s.nodal_price_cny_per_kwh.values()) / len(grid.nodes)
        for s in baseline.solutions
    ]

    ledger = Ledger()
    network = Network(ledger)
    names = NameRegistry(network)
    node_lan = {}
    for lan in scenario.lans:
        node_lan[lan.node] = network.add_lan(scenario.wan, lan.subnet)
    eip_of = {}
    for res in scenario.resources:
        ledger.register_card(res.mac, res.name)
        eip_of[res.name] = network.assign_eip(node_lan[res.node], res.mac)
        names.register(res.name, res.mac)
    pool = BeePool()
    connections: dict = {}

    plans: dict[str, StoragePlan] = {}
    for battery in scenario.by_type("battery"):
        plans[battery.name] = agents.plan_battery(battery, sys_price, hours=hours)
    for ev in scenario.by_type("ev"):
        plans[ev.name] = agents.plan_ev(
            ev, prices[ev.node], hours=hours)

    policy = _headroom_with_local_demand(grid)
    attached: dict[str, list] = {}
    for res in scenario.resources:
        if res.type != "plant":
            attached.setdefault(res.node, []).append(eip_of[res.name])

    solutions: list[OpfSolution] = []
    reports: list[SurplusReport] = []
    surplus: dict[str, float] = {r.name: 0.0 for r in scenario.resources
                                 if r.type != "plant"}
    usage_kwh: dict[str, float] = {r.name: 0.0 for r in scenario.resources}
    all_settled: list[Bee] = []

    for period in range(PERIODS_PER_DAY):
        network.start_period()
        static, dynamic = compute_limits(
            grid, baseline.solutions[period], attached,
            period_hours=hours, policy=policy)
        for res in scenario.resources:
            if res.type == "plant":
                continue
            eip = eip_of[res.name]
            network.set_static_limit(eip, static.get(eip))
            network.update_dynamic_limit(eip, dynamic.get(eip))

        avail = _renewable_availability(grid, period)
        now = scenario.epoch + round(period * hours * 3600)
        settled_this_period: list[Bee] = []

        for res in scenario.resources:
            bees: list[Bee] = []
            if res.type in ("wind", "solar"):
                bees = agents.renewable_offers(
                    res, avail[res.name], period, prices[res.node][period],
                    hours=hours, epoch=scenario.epoch)
            elif res.type == "load":
                load = next(l for l in grid.elastic_loads if l.name == res.name)
                bees = agents.load_requests(
                    res, load.curve(period), period, prices[res.node][period],
                    hours=hours, epoch=scenario.epoch)
            elif res.type in ("battery", "ev"):
                bee = agents.storage_bee(
                    res, plans[res.name].kw(period), period,
                    prices[res.node][period], hours=hours, epoch=scenario.epoch)
                bees = [bee] if bee is not None else []
            for bee in bees:
                result = pool.submit(bee, now=now)
                settled, _failed = settle_fills(
                    result, ledger, network, pool, connections=connections)
                settled_this_period.extend(settled)

        pool_bought: dict[str, tuple[float, float]] = {}
        pool_sold: dict[str, tuple[float, float]] = {}
        mac_name = {r.mac: r.name for r in scenario.resources}
        for bee in settled_this_period:
            kwh = bee.quantity_wh / 1000.0
            cny = bee.quantity_wh * bee.price_mcny_per_kwh / 1e6
            seller = mac_name[bee.sender]
            buyer = mac_name[bee.receiver]
            s_kwh, s_cny = pool_sold.get(seller, (0.0, 0.0))
            pool_sold[seller] = (s_kwh + kwh, s_cny + cny)
            b_kwh, b_cny = pool_bought.get(buyer, (0.0, 0.0))
            pool_bought[buyer] = (b_kwh + kwh, b_cny + cny)
            usage_kwh[seller] += kwh
            usage_kwh[buyer] += kwh

        injections: dict[str, float] = {}
        loads_kw: dict[str, float] = {n: 0.0 for n in grid.nodes}
        for fl in grid.fixed_loads:
            loads_kw[fl.node] += fl.kw[period]
        flows: list[ResourceFlow] = []
        hub_price = prices[grid.nodes[0]][period]
        for res in scenario.resources:
            if res.type == "plant":
                continue
            bought_kwh, paid = pool_bought.get(res.name, (0.0, 0.0))
            sold_kwh, earned = pool_sold.get(res.name, (0.0, 0.0))
            if res.type in ("wind", "solar"):
                physical = avail[res.name]
                utility = 0.0
            elif res.type in ("battery", "ev"):
                physical = plans[res.name].kw(period)
                utility = 0.0
            else:
                load = next(l for l in grid.elastic_loads if l.name == res.name)
                curve = load.curve(period)
                grid_response = curve.quantity_at(max(
                    prices[res.node][period], hub_price))
                physical = -max(bought_kwh / hours, grid_response)
                utility = curve.utility_cny_per_h(-physical) * hours
            if physical > 0:
                injections[res.node] = injections.get(res.node, 0.0) + physical
            else:
                loads_kw[res.node] += -physical
            flows.append(ResourceFlow(
                name=res.name, node=res.node,
                kind=res.type, physical_kw=physical,
                pool_bought_kwh=bought_kwh, pool_paid_cny=paid,
                pool_sold_kwh=sold_kwh, pool_revenue_cny=earned,
                utility_cny=utility,
            ))

        solution = solve_opf(grid, injections, period, loads=loads_kw,
                             dispatch_renewables=False)
        solutions.append(solution)
        report = account_surplus(solution, flows, grid, period_hours=hours)
        reports.append(report)
        for name, value in report.consumer_surplus_cny.items():
            surplus[name] += value
        for name, value in report.producer_surplus_cny.items():
            surplus[name] += value
        all_settled.extend(settled_this_period)

    # daily service fee: the operator's floor is a 10% profit on its costs
    opf_cost = sum(s.total_cost_cny_per_h * hours for s in solutions)
    grid_revenue = -sum(
        rev for r in reports for rev in r.resource_grid_revenue_cny.values())
    fees = compute_service_fee(
        opf_cost, grid_revenue,
        {n: u for n, u in usage_kwh.items() if u > 0})

    settled_kwh = sum(b.quantity_wh for b in all_settled) / 1000.0
    ledger_rows = sum(
        len(ledger.query_profile(r.mac).trades) for r in scenario.resources)
    if ledger_rows != 2 * len(all_settled):
        raise AccountingMismatch(
            f"ledger holds {ledger_rows} trade rows for {len(all_settled)} settles")
    delivered = sum(len(network.delivered(r.mac)) for r in scenario.resources)
    if delivered != len(all_settled):
        raise AccountingMismatch(
            f"stack delivered {delivered} BEEs, pool settled {len(all_settled)}")

    link_frames = sum(1 for t in network.trace if t.layer == "link")
    return _assemble(Mode.ENERGY_INTERNET, scenario, solutions, reports,
                     surplus, 0.0, fees, len(all_settled), settled_kwh,
                     link_frames, ledger_rows)


def run_scenario(scenario: Scenario) -> ScenarioReport:
    traditional = run_traditional(scenario)
    ei = None
    if scenario.mode is Mode.ENERGY_INTERNET:
        ei = run_energy_internet(scenario, traditional)
    return ScenarioReport(
        scenario=scenario.name,
        seed=scenario.seed,
        mode=scenario.mode,
        period_hours=scenario.period_hours,
        traditional=traditional,
        energy_internet=ei,
    )
