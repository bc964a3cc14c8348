"""Operator-side services: exchange limits, decoupling checks, fees, surplus.

The operator never sees individual pool trades; it works from nodal
injections and the solved dispatch, publishes per-address quantity limits,
and accounts the day in three buckets: consumer surplus, resource
(producer) surplus and grid surplus = plant profit + merchandise surplus
+ service fees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .bee import Bee
from .errors import AccountingMismatch, ConfigError
from .grid import GridModel, Line
from .opf import OpfSolution, solve_opf

MIN_GRID_PROFIT_RATE = 0.10


# ----------------------------------------------------------------------
# quantity limits
# ----------------------------------------------------------------------

HeadroomPolicy = Callable[[str, Line, float], float]


def line_headroom_policy(node: str, line: Line, flow_kw: float) -> float:
    """Default: what the attachment line can still carry this period."""
    return max(line.limit_kw - abs(flow_kw), 0.0)


def _attachment_lines(grid: GridModel, hub: str) -> dict[str, Line]:
    """Map each node to its first line on the path toward the hub."""
    adj: dict[str, list[tuple[str, Line]]] = {n: [] for n in grid.nodes}
    for line in grid.lines:
        adj[line.from_node].append((line.to_node, line))
        adj[line.to_node].append((line.from_node, line))
    attach: dict[str, Line] = {}
    seen = {hub}
    frontier = [hub]
    while frontier:
        cur = frontier.pop(0)
        for nbr, line in adj[cur]:
            if nbr not in seen:
                seen.add(nbr)
                attach[nbr] = line
                frontier.append(nbr)
    return attach


def compute_limits(
    grid: GridModel,
    solution: OpfSolution,
    attached: Mapping[str, Sequence[Hashable]],
    *,
    period_hours: float = 2.0,
    hub: str | None = None,
    policy: HeadroomPolicy = line_headroom_policy,
) -> tuple[dict[Hashable, float | None], dict[Hashable, float | None]]:
    """Per-resource static and dynamic limits in kWh for one period.

    attached: node -> resource ids (Energy IP addresses, typically).  The
    headroom of a node's attachment line is split equally among the
    resources attached there; resources at the hub node are unlimited.
    """
    hub = hub if hub is not None else grid.nodes[0]
    attach = _attachment_lines(grid, hub)
    static: dict[Hashable, float | None] = {}
    for node, ids in attached.items():
        if not ids:
            continue
        line = attach.get(node)
        if line is None:  # hub itself: no single constraining line
            for rid in ids:
                static[rid] = None
            continue
        flow = solution.line_flow_kw[(line.from_node, line.to_node)]
        headroom_kwh = policy(node, line, flow) * period_hours
        share = headroom_kwh / len(ids)
        for rid in ids:
            static[rid] = share
    return static, dict(static)


# ----------------------------------------------------------------------
# decoupling
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DecouplingReport:
    injection_delta_kw: dict[str, float]
    baseline: OpfSolution
    adjusted: OpfSolution

    @property
    def decoupled(self) -> bool:
        return all(v == 0.0 for v in self.injection_delta_kw.values())

    @property
    def identical(self) -> bool:
        return self.baseline == self.adjusted


def verify_decoupling(
    grid: GridModel,
    trades: Sequence[Bee],
    baseline_injections: Mapping[str, float],
    mac_to_node: Mapping,
    *,
    covered: Iterable[int] = (),
    period: int = 0,
    period_hours: float = 2.0,
    loads: Mapping[str, float] | None = None,
    dispatch_renewables: bool = True,
) -> DecouplingReport:
    """Re-solve with the trade set applied and compare against the baseline.

    A trade whose index appears in `covered` is already reflected in the
    baseline injections (the parties would have exchanged the same energy
    with the grid anyway) and contributes zero delta.  Anything else moves
    quantity/period_hours kW from the buyer's node to the seller's node.
    """
    covered = set(covered)
    deltas = {n: 0.0 for n in grid.nodes}
    for i, bee in enumerate(trades):
        if i in covered:
            continue
        kw = bee.quantity_wh / 1000.0 / period_hours
        try:
            seller = mac_to_node[bee.sender]
            buyer = mac_to_node[bee.receiver]
        except KeyError as exc:
            raise ConfigError(f"trade party not mapped to a node: {exc}") from exc
        deltas[seller] += kw
        deltas[buyer] -= kw

    base = dict(baseline_injections)
    kwargs = dict(period=period, loads=dict(loads) if loads is not None else None,
                  dispatch_renewables=dispatch_renewables)
    baseline_solution = solve_opf(grid, base, **kwargs)
    adjusted = {n: base.get(n, 0.0) + deltas[n] for n in grid.nodes}
    adjusted_solution = solve_opf(grid, adjusted, **kwargs)
    return DecouplingReport(
        injection_delta_kw=deltas,
        baseline=baseline_solution,
        adjusted=adjusted_solution,
    )


# ----------------------------------------------------------------------
# service fee
# ----------------------------------------------------------------------

def compute_service_fee(
    opf_cost_cny: float,
    grid_revenue_cny: float,
    usage_kwh: Mapping[Hashable, float],
) -> dict[Hashable, float]:
    """Proportional deficit recovery up to a 10% grid profit floor.

    If revenue - cost already clears cost/10, every fee is zero; otherwise
    the shortfall is split across participants pro rata to network usage.
    """
    profit = grid_revenue_cny - opf_cost_cny
    required = opf_cost_cny / 10.0
    fees = {rid: 0.0 for rid in usage_kwh}
    if profit >= required:
        return fees
    deficit = required - profit
    total = sum(usage_kwh.values())
    if total <= 0:
        return fees
    for rid, used in usage_kwh.items():
        fees[rid] = deficit * used / total
    return fees


# ----------------------------------------------------------------------
# surplus accounting
# ----------------------------------------------------------------------

CONSUMER_KINDS = ("load",)


@dataclass
class ResourceFlow:
    """One resource's physical and commercial position for a period."""

    name: str
    node: str
    kind: str  # load | wind | solar | battery | ev
    physical_kw: float  # positive = injection into the node
    pool_bought_kwh: float = 0.0
    pool_paid_cny: float = 0.0
    pool_sold_kwh: float = 0.0
    pool_revenue_cny: float = 0.0
    utility_cny: float = 0.0
    service_fee_cny: float = 0.0

    def grid_settle_kwh(self, period_hours: float) -> float:
        """Energy settled with the grid after netting pool positions."""
        return (self.physical_kw * period_hours
                - (self.pool_sold_kwh - self.pool_bought_kwh))


@dataclass(frozen=True)
class SurplusReport:
    consumer_surplus_cny: dict[str, float]
    producer_surplus_cny: dict[str, float]
    plant_profit_cny: float
    merchandise_surplus_cny: float
    service_fee_cny: float
    grid_surplus_cny: float
    carbon_t: float
    welfare_cny: float
    resource_grid_revenue_cny: dict[str, float] = field(default_factory=dict)


def account_surplus(
    solution: OpfSolution,
    resources: Sequence[ResourceFlow],
    grid: GridModel,
    *,
    period_hours: float = 2.0,
    tolerance: float = 1e-6,
) -> SurplusReport:
    """Partition one period's welfare into consumer/resource/grid surpluses.

    Welfare is defined as the sum of the three buckets (one arithmetic
    path, so the partition identity is exact); an independently computed
    utilities-minus-costs figure must agree within `tolerance` or the
    period is rejected as mis-accounted.
    """
    price = solution.nodal_price_cny_per_kwh
    consumer: dict[str, float] = {}
    producer: dict[str, float] = {}
    grid_rev: dict[str, float] = {}

    resources_to_grid = 0.0
    for res in resources:
        settle_kwh = res.grid_settle_kwh(period_hours)
        revenue = settle_kwh * price[res.node]
        grid_rev[res.name] = revenue
        resources_to_grid -= revenue
        surplus = (res.utility_cny + res.pool_revenue_cny - res.pool_paid_cny
                   + revenue - res.service_fee_cny)
        if res.kind in CONSUMER_KINDS:
            consumer[res.name] = surplus
        else:
            producer[res.name] = surplus

    plant_revenue = 0.0
    plant_cost = 0.0
    thermal_kwh = 0.0
    carbon_g = 0.0
    for plant in grid.plants:
        out = solution.plant_dispatch_kw[plant.name]
        kwh = out * period_hours
        plant_revenue += kwh * price[plant.node]
        plant_cost += plant.cost_cny_per_h(out) * period_hours
        thermal_kwh += kwh
        carbon_g += kwh * plant.carbon_g_per_kwh

    fees = sum(res.service_fee_cny for res in resources)
    plant_profit = plant_revenue - plant_cost
    merchandise = resources_to_grid - plant_revenue
    grid_surplus = plant_profit + merchandise + fees

    welfare = sum(consumer.values()) + sum(producer.values()) + grid_surplus
    # pool payments are peer-to-peer transfers: every CNY paid must show up
    # as someone's revenue, or the books do not close
    pool_net = sum(res.pool_revenue_cny - res.pool_paid_cny for res in resources)
    if abs(pool_net) > tolerance * max(
            1.0, sum(res.pool_paid_cny for res in resources)):
        raise AccountingMismatch(f"pool payments off by {pool_net:.9f} CNY")
    # independent welfare figure: all transfers cancel, value minus cost
    direct = sum(res.utility_cny for res in resources) - plant_cost
    if abs(welfare - direct - pool_net) > tolerance * max(1.0, abs(direct)):
        raise AccountingMismatch(
            f"partition {welfare:.9f} vs direct {direct + pool_net:.9f}"
        )
    return SurplusReport(
        consumer_surplus_cny=consumer,
        producer_surplus_cny=producer,
        plant_profit_cny=plant_profit,
        merchandise_surplus_cny=merchandise,
        service_fee_cny=fees,
        grid_surplus_cny=grid_surplus,
        carbon_t=carbon_g / 1e6,
        welfare_cny=welfare,
        resource_grid_revenue_cny=grid_rev,
    )
