"""Rule-based bidding behavior for the pool session of each period.

These rules are intentionally simple and deterministic; they exist to
exercise the exchange machinery, not to be clever.  Agents know reference
prices (the operator's published per-node price curve from the no-trading
baseline) but nothing about the network itself, so their behavior is
price-taking and myopic:

  * renewables ladder their available energy as ascending asks below the
    reference price, so local buyers clear the cheap tranches first;
  * elastic loads ladder requests down their demand curve, with every bid
    capped just under the reference price (never pay the pool more than
    the grid would charge);
  * storage picks its charge/discharge periods from the reference price
    spread; the physical schedule is committed, the pool only decides who
    gets paid;
  * EV fleets move their required charge to the cheapest allowed periods.

Quantities are watt-hours over the period; prices integer milli-CNY/kWh.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bee import Bee, BeeKind, Carrier, MacAddress, ZERO_MAC
from .demand import DemandCurve

ASK_LADDER = (0.10, 0.35, 0.60, 0.85)
LOAD_TRANCHES = 6
GRID_PRICE_CAP = 0.99  # never bid the pool above this fraction of grid price
DISCHARGE_DISCOUNT = 0.95


@dataclass(frozen=True)
class ResourceSpec:
    name: str
    type: str  # plant | wind | solar | battery | ev | load
    node: str
    mac: MacAddress
    power_kw: float = 0.0
    energy_kwh: float = 0.0
    allowed_periods: tuple[int, ...] = ()
    baseline_periods: tuple[int, ...] = ()
    min_spread_cny: float = 0.05


def _mcny(price_cny: float) -> int:
    return max(0, round(price_cny * 1000.0))


def _window(period: int, epoch: int, hours: float) -> tuple[int, int]:
    start = epoch + round(period * hours * 3600)
    return start, round(hours * 60)


def renewable_offers(spec: ResourceSpec, available_kw: float, period: int,
                     ref_price_cny: float, *, hours: float, epoch: int) -> list[Bee]:
    """Ladder the full availability as ascending asks (floor 1 mCNY)."""
    if available_kw <= 0:
        return []
    start, minutes = _window(period, epoch, hours)
    total_wh = round(available_kw * hours * 1000.0)
    share = total_wh // len(ASK_LADDER)
    offers = []
    for i, frac in enumerate(ASK_LADDER):
        wh = share if i < len(ASK_LADDER) - 1 else total_wh - share * (len(ASK_LADDER) - 1)
        if wh <= 0:
            continue
        offers.append(Bee(
            kind=BeeKind.OFFER,
            carrier=Carrier.ELECTRICITY,
            quantity_wh=wh,
            delivery_start=start,
            delivery_duration_min=minutes,
            price_mcny_per_kwh=max(1, _mcny(frac * ref_price_cny)),
            sender=spec.mac,
            receiver=ZERO_MAC,
            green_fraction_bp=10000,
            carbon_intensity_g_per_kwh=0,
        ))
    return offers


def load_requests(spec: ResourceSpec, curve: DemandCurve, period: int,
                  ref_price_cny: float, *, hours: float, epoch: int,
                  tranches: int = LOAD_TRANCHES) -> list[Bee]:
    """Ladder requests down the demand curve, never above the grid price."""
    start, minutes = _window(period, epoch, hours)
    q_max = curve.q_zero_kw
    cap = GRID_PRICE_CAP * ref_price_cny
    bees = []
    prev = 0.0
    for k in range(1, tranches + 1):
        q_hi = q_max * k / tranches
        bid = min(curve.price_at(q_hi), cap)
        wh = round((q_hi - prev) * hours * 1000.0)
        prev = q_hi
        if _mcny(bid) < 1 or wh <= 0:
            continue
        bees.append(Bee(
            kind=BeeKind.REQUEST,
            carrier=Carrier.ELECTRICITY,
            quantity_wh=wh,
            delivery_start=start,
            delivery_duration_min=minutes,
            price_mcny_per_kwh=_mcny(bid),
            sender=spec.mac,
            receiver=ZERO_MAC,
        ))
    return bees


def storage_bee(spec: ResourceSpec, schedule_kw: float, period: int,
                ref_price_cny: float, *, hours: float, epoch: int) -> Bee | None:
    """One request (charging) or ladder-free offer (discharging) per period."""
    if schedule_kw == 0.0:
        return None
    start, minutes = _window(period, epoch, hours)
    wh = round(abs(schedule_kw) * hours * 1000.0)
    if schedule_kw < 0:  # charging: buy just under the grid price
        return Bee(
            kind=BeeKind.REQUEST,
            carrier=Carrier.ELECTRICITY,
            quantity_wh=wh,
            delivery_start=start,
            delivery_duration_min=minutes,
            price_mcny_per_kwh=max(1, _mcny(GRID_PRICE_CAP * ref_price_cny)),
            sender=spec.mac,
            receiver=ZERO_MAC,
        )
    return Bee(
        kind=BeeKind.OFFER,
        carrier=Carrier.ELECTRICITY,
        quantity_wh=wh,
        delivery_start=start,
        delivery_duration_min=minutes,
        price_mcny_per_kwh=max(1, _mcny(DISCHARGE_DISCOUNT * ref_price_cny)),
        sender=spec.mac,
        receiver=ZERO_MAC,
    )


@dataclass
class StoragePlan:
    """Per-period committed power: negative while charging, positive while
    discharging, zero otherwise.  Energy-neutral over the day."""

    schedule_kw: dict[int, float] = field(default_factory=dict)

    def kw(self, period: int) -> float:
        return self.schedule_kw.get(period, 0.0)

    @property
    def throughput_kwh(self) -> float:
        return sum(v for v in self.schedule_kw.values() if v > 0)


def plan_battery(spec: ResourceSpec, ref_prices_cny: list[float],
                 *, hours: float) -> StoragePlan:
    """Pair cheapest and dearest periods while the spread clears the bar."""
    if spec.power_kw <= 0 or spec.energy_kwh <= 0:
        return StoragePlan()
    blocks = int(spec.energy_kwh // (spec.power_kw * hours))
    order = sorted(range(len(ref_prices_cny)), key=lambda p: (ref_prices_cny[p], p))
    cheap = [p for p in order][:blocks]
    dear = [p for p in reversed(order) if p not in cheap][:blocks]
    plan = StoragePlan()
    for c, d in zip(sorted(cheap), sorted(dear)):
        if ref_prices_cny[d] - ref_prices_cny[c] < spec.min_spread_cny:
            continue
        plan.schedule_kw[c] = -spec.power_kw
        plan.schedule_kw[d] = spec.power_kw
    return plan


def plan_ev(spec: ResourceSpec, ref_prices_cny: list[float],
            *, hours: float) -> StoragePlan:
    """Charge the required energy in the cheapest allowed periods."""
    if spec.power_kw <= 0 or spec.energy_kwh <= 0:
        return StoragePlan()
    allowed = spec.allowed_periods or tuple(range(len(ref_prices_cny)))
    order = sorted(allowed, key=lambda p: (ref_prices_cny[p], p))
    plan = StoragePlan()
    remaining = spec.energy_kwh
    for p in order:
        if remaining <= 0:
            break
        kw = min(spec.power_kw, remaining / hours)
        plan.schedule_kw[p] = -kw
        remaining -= kw * hours
    return plan


def ev_baseline_kw(spec: ResourceSpec, period: int, *, hours: float) -> float:
    """Fixed pre-Internet charging profile (evening habit), as consumption."""
    if not spec.baseline_periods or period not in spec.baseline_periods:
        return 0.0
    return spec.energy_kwh / len(spec.baseline_periods) / hours
