"""Turn pool fills into settled BEEs: deliver over the stack, apply to the ledger.

Each fill is atomic: the Settle BEE either reaches the receiver and both
profiles are updated, or the matched quantity is restored to the pool.
Settled energy inherits carbon intensity, green fraction, grade and mass
flow from the offer side; the delivery window is the intersection agreed
at match time.
"""

from __future__ import annotations

from .bee import Bee, BeeKind
from .errors import EnergyNetError
from .netstack import Network
from .pool import BeePool, Fill, MatchResult
from .profiles import Ledger


def settle_bee_for_fill(fill: Fill) -> Bee:
    start, end = fill.window
    duration_min = max(1, (end - start) // 60)
    offer = fill.offer.bee
    return Bee(
        kind=BeeKind.SETTLE,
        carrier=offer.carrier,
        quantity_wh=fill.quantity_wh,
        delivery_start=start,
        delivery_duration_min=duration_min,
        price_mcny_per_kwh=fill.price_mcny_per_kwh,
        sender=offer.sender,
        receiver=fill.request.bee.sender,
        carbon_intensity_g_per_kwh=offer.carbon_intensity_g_per_kwh,
        green_fraction_bp=offer.green_fraction_bp,
        grade=offer.grade,
        mass_flow_rate=offer.mass_flow_rate,
    )


def settle_fills(
    result: MatchResult,
    ledger: Ledger,
    network: Network,
    pool: BeePool,
    *,
    connections: dict | None = None,
) -> tuple[list[Bee], list[tuple[Fill, EnergyNetError]]]:
    """Settle every fill of a match result.

    Returns (settled bees, [(fill, error)] for rolled-back fills).  Pass a
    dict as `connections` to reuse handshakes across calls.
    """
    cache = connections if connections is not None else {}
    settled: list[Bee] = []
    failed: list[tuple[Fill, EnergyNetError]] = []
    for fill in result.fills:
        bee = settle_bee_for_fill(fill)
        try:
            key = (bee.sender, bee.receiver)
            conn_id = cache.get(key)
            if conn_id is None:
                conn_id = network.open_connection(
                    network.eip_of(bee.sender), network.eip_of(bee.receiver)
                )
                cache[key] = conn_id
            network.send_bee(conn_id, bee)
        except EnergyNetError as exc:
            pool.restore(fill.offer, fill.quantity_wh)
            pool.restore(fill.request, fill.quantity_wh)
            failed.append((fill, exc))
            continue
        ledger.apply_settlement(bee)
        settled.append(bee)
    return settled, failed
