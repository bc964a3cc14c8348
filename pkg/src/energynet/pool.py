"""Pool of resting BEE offers and requests with best-match search.

Matching is continuous-double-auction style: price priority, FIFO within
equal price, every fill clearing at the offer side's ask.  Compatibility
needs equal carrier, a nonempty delivery-window intersection and a price
cross.  Whatever the incoming BEE cannot fill rests in the pool with a
fresh arrival number; entries whose delivery window has fully passed are
skipped (and dropped) at match time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bee import Bee, BeeKind
from .errors import IncompatibleKind, InvariantViolation


@dataclass
class PoolEntry:
    bee: Bee
    remaining_wh: int
    arrival_seq: int

    @property
    def window(self) -> tuple[int, int]:
        return (self.bee.delivery_start, self.bee.delivery_end)


@dataclass(frozen=True)
class Fill:
    offer: PoolEntry
    request: PoolEntry
    quantity_wh: int
    price_mcny_per_kwh: int
    window: tuple[int, int]  # intersection of both delivery windows, seconds


@dataclass
class MatchResult:
    incoming: PoolEntry
    fills: list[Fill] = field(default_factory=list)
    residual: PoolEntry | None = None

    @property
    def matched_wh(self) -> int:
        return sum(f.quantity_wh for f in self.fills)


def windows_overlap(a: Bee, b: Bee) -> bool:
    return a.delivery_start < b.delivery_end and b.delivery_start < a.delivery_end


def _intersection(a: Bee, b: Bee) -> tuple[int, int]:
    return (max(a.delivery_start, b.delivery_start),
            min(a.delivery_end, b.delivery_end))


class BeePool:
    def __init__(self):
        self._entries: list[PoolEntry] = []
        self._next_seq = 1

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> tuple[PoolEntry, ...]:
        return tuple(self._entries)

    def total_resting_wh(self) -> int:
        return sum(e.remaining_wh for e in self._entries)

    def browse(self, carrier=None, window: tuple[int, int] | None = None,
               kind: BeeKind | None = None) -> list[PoolEntry]:
        """Snapshot of matching entries, best price first.

        Offers sort ascending by price, requests descending, ties by
        arrival order; with no kind filter the two groups are listed
        offers-then-requests.
        """
        found = []
        for e in self._entries:
            if carrier is not None and e.bee.carrier != carrier:
                continue
            if kind is not None and e.bee.kind != kind:
                continue
            if window is not None:
                lo, hi = window
                if not (e.bee.delivery_start < hi and lo < e.bee.delivery_end):
                    continue
            found.append(e)

        def sort_key(e: PoolEntry):
            price = e.bee.price_mcny_per_kwh
            if e.bee.kind is BeeKind.OFFER:
                return (0, price, e.arrival_seq)
            return (1, -price, e.arrival_seq)

        return [PoolEntry(e.bee, e.remaining_wh, e.arrival_seq)
                for e in sorted(found, key=sort_key)]

    def submit(self, bee: Bee, *, now: int | None = None,
               min_green_bp: int = 0) -> MatchResult:
        """Match an incoming Offer/Request against the resting counter-side.

        min_green_bp, when set on a Request, only lifts offers with at
        least that green fraction.
        """
        bee.validate()
        if bee.kind not in (BeeKind.OFFER, BeeKind.REQUEST):
            raise IncompatibleKind(f"{bee.kind.name} cannot enter the pool")
        incoming = PoolEntry(bee, bee.quantity_wh, self._alloc_seq())
        result = MatchResult(incoming)

        if now is not None:
            self._entries = [e for e in self._entries if e.bee.delivery_end > now]

        want_kind = BeeKind.OFFER if bee.kind is BeeKind.REQUEST else BeeKind.REQUEST
        candidates = [
            e for e in self._entries
            if e.bee.kind is want_kind
            and e.bee.carrier == bee.carrier
            and windows_overlap(e.bee, bee)
            and self._price_cross(bee, e.bee)
            and (bee.kind is not BeeKind.REQUEST
                 or e.bee.green_fraction_bp >= min_green_bp)
        ]
        # best price first: cheapest asks for a request, dearest bids for an offer
        if bee.kind is BeeKind.REQUEST:
            candidates.sort(key=lambda e: (e.bee.price_mcny_per_kwh, e.arrival_seq))
        else:
            candidates.sort(key=lambda e: (-e.bee.price_mcny_per_kwh, e.arrival_seq))

        for entry in candidates:
            if incoming.remaining_wh == 0:
                break
            take = min(incoming.remaining_wh, entry.remaining_wh)
            offer, request = (entry, incoming) if want_kind is BeeKind.OFFER \
                else (incoming, entry)
            result.fills.append(Fill(
                offer=offer,
                request=request,
                quantity_wh=take,
                price_mcny_per_kwh=offer.bee.price_mcny_per_kwh,
                window=_intersection(offer.bee, request.bee),
            ))
            entry.remaining_wh -= take
            incoming.remaining_wh -= take
            if entry.remaining_wh == 0:
                self._entries.remove(entry)

        if incoming.remaining_wh > 0:
            self._entries.append(incoming)
            result.residual = incoming
        return result

    def restore(self, entry: PoolEntry, quantity_wh: int) -> None:
        """Give quantity back after a failed settlement (rollback)."""
        entry.remaining_wh += quantity_wh
        if entry not in self._entries:
            self._entries.append(entry)
            self._entries.sort(key=lambda e: e.arrival_seq)

    def to_csv(self) -> str:
        lines = ["arrival_seq,kind,carrier,price_mcny_per_kwh,remaining_wh,"
                 "delivery_start,delivery_end,sender"]
        for e in self._entries:
            b = e.bee
            lines.append(
                f"{e.arrival_seq},{b.kind.name},{b.carrier.name},"
                f"{b.price_mcny_per_kwh},{e.remaining_wh},"
                f"{b.delivery_start},{b.delivery_end},{b.sender}"
            )
        return "\n".join(lines) + "\n"

    @staticmethod
    def _price_cross(incoming: Bee, resting: Bee) -> bool:
        if incoming.kind is BeeKind.REQUEST:
            return incoming.price_mcny_per_kwh >= resting.price_mcny_per_kwh
        return resting.price_mcny_per_kwh >= incoming.price_mcny_per_kwh

    def _alloc_seq(self) -> int:
        seq = self._next_seq
        self._next_seq += 1
        return seq
