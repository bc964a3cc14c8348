"""Participant profiles, updated only by settled BEE transfers.

The Ledger is the single writer.  Profiles returned to callers are frozen
snapshots; internal state never leaks.  Each settlement moves energy,
payment, green certificates and carbon rights between exactly two profiles
with mirrored integer amounts, so whole-system sums stay at zero no matter
how many settlements are applied.

Sign conventions:
  * energy:  sender loses quantity_wh, receiver gains it;
  * payment: receiver pays quantity * price, sender receives it;
  * green certificates: move with the energy, quantity * green_fraction;
  * carbon rights: the receiver assumes the embodied emission burden
    (quantity * carbon_intensity debited), the sender sheds it.

An optional event log keeps one settled BEE per line as lowercase hex of
the 48-byte encoding; replaying the file rebuilds every profile.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

from .addressing import EnergyIpAddress
from .bee import Bee, BeeKind, MacAddress, decode_bee, encode_bee
from .errors import (
    DuplicateMac,
    InvalidMac,
    NotSettleKind,
    SelfTrade,
    UnknownMac,
)


class TradeRole(enum.Enum):
    SENDER = "sender"
    RECEIVER = "receiver"


@dataclass(frozen=True)
class TradeRecord:
    bee: Bee
    role: TradeRole
    settled_at: int


@dataclass(frozen=True)
class CertificateInventory:
    green_certificates_wh: int = 0
    carbon_rights_g: int = 0


@dataclass(frozen=True)
class UserProfile:
    mac: MacAddress
    display_name: str
    current_eip: EnergyIpAddress | None
    trades: tuple[TradeRecord, ...]
    net_energy_wh: int
    net_payment_mcny: int
    inventory: CertificateInventory


def settlement_payment_mcny(quantity_wh: int, price_mcny_per_kwh: int) -> int:
    """Wh * mCNY/kWh rounded half-up to whole mCNY."""
    return (quantity_wh * price_mcny_per_kwh + 500) // 1000


def settlement_green_wh(quantity_wh: int, green_fraction_bp: int) -> int:
    return (quantity_wh * green_fraction_bp + 5000) // 10000


def settlement_carbon_g(quantity_wh: int, carbon_g_per_kwh: int) -> int:
    return (quantity_wh * carbon_g_per_kwh + 500) // 1000


class _ProfileState:
    __slots__ = ("mac", "name", "eip", "trades", "energy", "payment", "green", "carbon")

    def __init__(self, mac: MacAddress, name: str):
        self.mac = mac
        self.name = name
        self.eip: EnergyIpAddress | None = None
        self.trades: list[TradeRecord] = []
        self.energy = 0
        self.payment = 0
        self.green = 0
        self.carbon = 0

    def snapshot(self) -> UserProfile:
        return UserProfile(
            mac=self.mac,
            display_name=self.name,
            current_eip=self.eip,
            trades=tuple(self.trades),
            net_energy_wh=self.energy,
            net_payment_mcny=self.payment,
            inventory=CertificateInventory(self.green, self.carbon),
        )


class Ledger:
    """In-memory profile store with an optional append-only event log."""

    def __init__(self, log_path: str | Path | None = None):
        self._profiles: dict[MacAddress, _ProfileState] = {}
        self._log_path = Path(log_path) if log_path is not None else None

    @classmethod
    def replay(cls, log_path: str | Path, *, auto_register: bool = True) -> "Ledger":
        """Rebuild a ledger by re-applying every settlement in the log.

        Registration is not journaled, so unknown MACs are re-registered with
        their hex string as display name unless auto_register is disabled.
        """
        path = Path(log_path)
        ledger = cls()
        with path.open("r", encoding="ascii") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                bee = decode_bee(bytes.fromhex(line))
                if auto_register:
                    for mac in (bee.sender, bee.receiver):
                        if mac not in ledger._profiles:
                            ledger.register_card(mac, str(mac))
                ledger.apply_settlement(bee)
        ledger._log_path = path
        return ledger

    # --- registration ---

    def register_card(self, mac: MacAddress, name: str) -> UserProfile:
        if mac.is_zero:
            raise InvalidMac("the zero MAC is reserved")
        if mac in self._profiles:
            raise DuplicateMac(str(mac))
        state = _ProfileState(mac, name)
        self._profiles[mac] = state
        return state.snapshot()

    def is_registered(self, mac: MacAddress) -> bool:
        return mac in self._profiles

    def macs(self) -> tuple[MacAddress, ...]:
        return tuple(self._profiles)

    # --- settlement ---

    def apply_settlement(
        self, bee: Bee, settled_at: int | None = None
    ) -> tuple[UserProfile, UserProfile]:
        if bee.kind is not BeeKind.SETTLE:
            raise NotSettleKind(f"got {bee.kind.name}")
        bee.validate()
        if bee.sender == bee.receiver:
            raise SelfTrade(str(bee.sender))
        sender = self._profiles.get(bee.sender)
        receiver = self._profiles.get(bee.receiver)
        if sender is None:
            raise UnknownMac(str(bee.sender))
        if receiver is None:
            raise UnknownMac(str(bee.receiver))

        when = bee.delivery_end if settled_at is None else settled_at
        q = bee.quantity_wh
        pay = settlement_payment_mcny(q, bee.price_mcny_per_kwh)
        green = settlement_green_wh(q, bee.green_fraction_bp)
        carbon = settlement_carbon_g(q, bee.carbon_intensity_g_per_kwh)

        sender.trades.append(TradeRecord(bee, TradeRole.SENDER, when))
        receiver.trades.append(TradeRecord(bee, TradeRole.RECEIVER, when))
        sender.energy -= q
        receiver.energy += q
        sender.payment += pay
        receiver.payment -= pay
        sender.green -= green
        receiver.green += green
        sender.carbon += carbon
        receiver.carbon -= carbon

        if self._log_path is not None:
            with self._log_path.open("a", encoding="ascii") as fh:
                fh.write(encode_bee(bee).hex() + "\n")
        return sender.snapshot(), receiver.snapshot()

    # --- queries ---

    def query_profile(self, mac: MacAddress) -> UserProfile:
        state = self._profiles.get(mac)
        if state is None:
            raise UnknownMac(str(mac))
        return state.snapshot()

    def all_profiles(self) -> tuple[UserProfile, ...]:
        return tuple(s.snapshot() for s in self._profiles.values())

    def totals(self) -> tuple[int, int, int, int]:
        """(energy, payment, green, carbon) summed over all profiles."""
        states = self._profiles.values()
        return (
            sum(s.energy for s in states),
            sum(s.payment for s in states),
            sum(s.green for s in states),
            sum(s.carbon for s in states),
        )

    # --- hooks for the protocol stack ---

    def set_current_eip(self, mac: MacAddress, eip: EnergyIpAddress | None) -> None:
        state = self._profiles.get(mac)
        if state is None:
            raise UnknownMac(str(mac))
        state.eip = eip
