"""Block of Energy Exchange (BEE): the record every other module moves around.

A BEE is a fixed 48-byte record, big-endian throughout:

     0               1               2               3
     0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
    +---------------+---------------+---------------+---------------+
    |    version    |     kind      |    carrier    |     pad=0     |
    +---------------+---------------+---------------+---------------+
    |                         quantity_wh                           |
    +---------------------------------------------------------------+
    |                        delivery_start                         |
    +-------------------------------+-------------------------------+
    |     delivery_duration_min     |       price_mcny_per_kwh      |
    +-------------------------------+-------------------------------+
    |       price (cont'd)          |   carbon_intensity_g_per_kwh  |
    +-------------------------------+-------------------------------+
    |       green_fraction_bp       |             grade             |
    +-------------------------------+-------------------------------+
    |        mass_flow_rate         |            pad=0              |
    +-------------------------------+-------------------------------+
    |                        sender MAC (6)                         |
    +                               +-------------------------------+
    |                               |      receiver MAC (6)         |
    +-------------------------------+                               +
    |                                                               |
    +---------------------------------------------------------------+
    |                            pad=0 (6)                          |
    +                               +-------------------------------+
    |                               |           checksum            |
    +-------------------------------+-------------------------------+

The checksum is the 16-bit ones'-complement sum (Internet-header style) of
bytes 0..45.  Padding must be zero so that equal records have byte-identical
encodings.  Full offset table in WIRE.md.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace

from .errors import BadChecksum, BadLength, InvariantViolation

RECORD_LEN = 48
_STRUCT = struct.Struct("!BBBxIIHIHHHH2x6s6s6xH")
assert _STRUCT.size == RECORD_LEN

_CHECKSUM_OFFSET = 46
# offsets of the zero padding enforced by decode (canonical form)
_PAD_SLICES = ((3, 4), (26, 28), (40, 46))

BEE_VERSION = 1


def internet_checksum(data: bytes) -> int:
    """16-bit ones'-complement sum with end-around carry; odd tail padded."""
    if len(data) % 2:
        data = data + b"\x00"
    total = 0
    for i in range(0, len(data), 2):
        total += (data[i] << 8) | data[i + 1]
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


class BeeKind(enum.IntEnum):
    OFFER = 1
    REQUEST = 2
    CONFIRM = 3
    SETTLE = 4


class Carrier(enum.IntEnum):
    ELECTRICITY = 1
    HEAT = 2
    GAS = 3
    HYDROGEN = 4


@dataclass(frozen=True, order=True)
class MacAddress:
    """EUI-48 style identifier of an Energy Internet Card.

    The all-zero address is reserved: it never identifies a participant and
    is only legal as the receiver of an open (unaddressed) Offer/Request.
    """

    octets: bytes

    def __post_init__(self):
        if len(self.octets) != 6:
            raise InvariantViolation(f"MAC must be 6 octets, got {len(self.octets)}")

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        parts = text.replace("-", ":").split(":")
        if len(parts) != 6:
            raise InvariantViolation(f"bad MAC syntax: {text!r}")
        try:
            return cls(bytes(int(p, 16) for p in parts))
        except ValueError as exc:
            raise InvariantViolation(f"bad MAC syntax: {text!r}") from exc

    @property
    def is_zero(self) -> bool:
        return self.octets == b"\x00" * 6

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.octets)


ZERO_MAC = MacAddress(b"\x00" * 6)

_U16 = 0xFFFF
_U32 = 0xFFFFFFFF


@dataclass(frozen=True)
class Bee:
    """One Block of Energy Exchange.

    Quantities are integer-valued so equal records compare and encode
    exactly: energy in Wh, price in milli-CNY per kWh, carbon in gCO2 per
    kWh, green fraction in basis points.
    """

    kind: BeeKind
    carrier: Carrier
    quantity_wh: int
    delivery_start: int
    delivery_duration_min: int
    price_mcny_per_kwh: int
    sender: MacAddress
    receiver: MacAddress
    carbon_intensity_g_per_kwh: int = 0
    green_fraction_bp: int = 0
    grade: int = 0
    mass_flow_rate: int = 0
    version: int = BEE_VERSION

    def validate(self) -> None:
        """Raise InvariantViolation unless every field invariant holds."""
        ranges = [
            ("version", self.version, 0xFF),
            ("quantity_wh", self.quantity_wh, _U32),
            ("delivery_start", self.delivery_start, _U32),
            ("delivery_duration_min", self.delivery_duration_min, _U16),
            ("price_mcny_per_kwh", self.price_mcny_per_kwh, _U32),
            ("carbon_intensity_g_per_kwh", self.carbon_intensity_g_per_kwh, _U16),
            ("green_fraction_bp", self.green_fraction_bp, _U16),
            ("grade", self.grade, _U16),
            ("mass_flow_rate", self.mass_flow_rate, _U16),
        ]
        for name, value, hi in ranges:
            if not isinstance(value, int) or value < 0 or value > hi:
                raise InvariantViolation(f"{name}={value!r} outside [0, {hi}]")
        if not isinstance(self.kind, BeeKind):
            raise InvariantViolation(f"bad kind {self.kind!r}")
        if not isinstance(self.carrier, Carrier):
            raise InvariantViolation(f"bad carrier {self.carrier!r}")
        if self.green_fraction_bp > 10000:
            raise InvariantViolation(
                f"green_fraction_bp={self.green_fraction_bp} > 10000"
            )
        if self.quantity_wh == 0 and self.kind is not BeeKind.CONFIRM:
            raise InvariantViolation(f"quantity_wh must be > 0 for {self.kind.name}")
        if self.carrier is Carrier.ELECTRICITY and self.mass_flow_rate != 0:
            raise InvariantViolation("electricity carries no mass flow rate")
        if self.delivery_duration_min == 0:
            raise InvariantViolation("delivery_duration_min must be > 0")
        if self.sender.is_zero:
            raise InvariantViolation("sender MAC is the reserved zero address")
        if self.receiver.is_zero and self.kind in (BeeKind.CONFIRM, BeeKind.SETTLE):
            raise InvariantViolation(f"{self.kind.name} needs an addressed receiver")

    @property
    def delivery_end(self) -> int:
        return self.delivery_start + self.delivery_duration_min * 60

    def with_(self, **changes) -> "Bee":
        return replace(self, **changes)


def encode_bee(bee: Bee) -> bytes:
    """Canonical 48-byte encoding; checksum recomputed over bytes 0..45."""
    bee.validate()
    raw = bytearray(
        _STRUCT.pack(
            bee.version,
            int(bee.kind),
            int(bee.carrier),
            bee.quantity_wh,
            bee.delivery_start,
            bee.delivery_duration_min,
            bee.price_mcny_per_kwh,
            bee.carbon_intensity_g_per_kwh,
            bee.green_fraction_bp,
            bee.grade,
            bee.mass_flow_rate,
            bee.sender.octets,
            bee.receiver.octets,
            0,
        )
    )
    csum = internet_checksum(bytes(raw[:_CHECKSUM_OFFSET]))
    raw[_CHECKSUM_OFFSET:] = csum.to_bytes(2, "big")
    return bytes(raw)


def decode_bee(data: bytes) -> Bee:
    """Decode and fully verify a 48-byte record.

    Raises BadLength, BadChecksum or InvariantViolation, in that order of
    checking, so each failure mode is distinguishable.
    """
    if len(data) != RECORD_LEN:
        raise BadLength(f"expected {RECORD_LEN} bytes, got {len(data)}")
    stored = int.from_bytes(data[_CHECKSUM_OFFSET:], "big")
    computed = internet_checksum(data[:_CHECKSUM_OFFSET])
    if stored != computed:
        raise BadChecksum(f"stored {stored:#06x} != computed {computed:#06x}")
    for lo, hi in _PAD_SLICES:
        if any(data[lo:hi]):
            raise InvariantViolation(f"nonzero padding at bytes {lo}..{hi - 1}")
    (
        version,
        kind,
        carrier,
        quantity,
        start,
        duration,
        price,
        carbon,
        green,
        grade,
        mass_flow,
        sender,
        receiver,
        _csum,
    ) = _STRUCT.unpack(data)
    try:
        kind = BeeKind(kind)
        carrier = Carrier(carrier)
    except ValueError as exc:
        raise InvariantViolation(str(exc)) from exc
    bee = Bee(
        version=version,
        kind=kind,
        carrier=carrier,
        quantity_wh=quantity,
        delivery_start=start,
        delivery_duration_min=duration,
        price_mcny_per_kwh=price,
        carbon_intensity_g_per_kwh=carbon,
        green_fraction_bp=green,
        grade=grade,
        mass_flow_rate=mass_flow,
        sender=MacAddress(sender),
        receiver=MacAddress(receiver),
    )
    bee.validate()
    return bee
