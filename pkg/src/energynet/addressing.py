"""Energy IP addressing: 32 bits split wan(8) | subnet(12) | host(12).

Host 0 of every subnet is reserved for the LAN's router (the VPP operator),
mirroring how a default gateway anchors an IP subnet.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvariantViolation

WAN_BITS, SUBNET_BITS, HOST_BITS = 8, 12, 12
MAX_HOST = (1 << HOST_BITS) - 1


@dataclass(frozen=True, order=True)
class EnergyIpAddress:
    value: int

    def __post_init__(self):
        if not 0 <= self.value <= 0xFFFFFFFF:
            raise InvariantViolation(f"EIP value {self.value:#x} not 32-bit")

    @classmethod
    def make(cls, wan: int, subnet: int, host: int) -> "EnergyIpAddress":
        if not (0 <= wan < (1 << WAN_BITS) and 0 <= subnet < (1 << SUBNET_BITS)
                and 0 <= host < (1 << HOST_BITS)):
            raise InvariantViolation(f"EIP parts out of range: {wan}.{subnet}.{host}")
        return cls((wan << (SUBNET_BITS + HOST_BITS)) | (subnet << HOST_BITS) | host)

    @classmethod
    def parse(cls, text: str) -> "EnergyIpAddress":
        parts = text.split(".")
        if len(parts) != 3:
            raise InvariantViolation(f"bad EIP syntax: {text!r}")
        wan, subnet, host = (int(p) for p in parts)
        return cls.make(wan, subnet, host)

    @property
    def wan(self) -> int:
        return self.value >> (SUBNET_BITS + HOST_BITS)

    @property
    def subnet(self) -> int:
        return (self.value >> HOST_BITS) & ((1 << SUBNET_BITS) - 1)

    @property
    def host(self) -> int:
        return self.value & ((1 << HOST_BITS) - 1)

    @property
    def is_router(self) -> bool:
        return self.host == 0

    def lan_key(self) -> tuple[int, int]:
        return (self.wan, self.subnet)

    def __str__(self) -> str:
        return f"{self.wan}.{self.subnet}.{self.host}"
