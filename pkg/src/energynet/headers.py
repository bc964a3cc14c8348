"""Wire formats for the three lower layers of the energy stack.

The network header is byte-for-byte the IPv4 layout with two repurposed
slots: the type-of-service byte tags the message plane (0 = public pool
traffic, 1 = private operator traffic) and the flags+fragment-offset word
carries the sender's static per-period exchange ceiling in kWh.  The
transport header is the TCP layout with the window field carrying the
dynamic remaining-allowance in kWh.  Frames are Ethernet-shaped with a
CRC32 trailer.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass

from .addressing import EnergyIpAddress
from .bee import MacAddress, internet_checksum
from .errors import BadChecksum, BadLength, InvariantViolation

ETHERTYPE_ENERGY = 0x88B5  # IEEE 802 local experimental
PROTO_ENERGY_TCP = 6
DEFAULT_TTL = 16

PLANE_PUBLIC = 0
PLANE_PRIVATE = 1

_IP_STRUCT = struct.Struct("!BBHHHBBHII")
IP_HEADER_LEN = _IP_STRUCT.size  # 20
_TCP_STRUCT = struct.Struct("!HHIIBBHHH")
TCP_HEADER_LEN = _TCP_STRUCT.size  # 20
FRAME_OVERHEAD = 6 + 6 + 2 + 4


class TcpFlags(enum.IntFlag):
    FIN = 0x01
    SYN = 0x02
    RST = 0x04
    ACK = 0x10
    NAK = 0x40  # repurposed ECE bit: corrupted-frame report


def _cap_u16(value: int) -> int:
    return min(max(value, 0), 0xFFFF)


@dataclass(frozen=True)
class EnergyIpHeader:
    source_eip: EnergyIpAddress
    dest_eip: EnergyIpAddress
    total_length: int
    identification: int = 0
    ttl: int = DEFAULT_TTL
    protocol: int = PROTO_ENERGY_TCP
    static_limit_kwh: int = 0
    plane: int = PLANE_PUBLIC
    version: int = 4
    header_length: int = 5

    def encode(self) -> bytes:
        raw = bytearray(
            _IP_STRUCT.pack(
                (self.version << 4) | self.header_length,
                self.plane,
                self.total_length,
                self.identification,
                _cap_u16(self.static_limit_kwh),
                self.ttl,
                self.protocol,
                0,
                self.source_eip.value,
                self.dest_eip.value,
            )
        )
        raw[10:12] = internet_checksum(bytes(raw)).to_bytes(2, "big")
        return bytes(raw)

    @classmethod
    def decode(cls, data: bytes) -> "EnergyIpHeader":
        if len(data) < IP_HEADER_LEN:
            raise BadLength(f"IP header needs {IP_HEADER_LEN} bytes")
        head = data[:IP_HEADER_LEN]
        # ones'-complement sum over a header with a valid checksum is zero
        if internet_checksum(head) != 0:
            raise BadChecksum("energy IP header checksum")
        vihl, plane, total, ident, static_kwh, ttl, proto, _csum, src, dst = (
            _IP_STRUCT.unpack(head)
        )
        return cls(
            version=vihl >> 4,
            header_length=vihl & 0xF,
            plane=plane,
            total_length=total,
            identification=ident,
            static_limit_kwh=static_kwh,
            ttl=ttl,
            protocol=proto,
            source_eip=EnergyIpAddress(src),
            dest_eip=EnergyIpAddress(dst),
        )

    def hop_forward(self) -> "EnergyIpHeader":
        """Copy with ttl decremented; caller re-encodes (fresh checksum)."""
        if self.ttl <= 0:
            raise InvariantViolation("ttl already zero")
        return EnergyIpHeader(
            source_eip=self.source_eip,
            dest_eip=self.dest_eip,
            total_length=self.total_length,
            identification=self.identification,
            ttl=self.ttl - 1,
            protocol=self.protocol,
            static_limit_kwh=self.static_limit_kwh,
            plane=self.plane,
            version=self.version,
            header_length=self.header_length,
        )


@dataclass(frozen=True)
class EnergyTcpHeader:
    source_port: int
    dest_port: int
    sequence: int
    ack_number: int
    flags: TcpFlags
    window_kwh: int

    def encode(self, payload: bytes = b"") -> bytes:
        raw = bytearray(
            _TCP_STRUCT.pack(
                self.source_port,
                self.dest_port,
                self.sequence & 0xFFFFFFFF,
                self.ack_number & 0xFFFFFFFF,
                5 << 4,
                int(self.flags),
                _cap_u16(self.window_kwh),
                0,
                0,
            )
        )
        raw[16:18] = internet_checksum(bytes(raw) + payload).to_bytes(2, "big")
        return bytes(raw)

    @classmethod
    def decode(cls, data: bytes) -> tuple["EnergyTcpHeader", bytes]:
        if len(data) < TCP_HEADER_LEN:
            raise BadLength(f"TCP header needs {TCP_HEADER_LEN} bytes")
        if internet_checksum(data) != 0:
            raise BadChecksum("energy TCP checksum")
        sport, dport, seq, ack, _off, flags, window, _csum, _urg = _TCP_STRUCT.unpack(
            data[:TCP_HEADER_LEN]
        )
        return (
            cls(
                source_port=sport,
                dest_port=dport,
                sequence=seq,
                ack_number=ack,
                flags=TcpFlags(flags),
                window_kwh=window,
            ),
            data[TCP_HEADER_LEN:],
        )


@dataclass(frozen=True)
class EnergyFrame:
    dest_mac: MacAddress
    src_mac: MacAddress
    payload: bytes
    ethertype: int = ETHERTYPE_ENERGY

    def encode(self) -> bytes:
        body = (
            self.dest_mac.octets
            + self.src_mac.octets
            + self.ethertype.to_bytes(2, "big")
            + self.payload
        )
        return body + zlib.crc32(body).to_bytes(4, "big")

    @classmethod
    def decode(cls, data: bytes) -> "EnergyFrame":
        if len(data) < FRAME_OVERHEAD:
            raise BadLength("frame too short")
        body, fcs = data[:-4], int.from_bytes(data[-4:], "big")
        if zlib.crc32(body) != fcs:
            raise BadChecksum("frame check sequence")
        return cls(
            dest_mac=MacAddress(body[:6]),
            src_mac=MacAddress(body[6:12]),
            ethertype=int.from_bytes(body[12:14], "big"),
            payload=body[14:],
        )
