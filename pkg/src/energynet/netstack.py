"""Simulated four-layer energy exchange stack.

Hosts and routers live inside one Network object that advances a single
deterministic event queue; one queue entry is one frame arrival (or timer).
No real sockets: the point is that every layer decision is observable, so
each frame leaves one trace row per layer it crosses, and tests can assert
on the per-layer log.

Quantity limits live where their layer lives.  The dynamic window is
transport state, checked at the sending host before any frame is built, so
a rejected BEE never produces a link-layer frame.  The static per-period
ceiling is network state, enforced by the ingress router while forwarding,
so a BEE it rejects is dropped mid-path and never reaches the far
transport layer; frames that stay inside one LAN never transit a router
and are not charged against it.  Both limits are keyed by source Energy IP
address and only ever written by the operator side (one-way, never
negotiated).

Layer/verdict cheat sheet for the trace (CSV columns: tick, layer, src,
dst, kind, quantity, verdict, plane):

    app        submit / deliver
    network    admit|reject:static-limit, forward (at routers)
    transport  admit|reject:dynamic-limit, ack, nack
    link       frame hops, drop:corrupt
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

from .addressing import MAX_HOST, EnergyIpAddress
from .bee import Bee, MacAddress, decode_bee, encode_bee
from .errors import (
    BadChecksum,
    DeliveryFailed,
    DynamicLimitExceeded,
    HandshakeTimeout,
    ResetByPeer,
    StaticLimitExceeded,
    SubnetFull,
    TtlExpired,
    UnknownEip,
    UnknownMac,
    UnknownName,
    Unroutable,
)
from .headers import (
    DEFAULT_TTL,
    IP_HEADER_LEN,
    PLANE_PRIVATE,
    PLANE_PUBLIC,
    TCP_HEADER_LEN,
    EnergyFrame,
    EnergyIpHeader,
    EnergyTcpHeader,
    TcpFlags,
)
from .profiles import Ledger

MAX_RETRIES = 3
RETRY_GRACE_TICKS = 2
ENERGY_PORT = 4160
_UNLIMITED_STAMP = 0xFFFF


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    layer: str
    src: str
    dst: str
    kind: str
    quantity_wh: int
    verdict: str
    plane: str

    def csv(self) -> str:
        return (
            f"{self.tick},{self.layer},{self.src},{self.dst},"
            f"{self.kind},{self.quantity_wh},{self.verdict},{self.plane}"
        )


@dataclass(frozen=True)
class DeliveryReceipt:
    bee: Bee
    hop_count: int
    path: tuple[EnergyIpAddress, ...]
    sent_tick: int
    delivered_tick: int
    retries: int


@dataclass
class Lan:
    wan: int
    subnet: int
    router_eip: EnergyIpAddress
    router_mac: MacAddress
    hosts: dict[MacAddress, int] = field(default_factory=dict)
    _next_host: int = 1

    def key(self) -> tuple[int, int]:
        return (self.wan, self.subnet)


@dataclass
class Connection:
    conn_id: int
    src_eip: EnergyIpAddress
    dst_eip: EnergyIpAddress
    src_port: int
    dst_port: int
    state: str = "closed"
    next_seq: int = 1
    initial_window_kwh: int = 0


def _router_mac(wan: int, subnet: int) -> MacAddress:
    # locally-administered OUI 02:45:49 ("EI"), low bytes from the subnet
    return MacAddress(bytes([0x02, 0x45, 0x49, wan, subnet >> 8, subnet & 0xFF]))


class Network:
    """Owner of topology, budgets, the event queue and the trace."""

    def __init__(self, ledger: Ledger | None = None):
        self._ledger = ledger
        self._lans: dict[tuple[int, int], Lan] = {}
        self._eip_of_mac: dict[MacAddress, EnergyIpAddress] = {}
        self._mac_of_eip: dict[EnergyIpAddress, MacAddress] = {}
        self._routes: dict[EnergyIpAddress, dict[tuple[int, int], EnergyIpAddress]] = {}
        self._conns: dict[int, Connection] = {}
        self._next_conn = 1
        self._refuse: set[EnergyIpAddress] = set()
        self._inboxes: dict[MacAddress, list[Bee]] = {}
        self._delivered_keys: set[tuple[int, int, int]] = set()
        self._window_wh: dict[EnergyIpAddress, int | None] = {}
        self._static_wh: dict[EnergyIpAddress, int | None] = {}
        self._static_used_wh: dict[EnergyIpAddress, int] = {}
        self._static_charged: set[tuple[int, int, int]] = set()
        self.trace: list[TraceRecord] = []
        self._tick = 0
        self._eseq = itertools.count()
        self._events: list = []
        self._faults: list[dict] = []
        self._frame_counter = itertools.count(1)

    # ------------------------------------------------------------------
    # topology
    # ------------------------------------------------------------------

    def add_lan(self, wan: int, subnet: int) -> Lan:
        key = (wan, subnet)
        if key in self._lans:
            raise Unroutable(f"LAN {wan}.{subnet} already exists")
        router_eip = EnergyIpAddress.make(wan, subnet, 0)
        lan = Lan(wan, subnet, router_eip, _router_mac(wan, subnet))
        self._lans[key] = lan
        self._mac_of_eip[router_eip] = lan.router_mac
        # default full-mesh WAN: every router reaches every LAN directly
        self._routes[router_eip] = {}
        for other_key, other in self._lans.items():
            if other_key != key:
                self._routes[router_eip][other_key] = other.router_eip
                self._routes[other.router_eip][key] = router_eip
        return lan

    def set_route(
        self, router_eip: EnergyIpAddress, lan_key: tuple[int, int],
        via: EnergyIpAddress | None,
    ) -> None:
        """Override one routing entry (None deletes it)."""
        table = self._routes.get(router_eip)
        if table is None:
            raise UnknownEip(str(router_eip))
        if via is None:
            table.pop(lan_key, None)
        else:
            table[lan_key] = via

    def assign_eip(self, lan: Lan, mac: MacAddress) -> EnergyIpAddress:
        if self._ledger is not None and not self._ledger.is_registered(mac):
            raise UnknownMac(f"{mac} holds no Energy Internet Card")
        old = self._eip_of_mac.get(mac)
        host = self._alloc_host(lan)
        eip = EnergyIpAddress.make(lan.wan, lan.subnet, host)
        if old is not None:
            old_lan = self._lans[old.lan_key()]
            del old_lan.hosts[mac]
            del self._mac_of_eip[old]
            # budgets travel with the resource, keyed by its new address
            self._window_wh[eip] = self._window_wh.pop(old, None)
            self._static_wh[eip] = self._static_wh.pop(old, None)
            self._static_used_wh[eip] = self._static_used_wh.pop(old, 0)
            self._log("network", str(old), str(eip), "re-home", 0, "ok")
        lan.hosts[mac] = host
        self._eip_of_mac[mac] = eip
        self._mac_of_eip[eip] = mac
        self._inboxes.setdefault(mac, [])
        if self._ledger is not None:
            self._ledger.set_current_eip(mac, eip)
        return eip

    def _alloc_host(self, lan: Lan) -> int:
        if len(lan.hosts) >= MAX_HOST:
            raise SubnetFull(f"LAN {lan.wan}.{lan.subnet} has {MAX_HOST} hosts")
        taken = set(lan.hosts.values())
        host = lan._next_host
        while host in taken:
            host = host % MAX_HOST + 1
        lan._next_host = host % MAX_HOST + 1
        return host

    def eip_of(self, mac: MacAddress) -> EnergyIpAddress:
        eip = self._eip_of_mac.get(mac)
        if eip is None:
            raise UnknownMac(str(mac))
        return eip

    def mac_of(self, eip: EnergyIpAddress) -> MacAddress:
        mac = self._mac_of_eip.get(eip)
        if mac is None:
            raise UnknownEip(str(eip))
        return mac

    def route(self, src: EnergyIpAddress, dst: EnergyIpAddress) -> list[EnergyIpAddress]:
        """Node sequence after the source: routers crossed, then the host."""
        if dst not in self._mac_of_eip or src not in self._mac_of_eip:
            raise Unroutable(f"{src} -> {dst}")
        if src.lan_key() == dst.lan_key():
            return [dst]
        path = []
        cur = self._lans[src.lan_key()].router_eip
        path.append(cur)
        for _ in range(DEFAULT_TTL):
            if cur.lan_key() == dst.lan_key():
                path.append(dst)
                return path
            nxt = self._routes.get(cur, {}).get(dst.lan_key())
            if nxt is None:
                raise Unroutable(f"no route from {cur} to LAN {dst.lan_key()}")
            path.append(nxt)
            cur = nxt
        raise TtlExpired(f"route from {src} to {dst} exceeds ttl {DEFAULT_TTL}")

    # ------------------------------------------------------------------
    # budgets (operator side, one-way)
    # ------------------------------------------------------------------

    def update_dynamic_limit(self, eip: EnergyIpAddress, window_kwh: float | None) -> None:
        if eip not in self._mac_of_eip:
            raise UnknownEip(str(eip))
        self._window_wh[eip] = None if window_kwh is None else int(window_kwh * 1000)
        self._notify_limit(eip, "window-update", self._stamp_window(eip))

    def set_static_limit(self, eip: EnergyIpAddress, limit_kwh: float | None) -> None:
        if eip not in self._mac_of_eip:
            raise UnknownEip(str(eip))
        self._static_wh[eip] = None if limit_kwh is None else int(limit_kwh * 1000)
        self._notify_limit(eip, "static-update", self._stamp_static(eip))

    def start_period(self) -> None:
        """Reset every per-period static usage accumulator."""
        self._static_used_wh.clear()
        self._static_charged.clear()
        self._log("network", "isp", "*", "period-reset", 0, "ok",
                  plane=PLANE_PRIVATE)

    def window_wh(self, eip: EnergyIpAddress) -> int | None:
        return self._window_wh.get(eip)

    def static_remaining_wh(self, eip: EnergyIpAddress) -> int | None:
        limit = self._static_wh.get(eip)
        if limit is None:
            return None
        return limit - self._static_used_wh.get(eip, 0)

    def _notify_limit(self, eip: EnergyIpAddress, kind: str, value_kwh: int) -> None:
        """Fire-and-forget private-plane control frame, router -> host.

        The table above is authoritative; the frame is the on-the-wire
        artifact.  No acknowledgment, no retransmission.
        """
        lan = self._lans.get(eip.lan_key())
        if lan is None or eip.is_router:
            return
        tcp = EnergyTcpHeader(ENERGY_PORT, ENERGY_PORT, 0, 0, TcpFlags.ACK, value_kwh)
        self._emit(
            src=lan.router_eip, dst=eip, path=[eip], tcp=tcp, payload=b"",
            kind=kind, quantity=0, plane=PLANE_PRIVATE, state=None,
        )
        self._run()

    # ------------------------------------------------------------------
    # connections
    # ------------------------------------------------------------------

    def open_connection(self, src_eip: EnergyIpAddress, dst_eip: EnergyIpAddress) -> int:
        path = self.route(src_eip, dst_eip)
        conn = Connection(
            conn_id=self._next_conn,
            src_eip=src_eip,
            dst_eip=dst_eip,
            src_port=ENERGY_PORT + self._next_conn,
            dst_port=ENERGY_PORT,
        )
        self._next_conn += 1
        state = {"status": "pending", "attempt": 0, "phase": "syn"}
        syn = EnergyTcpHeader(conn.src_port, conn.dst_port, 0, 0, TcpFlags.SYN, 0)
        self._attempt(conn, syn, b"", path, "syn", 0, state)
        self._run()
        if state["status"] == "refused":
            raise ResetByPeer(str(dst_eip))
        if state["status"] != "established":
            raise HandshakeTimeout(f"{src_eip} -> {dst_eip}")
        conn.state = "established"
        conn.initial_window_kwh = state.get("peer_window", 0)
        self._conns[conn.conn_id] = conn
        return conn.conn_id

    def connection(self, conn_id: int) -> Connection:
        return self._conns[conn_id]

    def set_refuse(self, eip: EnergyIpAddress, refuse: bool = True) -> None:
        if refuse:
            self._refuse.add(eip)
        else:
            self._refuse.discard(eip)

    # ------------------------------------------------------------------
    # sending
    # ------------------------------------------------------------------

    def send_bee(self, conn_id: int, bee: Bee) -> DeliveryReceipt:
        conn = self._conns.get(conn_id)
        if conn is None or conn.state != "established":
            raise Unroutable(f"connection {conn_id} not established")
        bee.validate()
        q = bee.quantity_wh
        src, dst = conn.src_eip, conn.dst_eip
        sent_tick = self._tick
        self._log("app", str(src), str(dst), bee.kind.name.lower(), q, "submit")

        # transport-layer admission at the host: dynamic window for the
        # source address; a rejected BEE never produces a frame
        window = self._window_wh.get(src)
        if window is not None and q > window:
            self._log("transport", str(src), str(dst), "window-check", q,
                      "reject:dynamic-limit")
            raise DynamicLimitExceeded(f"{src}: {q} > window {window} Wh")
        self._log("transport", str(src), str(dst), "window-check", q, "admit")

        path = self.route(src, dst)
        seq = conn.next_seq
        conn.next_seq = (conn.next_seq + 1) & 0xFFFFFFFF
        tcp = EnergyTcpHeader(conn.src_port, conn.dst_port, seq, 0,
                              TcpFlags(0), self._stamp_window(src))
        state = {"status": "pending", "attempt": 0, "phase": "data",
                 "conn": conn, "seq": seq}
        self._attempt(conn, tcp, encode_bee(bee), path, "data", q, state)
        self._run()

        if state["status"] == "static-rejected":
            raise StaticLimitExceeded(state.get("reason", str(src)))
        if state["status"] != "acked":
            raise DeliveryFailed(
                f"{src} -> {dst}: no ack after {MAX_RETRIES} retries"
            )
        if window is not None:
            self._window_wh[src] = window - q
        self._log("transport", str(dst), str(src), "ack", q, "ok")
        routers = tuple(p for p in path if p.is_router)
        return DeliveryReceipt(
            bee=bee,
            hop_count=len(routers),
            path=routers,
            sent_tick=sent_tick,
            delivered_tick=self._tick,
            retries=state["attempt"] - 1,
        )

    def delivered(self, mac: MacAddress) -> tuple[Bee, ...]:
        return tuple(self._inboxes.get(mac, ()))

    # ------------------------------------------------------------------
    # event machinery
    # ------------------------------------------------------------------

    def _schedule(self, delay: int, fn, *args) -> None:
        heapq.heappush(self._events, (self._tick + delay, next(self._eseq), fn, args))

    def _run(self) -> None:
        while self._events:
            tick, _, fn, args = heapq.heappop(self._events)
            self._tick = tick
            fn(*args)

    def _attempt(self, conn: Connection, tcp: EnergyTcpHeader, payload: bytes,
                 path: list[EnergyIpAddress], kind: str, quantity: int, state: dict) -> None:
        state["attempt"] += 1
        state["conn"] = conn
        state["resend"] = (tcp, payload, path, kind, quantity)
        attempt = state["attempt"]
        self._emit(conn.src_eip, conn.dst_eip, path, tcp, payload,
                   kind, quantity, PLANE_PUBLIC, state)
        rtt = 2 * len(path)
        self._schedule(rtt + RETRY_GRACE_TICKS, self._on_timeout,
                       conn, tcp, payload, path, kind, quantity, state, attempt)

    def _on_timeout(self, conn, tcp, payload, path, kind, quantity, state, attempt) -> None:
        if state["status"] != "pending" or state["attempt"] != attempt:
            return
        if state["attempt"] > MAX_RETRIES:
            state["status"] = "lost"
            return
        self._attempt(conn, tcp, payload, path, kind, quantity, state)

    def _emit(self, src: EnergyIpAddress, dst: EnergyIpAddress,
              path: list[EnergyIpAddress], tcp: EnergyTcpHeader, payload: bytes,
              kind: str, quantity: int, plane: int, state: dict | None) -> None:
        body = tcp.encode(payload) + payload
        ip = EnergyIpHeader(
            source_eip=src,
            dest_eip=dst,
            total_length=IP_HEADER_LEN + len(body),
            identification=next(self._frame_counter) & 0xFFFF,
            static_limit_kwh=self._stamp_static(src),
            plane=plane,
        )
        ctx = {
            "path": path, "hop": 0, "kind": kind, "quantity": quantity,
            "plane": plane, "state": state, "origin": src,
        }
        self._transmit(src, ip, body, ctx)

    def _transmit(self, from_eip: EnergyIpAddress, ip: EnergyIpHeader,
                  body: bytes, ctx: dict) -> None:
        to_eip = ctx["path"][ctx["hop"]]
        frame = EnergyFrame(
            dest_mac=self._mac_of_eip[to_eip],
            src_mac=self._mac_of_eip[from_eip],
            payload=ip.encode() + body,
        ).encode()
        frame = self._apply_fault(frame, ctx)
        if frame is None:
            self._log("link", str(from_eip), str(to_eip), ctx["kind"],
                      ctx["quantity"], "drop:injected", plane=ctx["plane"])
            return
        self._log("link", str(from_eip), str(to_eip), ctx["kind"],
                  ctx["quantity"], "ok", plane=ctx["plane"])
        self._schedule(1, self._on_frame, to_eip, frame, ctx)

    def _apply_fault(self, frame: bytes, ctx: dict) -> bytes | None:
        for fault in self._faults:
            if fault["count"] > 0 and fault["at_hop"] == ctx["hop"] \
                    and ctx["kind"] in fault["kinds"]:
                fault["count"] -= 1
                if fault["mode"] == "drop":
                    return None
                flipped = bytearray(frame)
                bit = fault["bit"] % (len(frame) * 8)
                flipped[bit // 8] ^= 1 << (bit % 8)
                return bytes(flipped)
        return frame

    def inject_fault(self, mode: str = "corrupt", at_hop: int = 0, bit: int = 200,
                     count: int = 1, kinds: tuple[str, ...] = ("data",)) -> None:
        self._faults.append({"mode": mode, "at_hop": at_hop, "bit": bit,
                             "count": count, "kinds": kinds})

    def _on_frame(self, node: EnergyIpAddress, raw: bytes, ctx: dict) -> None:
        plane = ctx["plane"]
        try:
            frame = EnergyFrame.decode(raw)
            ip = EnergyIpHeader.decode(frame.payload)
        except BadChecksum:
            self._log("link", str(node), "-", ctx["kind"], ctx["quantity"],
                      "drop:corrupt", plane=plane)
            self._nack(node, ctx)
            return
        body = frame.payload[IP_HEADER_LEN:]
        if node != ip.dest_eip:
            # intermediate router: re-validate, decrement ttl, forward
            if ip.ttl <= 1:
                self._log("network", str(node), str(ip.dest_eip), ctx["kind"],
                          ctx["quantity"], "drop:ttl", plane=plane)
                return
            if ctx["kind"] == "data" and ctx["hop"] == 0 \
                    and not self._static_admit(node, ip, body, ctx):
                return
            self._log("network", str(node), str(ip.dest_eip), ctx["kind"],
                      ctx["quantity"], "forward", plane=plane)
            ctx = dict(ctx, hop=ctx["hop"] + 1)
            self._transmit(node, ip.hop_forward(), body, ctx)
            return
        self._receive(node, ip, body, ctx)

    def _static_admit(self, node: EnergyIpAddress, ip: EnergyIpHeader,
                      body: bytes, ctx: dict) -> bool:
        """Per-period budget check at the ingress router (network layer).

        Usage is counted once per transport segment, so a retransmission of
        an already-admitted segment passes without a second charge.
        """
        src = ip.source_eip
        limit = self._static_wh.get(src)
        if limit is None:
            return True
        tcp, _ = EnergyTcpHeader.decode(body)
        key = (src.value, tcp.source_port, tcp.sequence)
        if key in self._static_charged:
            return True
        used = self._static_used_wh.get(src, 0)
        q = ctx["quantity"]
        if used + q > limit:
            self._log("network", str(node), str(ip.dest_eip), ctx["kind"], q,
                      "reject:static-limit", plane=ctx["plane"])
            state = ctx["state"]
            if state is not None:
                self._schedule(
                    ctx["hop"] + 1, self._on_static_reject, state,
                    f"{src}: used {used} + {q} > {limit} Wh this period",
                )
            return False
        self._static_charged.add(key)
        self._static_used_wh[src] = used + q
        return True

    def _on_static_reject(self, state: dict, reason: str) -> None:
        if state["status"] == "pending":
            state["status"] = "static-rejected"
            state["reason"] = reason

    def _nack(self, node: EnergyIpAddress, ctx: dict) -> None:
        """Modeled NACK: the detecting node reports back to the origin."""
        self._log("transport", str(node), str(ctx["origin"]), "nack",
                  ctx["quantity"], "ok", plane=ctx["plane"])
        state = ctx["state"]
        if state is None:
            return
        self._schedule(ctx["hop"] + 1, self._on_nack, ctx, state, state["attempt"])

    def _on_nack(self, ctx: dict, state: dict, attempt: int) -> None:
        if state["status"] != "pending" or state["attempt"] != attempt:
            return
        if state["attempt"] > MAX_RETRIES:
            state["status"] = "lost"
            return
        conn = state.get("conn")
        if conn is None:
            state["status"] = "lost"
            return
        # rebuild the same segment and retransmit
        tcp, payload, path, kind, quantity = state["resend"]
        self._attempt(conn, tcp, payload, path, kind, quantity, state)

    def _receive(self, node: EnergyIpAddress, ip: EnergyIpHeader, body: bytes,
                 ctx: dict) -> None:
        try:
            tcp, payload = EnergyTcpHeader.decode(body)
        except BadChecksum:
            self._log("link", str(node), "-", ctx["kind"], ctx["quantity"],
                      "drop:corrupt", plane=ctx["plane"])
            self._nack(node, ctx)
            return
        kind = ctx["kind"]
        state = ctx["state"]
        if kind == "syn":
            self._answer_syn(node, ip, tcp, ctx)
        elif kind == "synack":
            if state is not None and state["status"] == "pending":
                state["status"] = "established"
                state["peer_window"] = tcp.window_kwh
                reply = EnergyTcpHeader(tcp.dest_port, tcp.source_port, 1,
                                        tcp.sequence + 1, TcpFlags.ACK, 0)
                back = self.route(node, ip.source_eip)
                self._emit(node, ip.source_eip, back, reply, b"", "ack", 0,
                           ctx["plane"], None)
        elif kind == "rst":
            if state is not None and state["status"] == "pending":
                state["status"] = "refused"
        elif kind == "data":
            self._deliver_data(node, ip, tcp, payload, ctx)
        elif kind == "ack":
            if state is not None and state["status"] == "pending":
                state["status"] = "acked"
        # limit notifications ("window-update"/"static-update") need no reply

    def _answer_syn(self, node: EnergyIpAddress, ip: EnergyIpHeader,
                    tcp: EnergyTcpHeader, ctx: dict) -> None:
        back = self.route(node, ip.source_eip)
        if node in self._refuse:
            reply = EnergyTcpHeader(tcp.dest_port, tcp.source_port, 0,
                                    tcp.sequence + 1, TcpFlags.RST, 0)
            self._emit(node, ip.source_eip, back, reply, b"", "rst", 0,
                       ctx["plane"], ctx["state"])
            return
        window = self._stamp_window(ip.source_eip)
        reply = EnergyTcpHeader(
            tcp.dest_port, tcp.source_port, 0, tcp.sequence + 1,
            TcpFlags.SYN | TcpFlags.ACK, window,
        )
        self._emit(node, ip.source_eip, back, reply, b"", "synack", 0,
                   ctx["plane"], ctx["state"])

    def _deliver_data(self, node: EnergyIpAddress, ip: EnergyIpHeader,
                      tcp: EnergyTcpHeader, payload: bytes, ctx: dict) -> None:
        state = ctx["state"]
        key = (ip.source_eip.value, tcp.source_port, tcp.sequence)
        if key not in self._delivered_keys:
            self._delivered_keys.add(key)
            bee = decode_bee(payload)
            mac = self._mac_of_eip[node]
            self._inboxes.setdefault(mac, []).append(bee)
            self._log("app", str(ip.source_eip), str(node),
                      bee.kind.name.lower(), bee.quantity_wh, "deliver")
        reply = EnergyTcpHeader(tcp.dest_port, tcp.source_port, 0,
                                tcp.sequence + 1, TcpFlags.ACK, 0)
        back = self.route(node, ip.source_eip)
        self._emit(node, ip.source_eip, back, reply, b"", "ack", 0,
                   ctx["plane"], state)

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    def _stamp_window(self, eip: EnergyIpAddress) -> int:
        w = self._window_wh.get(eip)
        return _UNLIMITED_STAMP if w is None else min(max(w, 0) // 1000, 0xFFFF)

    def _stamp_static(self, eip: EnergyIpAddress) -> int:
        remaining = self.static_remaining_wh(eip)
        if remaining is None:
            return _UNLIMITED_STAMP
        return min(max(remaining, 0) // 1000, 0xFFFF)

    def _log(self, layer: str, src: str, dst: str, kind: str, quantity: int,
             verdict: str, plane: int = PLANE_PUBLIC) -> None:
        self.trace.append(TraceRecord(
            tick=self._tick, layer=layer, src=src, dst=dst, kind=kind,
            quantity_wh=quantity, verdict=verdict,
            plane="private" if plane == PLANE_PRIVATE else "public",
        ))

    def trace_csv(self) -> str:
        header = "tick,layer,src,dst,kind,quantity_wh,verdict,plane"
        return "\n".join([header] + [r.csv() for r in self.trace]) + "\n"

    @property
    def tick(self) -> int:
        return self._tick


class NameRegistry:
    """Flat name -> MAC registry; resolution follows the current binding."""

    def __init__(self, network: Network):
        self._network = network
        self._names: dict[str, MacAddress] = {}

    def register(self, name: str, mac: MacAddress) -> None:
        self._names[name] = mac

    def resolve(self, name: str) -> EnergyIpAddress:
        mac = self._names.get(name)
        if mac is None:
            raise UnknownName(name)
        return self._network.eip_of(mac)
