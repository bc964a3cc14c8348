import pytest

from energynet.addressing import EnergyIpAddress
from energynet.bee import BeeKind
from energynet.errors import (
    DeliveryFailed,
    DynamicLimitExceeded,
    HandshakeTimeout,
    ResetByPeer,
    StaticLimitExceeded,
    SubnetFull,
    TtlExpired,
    UnknownMac,
    UnknownName,
    Unroutable,
)
from energynet.netstack import Network, NameRegistry
from energynet.profiles import Ledger

from conftest import mac, make_bee


def two_lan_network():
    ledger = Ledger()
    for i in range(1, 7):
        ledger.register_card(mac(i), f"res-{i}")
    net = Network(ledger)
    lan_a = net.add_lan(1, 1)
    lan_b = net.add_lan(1, 2)
    a1 = net.assign_eip(lan_a, mac(1))
    a2 = net.assign_eip(lan_a, mac(2))
    b1 = net.assign_eip(lan_b, mac(3))
    return net, ledger, lan_a, lan_b, (a1, a2, b1)


class TestAddressing:
    def test_parts_roundtrip(self):
        eip = EnergyIpAddress.make(3, 1500, 42)
        assert (eip.wan, eip.subnet, eip.host) == (3, 1500, 42)
        assert EnergyIpAddress.parse(str(eip)) == eip

    def test_distinct_macs_distinct_eips(self):
        net, _, lan_a, _, (a1, a2, _) = two_lan_network()
        assert a1 != a2

    def test_rehoming_changes_eip_not_mac(self):
        net, ledger, lan_a, lan_b, (a1, _, _) = two_lan_network()
        assert ledger.query_profile(mac(1)).current_eip == a1
        moved = net.assign_eip(lan_b, mac(1))
        assert moved != a1
        assert moved.lan_key() == (1, 2)
        assert net.eip_of(mac(1)) == moved
        # profile followed the move
        assert ledger.query_profile(mac(1)).current_eip == moved
        with pytest.raises(Exception):
            net.mac_of(a1)

    def test_requires_card(self):
        net, _, lan_a, _, _ = two_lan_network()
        with pytest.raises(UnknownMac):
            net.assign_eip(lan_a, mac(99))

    def test_subnet_full(self):
        ledger = Ledger()
        net = Network(ledger)
        lan = net.add_lan(1, 1)
        # 12-bit host field: 4096 values minus reserved host 0 = 4095 usable
        for i in range(1, 4096):
            ledger.register_card(mac(i), f"r{i}")
            net.assign_eip(lan, mac(i))
        ledger.register_card(mac(4096), "straw")
        with pytest.raises(SubnetFull):
            net.assign_eip(lan, mac(4096))


class TestNameRegistry:
    def test_resolution_follows_rehoming(self):
        net, _, lan_a, lan_b, (a1, _, _) = two_lan_network()
        names = NameRegistry(net)
        names.register("rural-wind-1", mac(1))
        assert names.resolve("rural-wind-1") == a1
        moved = net.assign_eip(lan_b, mac(1))
        assert names.resolve("rural-wind-1") == moved

    def test_unknown(self):
        net, *_ = two_lan_network()
        with pytest.raises(UnknownName):
            NameRegistry(net).resolve("nope")


class TestHandshake:
    def test_same_lan_three_frames(self):
        net, _, _, _, (a1, a2, _) = two_lan_network()
        conn = net.open_connection(a1, a2)
        assert net.connection(conn).state == "established"
        link_rows = [r for r in net.trace if r.layer == "link"]
        assert len(link_rows) == 3  # syn, syn+ack, ack

    def test_unroutable(self):
        net, _, _, _, (a1, _, _) = two_lan_network()
        with pytest.raises(Unroutable):
            net.open_connection(a1, EnergyIpAddress.make(1, 9, 5))

    def test_reset_by_peer(self):
        net, _, _, _, (a1, _, b1) = two_lan_network()
        net.set_refuse(b1)
        with pytest.raises(ResetByPeer):
            net.open_connection(a1, b1)

    def test_handshake_timeout_when_syn_always_dropped(self):
        net, _, _, _, (a1, _, b1) = two_lan_network()
        net.inject_fault(mode="drop", at_hop=0, count=10, kinds=("syn",))
        with pytest.raises(HandshakeTimeout):
            net.open_connection(a1, b1)


class TestSendBee:
    def test_cross_lan_hop_count(self):
        net, ledger, _, _, (a1, _, b1) = two_lan_network()
        conn = net.open_connection(a1, b1)
        receipt = net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3)))
        assert receipt.hop_count == 2  # source router, destination router
        assert [e.is_router for e in receipt.path] == [True, True]
        assert net.delivered(mac(3))[0].quantity_wh == 1000

    def test_same_lan_direct(self):
        net, _, _, _, (a1, a2, _) = two_lan_network()
        conn = net.open_connection(a1, a2)
        receipt = net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(2)))
        assert receipt.hop_count == 0

    def test_window_arithmetic(self):
        # independent accumulator: 8 kWh granted, 5 kWh spent -> 3 kWh left;
        # the 6 kWh follow-up hits the transport window, not the static cap
        net, _, _, _, (a1, _, b1) = two_lan_network()
        net.set_static_limit(a1, 10.0)
        net.update_dynamic_limit(a1, 8.0)
        conn = net.open_connection(a1, b1)
        net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3),
                                    quantity_wh=5000))
        granted, spent = 8000, 5000
        assert net.window_wh(a1) == granted - spent
        with pytest.raises(DynamicLimitExceeded):
            net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3),
                                        quantity_wh=6000))

    def test_static_budget_is_per_period(self):
        net, _, _, _, (a1, _, b1) = two_lan_network()
        net.set_static_limit(a1, 6.0)
        conn = net.open_connection(a1, b1)
        net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3),
                                    quantity_wh=4000))
        with pytest.raises(StaticLimitExceeded):
            net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3),
                                        quantity_wh=3000))
        net.start_period()
        net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3),
                                    quantity_wh=3000))

    def test_window_zero_closes_valve_and_raise_reopens(self):
        net, _, _, _, (a1, _, b1) = two_lan_network()
        conn = net.open_connection(a1, b1)
        net.update_dynamic_limit(a1, 0)
        bee = make_bee(sender=mac(1), receiver=mac(3), quantity_wh=2000)
        with pytest.raises(DynamicLimitExceeded):
            net.send_bee(conn, bee)
        net.update_dynamic_limit(a1, 5.0)
        assert net.send_bee(conn, bee).hop_count == 2


class TestLayerAdmission:
    def test_static_reject_is_a_router_drop(self):
        # the ingress router (network layer) drops the frame, so it never
        # reaches the far side's transport layer, and nothing is delivered
        net, _, _, _, (a1, _, b1) = two_lan_network()
        net.set_static_limit(a1, 1.0)
        conn = net.open_connection(a1, b1)
        marker = 77_777  # unique quantity to find the attempt in the trace
        with pytest.raises(StaticLimitExceeded):
            net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3),
                                        quantity_wh=marker))
        rows = [r for r in net.trace if r.quantity_wh == marker]
        rejects = [r for r in rows if r.verdict == "reject:static-limit"]
        assert rejects and all(r.layer == "network" for r in rejects)
        router_eip = str(net._lans[(1, 1)].router_eip)
        assert rejects[0].src == router_eip
        # exactly one link hop (host -> ingress router), nothing beyond
        link_rows = [r for r in rows if r.layer == "link"]
        assert len(link_rows) == 1
        assert net.delivered(mac(3)) == ()

    def test_dynamic_reject_emits_no_frames(self):
        net, _, _, _, (a1, _, b1) = two_lan_network()
        conn = net.open_connection(a1, b1)
        net.update_dynamic_limit(a1, 1.0)
        marker = 55_555
        with pytest.raises(DynamicLimitExceeded):
            net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3),
                                        quantity_wh=marker))
        rows = [r for r in net.trace if r.quantity_wh == marker]
        assert {r.layer for r in rows} == {"app", "transport"}
        assert any(r.layer == "transport" and r.verdict == "reject:dynamic-limit"
                   for r in rows)

    def test_limit_updates_ride_the_private_plane(self):
        net, _, _, _, (a1, _, _) = two_lan_network()
        net.update_dynamic_limit(a1, 4.0)
        private = [r for r in net.trace if r.plane == "private"]
        assert any(r.kind == "window-update" for r in private)


class TestReliability:
    def test_corruption_triggers_retransmit(self):
        net, _, _, _, (a1, _, b1) = two_lan_network()
        conn = net.open_connection(a1, b1)
        net.inject_fault(mode="corrupt", at_hop=1, bit=300, count=1)
        receipt = net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3)))
        assert receipt.retries == 1
        assert len(net.delivered(mac(3))) == 1
        assert any(r.verdict == "drop:corrupt" for r in net.trace)
        assert any(r.kind == "nack" for r in net.trace)

    def test_persistent_loss_fails_after_retries(self):
        net, _, _, _, (a1, _, b1) = two_lan_network()
        conn = net.open_connection(a1, b1)
        net.inject_fault(mode="drop", at_hop=0, count=99)
        with pytest.raises(DeliveryFailed):
            net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3)))
        assert net.delivered(mac(3)) == ()

    def test_no_duplicate_delivery_when_ack_lost(self):
        net, _, _, _, (a1, _, b1) = two_lan_network()
        conn = net.open_connection(a1, b1)
        net.inject_fault(mode="drop", at_hop=0, count=1, kinds=("ack",))
        receipt = net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3)))
        assert receipt.retries == 1
        assert len(net.delivered(mac(3))) == 1

    def test_delivery_exactness(self):
        net, _, _, _, (a1, a2, b1) = two_lan_network()
        conn = net.open_connection(a1, b1)
        receipts = []
        for i in range(10):
            receipts.append(net.send_bee(
                conn, make_bee(sender=mac(1), receiver=mac(3),
                               quantity_wh=100 + i)))
        assert len(receipts) == len(net.delivered(mac(3)))


class TestRoutingEdges:
    def test_route_loop_raises_ttl(self):
        net, _, lan_a, lan_b, (a1, _, b1) = two_lan_network()
        lan_c = net.add_lan(1, 3)
        # point the two routers at each other for LAN 3's prefix
        net.set_route(lan_a.router_eip, (1, 3), lan_b.router_eip)
        net.set_route(lan_b.router_eip, (1, 3), lan_a.router_eip)
        ledger = net._ledger
        ledger.register_card(mac(50), "c-host")
        c1 = net.assign_eip(lan_c, mac(50))
        with pytest.raises(TtlExpired):
            net.open_connection(a1, c1)

    def test_missing_route_unroutable(self):
        net, _, lan_a, _, (a1, _, b1) = two_lan_network()
        net.set_route(lan_a.router_eip, (1, 2), None)
        with pytest.raises(Unroutable):
            net.open_connection(a1, b1)

    def test_trace_csv_shape(self):
        net, _, _, _, (a1, _, b1) = two_lan_network()
        conn = net.open_connection(a1, b1)
        net.send_bee(conn, make_bee(sender=mac(1), receiver=mac(3)))
        lines = net.trace_csv().strip().splitlines()
        assert lines[0] == "tick,layer,src,dst,kind,quantity_wh,verdict,plane"
        assert all(len(line.split(",")) == 8 for line in lines)
