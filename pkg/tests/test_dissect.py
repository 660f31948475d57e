"""Header-span dissection: exact offsets, absence, malformation, fuzz.

Expected spans are computed independently from the published header
layouts: Ethernet 14 bytes (+4 per VLAN tag), IPv4 IHL*4, IPv6 fixed 40,
UDP 8, TCP data-offset*4.
"""

import struct
from ipaddress import ip_address

import numpy as np
import pytest

from rawnet.ingest import (LINKTYPE_ETHERNET, MalformedHeaderError, RawPacket,
                           five_tuple_of, parse_layout, read_pcap)
from rawnet.synth import ethernet_frame, udp_datagram

from conftest import tcp_packet, udp_packet


def frame(data: bytes) -> RawPacket:
    return RawPacket(0, 0, len(data), data, LINKTYPE_ETHERNET)


def test_udp_fixture_spans(one_udp_path):
    (pkt,) = read_pcap(one_udp_path)
    layout = parse_layout(pkt)
    assert (layout.eth_off, layout.eth_len) == (0, 14)
    assert (layout.net_off, layout.net_len) == (14, 20)
    assert (layout.trans_off, layout.trans_len) == (34, 8)
    assert layout.payload_off == 42


def test_udp_fixture_five_tuple(one_udp_path):
    (pkt,) = read_pcap(one_udp_path)
    ft = five_tuple_of(pkt, parse_layout(pkt))
    assert (str(ft.src_ip), str(ft.dst_ip)) == ("10.0.0.1", "10.0.0.2")
    assert (ft.src_port, ft.dst_port, ft.proto) == (5000, 53, 17)


def test_arp_frame_has_no_network_layer():
    arp = ethernet_frame(b"\x00\x01\x08\x00\x06\x04\x00\x01" + b"\x00" * 20,
                         ethertype=0x0806)
    layout = parse_layout(frame(arp))
    assert (layout.eth_off, layout.eth_len) == (0, 14)
    assert layout.net_off is None and layout.trans_off is None
    assert five_tuple_of(frame(arp), layout) is None


def test_ipv4_options_extend_net_len():
    # IHL 6: one 4-byte option word after the fixed 20 bytes.
    base = udp_packet().data
    ip = bytearray(base[14:34]) + b"\x01\x01\x01\x00"  # NOP padding option
    ip[0] = 0x46
    data = base[:14] + bytes(ip) + base[34:]
    layout = parse_layout(frame(data))
    assert layout.net_len == 24
    assert layout.trans_off == 14 + 24


def test_tcp_data_offset_extends_trans_len():
    base = tcp_packet().data
    tcp = bytearray(base[34:54]) + b"\x01\x01\x01\x01\x01\x01\x01\x00"
    tcp[12] = 7 << 4  # data offset 7 words = 28 bytes
    data = base[:34] + bytes(tcp) + base[54:]
    layout = parse_layout(frame(data))
    assert layout.trans_len == 28
    assert layout.payload_off == 34 + 28


def test_vlan_tags_count_as_link_header():
    base = udp_packet().data
    single = base[:12] + b"\x81\x00\x00\x05" + base[12:]
    layout = parse_layout(frame(single))
    assert layout.eth_len == 18
    assert layout.net_off == 18
    double = base[:12] + b"\x88\xa8\x00\x05" + b"\x81\x00\x00\x07" + base[12:]
    layout = parse_layout(frame(double))
    assert layout.eth_len == 22


def ipv6_frame(next_header: int, after: bytes) -> RawPacket:
    head = struct.pack(">IHBB16s16s", 6 << 28, len(after), next_header, 64,
                       ip_address("fe80::1").packed,
                       ip_address("fe80::2").packed)
    return frame(ethernet_frame(head + after, ethertype=0x86DD))


def test_ipv6_udp():
    pkt = ipv6_frame(17, udp_datagram("10.0.0.1", "10.0.0.2", 9, 10, b"hi"))
    layout = parse_layout(pkt)
    assert (layout.net_off, layout.net_len) == (14, 40)
    assert (layout.trans_off, layout.trans_len) == (54, 8)
    ft = five_tuple_of(pkt, layout)
    assert (str(ft.src_ip), ft.src_port, ft.dst_port) == ("fe80::1", 9, 10)


def test_ipv6_extension_header_folds_into_payload():
    # Hop-by-hop (0) is an extension header: transport stays unset.
    pkt = ipv6_frame(0, b"\x11\x00" + b"\x00" * 14)
    layout = parse_layout(pkt)
    assert (layout.net_off, layout.net_len) == (14, 40)
    assert layout.trans_off is None and layout.payload_off is None
    ft = five_tuple_of(pkt, layout)
    assert (ft.src_port, ft.dst_port, ft.proto) == (0, 0, 0)


def test_icmp_echo_gets_zero_ports():
    base = udp_packet(payload=b"").data
    ip = bytearray(base[14:34])
    ip[9] = 1  # ICMP
    icmp = b"\x08\x00\x00\x00\x00\x01\x00\x01" + b"ping-data"
    ip[2:4] = struct.pack(">H", 20 + len(icmp))
    data = base[:14] + bytes(ip) + icmp
    layout = parse_layout(frame(data))
    assert layout.trans_len == 8
    ft = five_tuple_of(frame(data), layout)
    assert (ft.src_port, ft.dst_port, ft.proto) == (0, 0, 1)


def test_unknown_transport_leaves_transport_unset():
    base = udp_packet().data
    ip = bytearray(base[14:34])
    ip[9] = 47  # GRE: not parsed, counts as payload
    data = base[:14] + bytes(ip) + base[34:]
    layout = parse_layout(frame(data))
    assert layout.net_len == 20
    assert layout.trans_off is None
    ft = five_tuple_of(frame(data), layout)
    assert (ft.src_port, ft.dst_port, ft.proto) == (0, 0, 47)


@pytest.mark.parametrize("mutate,message", [
    (lambda d: d[:14] + bytes([0x44]) + d[15:], "IHL"),          # IHL 4
    (lambda d: d[:26], "exceeds"),                               # cut IPv4
    (lambda d: d[:36], "UDP"),                                   # cut UDP
    (lambda d: d[:14] + bytes([0x54]) + d[15:], "version"),      # version 5
])
def test_malformed_ipv4_variants(mutate, message):
    data = mutate(udp_packet().data)
    with pytest.raises(MalformedHeaderError, match=message):
        parse_layout(frame(data))


def test_malformed_tcp_data_offset():
    data = bytearray(tcp_packet().data)
    data[34 + 12] = 4 << 4  # data offset 4 < 5
    with pytest.raises(MalformedHeaderError, match="data offset"):
        parse_layout(frame(bytes(data)))


def test_non_ethernet_link_type_is_unparsable():
    pkt = RawPacket(0, 0, 20, b"\x00" * 20, 101)  # raw-IP link type
    with pytest.raises(MalformedHeaderError, match="link type"):
        parse_layout(pkt)


def test_runt_frame_is_unparsable():
    with pytest.raises(MalformedHeaderError):
        parse_layout(frame(b"\x00" * 8))


def _spans(layout):
    spans = []
    for off, length in ((layout.eth_off, layout.eth_len),
                        (layout.net_off, layout.net_len),
                        (layout.trans_off, layout.trans_len)):
        if off is not None:
            spans.append((off, off + length))
    return spans


def test_fuzz_never_reads_out_of_bounds():
    # Garbage must be classified, never crash or cross the data boundary.
    rng = np.random.default_rng(1234)
    for _ in range(500):
        size = int(rng.integers(0, 120))
        data = rng.integers(0, 256, size, dtype=np.uint8).tobytes()
        if rng.random() < 0.5 and size >= 14:
            # Often force a plausible ethertype to reach the deeper parsers.
            etype = [b"\x08\x00", b"\x86\xdd", b"\x81\x00"][int(rng.integers(3))]
            data = data[:12] + etype + data[14:]
        pkt = frame(data)
        try:
            layout = parse_layout(pkt)
        except MalformedHeaderError:
            continue
        spans = _spans(layout)
        for (a, b), (c, d) in zip(spans, spans[1:]):
            assert b == c, "present layers must be contiguous"
        for a, b in spans:
            assert 0 <= a <= b <= len(data)
        if layout.payload_off is not None:
            assert layout.payload_off <= len(data)
        five_tuple_of(pkt, layout)  # must not raise either


def test_parse_is_deterministic():
    pkt = udp_packet()
    assert parse_layout(pkt) == parse_layout(pkt)
