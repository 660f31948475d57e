"""Grouping semantics: representation contracts, oracle equality,
conservation, refinement, ordering."""

import numpy as np
import pytest

from rawnet.ingest import (LINKTYPE_ETHERNET, RawPacket, five_tuple_of,
                           parse_layout)
from rawnet.splitter import (Representation, SessionKey, split, split_flows,
                             split_packets, split_sessions, write_manifest)
from rawnet.synth import build_packet

from conftest import udp_packet
from oracles import brute_force_flows, brute_force_sessions

A_TO_B = dict(src="10.0.0.1", dst="10.0.0.2", sport=1111, dport=2222)
B_TO_A = dict(src="10.0.0.2", dst="10.0.0.1", sport=2222, dport=1111)


def garbage_frame(ts=0):
    return RawPacket(ts, 0, 6, b"\x00" * 6, LINKTYPE_ETHERNET)


def random_capture(n, seed, pool=6, garbage_every=0):
    """Random tuple-pool packets, optionally salted with unparsable frames."""
    rng = np.random.default_rng(seed)
    endpoints = [(f"10.9.0.{i + 1}", 20000 + i) for i in range(pool)]
    packets = []
    for k in range(n):
        if garbage_every and k % garbage_every == 0:
            packets.append(garbage_frame(ts=k))
            continue
        i, j = rng.choice(pool, 2, replace=False)
        (sip, spt), (dip, dpt) = endpoints[i], endpoints[j]
        proto = (17, 6)[int(rng.integers(2))]
        packets.append(build_packet(sip, dip, int(spt), int(dpt), proto,
                                    b"p" * int(rng.integers(4, 40)),
                                    ts_sec=k // 100, ts_frac=(k % 100) * 1000))
    return packets


def five_tuples_of(capture):
    out = []
    for pkt in capture:
        try:
            out.append(five_tuple_of(pkt, parse_layout(pkt)))
        except Exception:
            out.append(None)
    return out


def unit_indices(result, capture):
    """Units as lists of original capture indices (identity via object)."""
    position = {id(pkt): i for i, pkt in enumerate(capture)}
    return [sorted(position[id(pkt)] for pkt, _ in unit.packets)
            for unit in result.units]


def test_directional_example():
    capture = [udp_packet(**A_TO_B, ts_sec=0), udp_packet(**A_TO_B, ts_sec=1),
               udp_packet(**B_TO_A, ts_sec=2)]
    flows = split_flows(capture)
    assert [u.packet_count for u in flows.units] == [2, 1]
    sessions = split_sessions(capture)
    assert [u.packet_count for u in sessions.units] == [3]


def test_single_flow_when_all_packets_share_tuple():
    capture = [udp_packet(**A_TO_B, ts_sec=i) for i in range(7)]
    result = split_flows(capture)
    assert len(result.units) == 1 and result.units[0].packet_count == 7


def test_proto_separates_sessions():
    capture = [build_packet("10.0.0.1", "10.0.0.2", 5, 6, 17, b"u"),
               build_packet("10.0.0.1", "10.0.0.2", 5, 6, 6, b"t")]
    assert len(split_sessions(capture).units) == 2


def test_packets_identity_grouping():
    capture = [udp_packet(ts_sec=i) for i in range(3)]
    result = split_packets(capture)
    assert len(result.units) == 3
    assert all(u.packet_count == 1 for u in result.units)
    assert [u.key for u in result.units] == [0, 1, 2]


def test_unparsable_frame_excluded_and_counted():
    capture = [udp_packet(), garbage_frame(), udp_packet()]
    result = split_packets(capture)
    assert len(result.units) == 2
    assert result.n_excluded == 1 and result.excluded_malformed == 1


def test_empty_capture():
    for fn in (split_packets, split_flows, split_sessions):
        result = fn([])
        assert result.units == [] and result.n_packets == 0


def test_arp_has_no_five_tuple_and_is_counted():
    arp = RawPacket(0, 0, 60, b"\xff" * 12 + b"\x08\x06" + b"\x00" * 46,
                    LINKTYPE_ETHERNET)
    capture = [udp_packet(), arp]
    flows = split_flows(capture)
    assert flows.excluded_no_five_tuple == 1
    # ...but it still is a packet unit: only flow/session need a 5-tuple.
    assert len(split_packets(capture).units) == 2


def test_session_key_canonicalization_property():
    rng = np.random.default_rng(7)
    for _ in range(200):
        pkt = build_packet(f"10.{rng.integers(256)}.0.1",
                           f"10.{rng.integers(256)}.0.2",
                           int(rng.integers(1, 65536)),
                           int(rng.integers(1, 65536)),
                           (6, 17)[int(rng.integers(2))], b"z")
        ft = five_tuple_of(pkt, parse_layout(pkt))
        assert SessionKey.from_five_tuple(ft) == \
            SessionKey.from_five_tuple(ft.reversed())


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_flow_grouping_matches_brute_force(seed):
    capture = random_capture(1000, seed)
    got = unit_indices(split_flows(capture), capture)
    expected = brute_force_flows(five_tuples_of(capture))
    assert got == [sorted(g) for g in expected]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_session_grouping_matches_brute_force(seed):
    capture = random_capture(1000, seed)
    got = unit_indices(split_sessions(capture), capture)
    expected = brute_force_sessions(five_tuples_of(capture))
    assert got == [sorted(g) for g in expected]


@pytest.mark.parametrize("garbage_every", [0, 7])
def test_conservation_invariant(garbage_every):
    capture = random_capture(400, seed=3, garbage_every=garbage_every)
    for rep in Representation:
        result = split(capture, rep)
        assert result.n_excluded + sum(u.packet_count for u in result.units) \
            == result.n_packets == len(capture)


def test_refinement_sessions_are_unions_of_flows():
    capture = random_capture(600, seed=4)
    flows = unit_indices(split_flows(capture), capture)
    sessions = unit_indices(split_sessions(capture), capture)
    flow_sets = [frozenset(g) for g in flows]
    for session in sessions:
        covering = [f for f in flow_sets if f <= frozenset(session)]
        assert 1 <= len(covering) <= 2
        assert frozenset(session) == frozenset().union(*covering)
    for f in flow_sets:  # no flow straddles two sessions
        assert sum(1 for s in sessions if f & frozenset(s)) == 1


def test_determinism_and_first_appearance_order():
    capture = random_capture(300, seed=5)
    first = split_flows(capture)
    second = split_flows(capture)
    assert [u.key for u in first.units] == [u.key for u in second.units]
    assert unit_indices(first, capture) == unit_indices(second, capture)
    seen = [min(g) for g in unit_indices(first, capture)]
    assert seen == sorted(seen)  # units ordered by first appearance


def test_units_time_ordered_with_stable_ties():
    # Deliver timestamps out of order with one duplicate instant.
    specs = [(5, 0), (1, 0), (1, 0), (3, 500)]
    capture = [udp_packet(**A_TO_B, ts_sec=s, ts_frac=f) for s, f in specs]
    (unit,) = split_flows(capture).units
    stamps = [(p.ts_sec, p.ts_frac) for p, _ in unit.packets]
    assert stamps == sorted(stamps)
    # The two (1, 0) packets must keep capture order: index 1 before 2.
    assert unit.packets[0][0] is capture[1]
    assert unit.packets[1][0] is capture[2]


def test_manifest_lines(tmp_path):
    capture = [udp_packet(**A_TO_B), udp_packet(**B_TO_A)]
    result = split_sessions(capture)
    path = tmp_path / "manifest.txt"
    write_manifest(result, str(path), header_lines=["config_hash=abc"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_hash=abc"
    assert lines[1].startswith("# packets=2 excluded=0")
    kind, key, count, nbytes = lines[2].split(",")
    assert kind == "session" and count == "2"
    assert "<>" in key and key.endswith("/17")
    assert int(nbytes) == sum(len(p.data) for p in capture)
