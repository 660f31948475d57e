"""Synthetic Ethernet/IPv4 captures for desk-scale experiments.

Real botnet captures run to hundreds of gigabytes; these generators build
small labeled stand-ins whose classes are separable by construction: every
packet of a class carries that class's byte signature at a fixed payload
offset.  Packets are well-formed (real IPv4 and transport checksums) so
external dissection tools read the fixtures too, and generation is
deterministic under the seed.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from ipaddress import IPv4Address

import numpy as np

from .ingest import (ETHERTYPE_IPV4, LINKTYPE_ETHERNET, PROTO_TCP, PROTO_UDP,
                     RawPacket, write_pcap)


class SpecConflictError(ValueError):
    """The synthesis spec is internally inconsistent."""


def _checksum(data: bytes) -> int:
    """RFC 1071 ones-complement sum over 16-bit words."""
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f">{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ipv4_header(src: str, dst: str, proto: int, payload_len: int,
                ident: int = 0, ttl: int = 64) -> bytes:
    head = struct.pack(">BBHHHBBH4s4s", 0x45, 0, 20 + payload_len, ident,
                       0, ttl, proto, 0, IPv4Address(src).packed,
                       IPv4Address(dst).packed)
    return head[:10] + struct.pack(">H", _checksum(head)) + head[12:]

def _transport_checksum(src: str, dst: str, proto: int, segment: bytes) -> int:
    pseudo = (IPv4Address(src).packed + IPv4Address(dst).packed +
              struct.pack(">BBH", 0, proto, len(segment)))
    return _checksum(pseudo + segment) or 0xFFFF


def udp_datagram(src: str, dst: str, sport: int, dport: int,
                 payload: bytes) -> bytes:
    head = struct.pack(">HHHH", sport, dport, 8 + len(payload), 0)
    csum = _transport_checksum(src, dst, PROTO_UDP, head + payload)
    return head[:6] + struct.pack(">H", csum) + payload


def tcp_segment(src: str, dst: str, sport: int, dport: int, payload: bytes,
                seq: int = 0, ack: int = 0, flags: int = 0x18) -> bytes:
    head = struct.pack(">HHIIBBHHH", sport, dport, seq, ack, 5 << 4, flags,
                       8192, 0, 0)
    csum = _transport_checksum(src, dst, PROTO_TCP, head + payload)
    return head[:16] + struct.pack(">H", csum) + head[18:] + payload


def ethernet_frame(payload: bytes, src_mac: bytes = b"\x02\x00\x00\x00\x00\x01",
                   dst_mac: bytes = b"\x02\x00\x00\x00\x00\x02",
                   ethertype: int = ETHERTYPE_IPV4) -> bytes:
    return dst_mac + src_mac + struct.pack(">H", ethertype) + payload


def build_packet(src: str, dst: str, sport: int, dport: int, proto: int,
                 payload: bytes, ts_sec: int = 0, ts_frac: int = 0) -> RawPacket:
    """One well-formed Ethernet/IPv4/{UDP,TCP} frame as a RawPacket."""
    if proto == PROTO_UDP:
        segment = udp_datagram(src, dst, sport, dport, payload)
    elif proto == PROTO_TCP:
        segment = tcp_segment(src, dst, sport, dport, payload)
    else:
        raise ValueError(f"build_packet handles TCP/UDP, not proto {proto}")
    frame = ethernet_frame(ipv4_header(src, dst, proto, len(segment)) + segment)
    return RawPacket(ts_sec, ts_frac, len(frame), frame, LINKTYPE_ETHERNET)


@dataclass
class ClassSpec:
    """One traffic class: its name and the byte signature it carries."""

    name: str
    signature: bytes
    signature_offset: int = 0  # offset inside the payload


@dataclass
class SynthSpec:
    """Recipe for a labeled synthetic capture.

    Every class contributes packets_per_class packets; payload sizes are
    drawn uniformly from [payload_min, payload_max]; each class draws its
    5-tuples from its own pool of tuple_pool endpoints, and directions
    alternate, so every representation groups the capture differently:
    roughly tuple_pool sessions, twice that many flows, and one packet
    unit per packet.
    """

    classes: list[ClassSpec] = field(default_factory=list)
    packets_per_class: int = 100
    payload_min: int = 32
    payload_max: int = 256
    tuple_pool: int = 8
    proto: str = "udp"  # udp | tcp | mixed
    seed: int = 0

    def __post_init__(self):
        if not self.classes:
            raise SpecConflictError("need at least one class")
        if self.payload_min > self.payload_max:
            raise SpecConflictError("payload_min exceeds payload_max")
        if self.proto not in ("udp", "tcp", "mixed"):
            raise SpecConflictError(f"unknown proto choice {self.proto!r}")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise SpecConflictError(f"duplicate class names in {names}")
        for c in self.classes:
            if c.signature_offset + len(c.signature) > self.payload_min:
                raise SpecConflictError(
                    f"class {c.name!r}: signature spills past the minimum "
                    f"payload ({c.signature_offset}+{len(c.signature)} > "
                    f"{self.payload_min})")
        for i, a in enumerate(self.classes):
            for b in self.classes[i + 1:]:
                if not _signatures_differ(a, b):
                    raise SpecConflictError(
                        f"classes {a.name!r} and {b.name!r} have colliding "
                        f"signatures: no shared byte position differs, so "
                        f"the classes are not separable by construction")


def _signatures_differ(a: ClassSpec, b: ClassSpec) -> bool:
    """True when some payload position is covered by both and differs."""
    lo = max(a.signature_offset, b.signature_offset)
    hi = min(a.signature_offset + len(a.signature),
             b.signature_offset + len(b.signature))
    if hi <= lo:
        return False  # disjoint spans never force a difference
    return any(a.signature[p - a.signature_offset] !=
               b.signature[p - b.signature_offset] for p in range(lo, hi))


def synth_packets(spec: SynthSpec) -> list[tuple[RawPacket, str]]:
    """All packets of the capture with their class names, time-interleaved."""
    rng = np.random.default_rng(spec.seed)
    per_class_tuples = []
    for ci, _ in enumerate(spec.classes):
        pool = []
        for t in range(spec.tuple_pool):
            proto = {"udp": PROTO_UDP, "tcp": PROTO_TCP}.get(
                spec.proto, (PROTO_UDP, PROTO_TCP)[t % 2])
            pool.append((f"10.{ci + 1}.0.{t % 250 + 1}",
                         f"10.{ci + 1}.1.{t // 250 + 1}",
                         20000 + t, 80 + ci, proto))
        per_class_tuples.append(pool)

    out = []
    base = 1_600_000_000
    k = 0  # global packet counter; 1000 packets per second, 1 ms apart
    for i in range(spec.packets_per_class):
        for ci, cls in enumerate(spec.classes):
            src, dst, sport, dport, proto = \
                per_class_tuples[ci][int(rng.integers(spec.tuple_pool))]
            size = int(rng.integers(spec.payload_min, spec.payload_max + 1))
            payload = bytearray(rng.integers(0, 256, size, dtype=np.uint8)
                                .tobytes())
            payload[cls.signature_offset:
                    cls.signature_offset + len(cls.signature)] = cls.signature
            # Alternate direction so sessions see both flows.
            if i % 2:
                src, dst, sport, dport = dst, src, dport, sport
            out.append((build_packet(src, dst, sport, dport, proto,
                                     bytes(payload), base + k // 1000,
                                     (k % 1000) * 1000), cls.name))
            k += 1
    return out


def generate_fixture(spec: SynthSpec, path: str) -> int:
    """Write the whole capture (all classes interleaved) as one pcap."""
    packets = [pkt for pkt, _ in synth_packets(spec)]
    write_pcap(packets, path)
    return len(packets)


def write_class_captures(spec: SynthSpec, out_dir: str) -> list[tuple[str, str]]:
    """One pcap per class, as (path, label) pairs ready for build_dataset."""
    packets = synth_packets(spec)
    scenarios = []
    os.makedirs(out_dir, exist_ok=True)
    for cls in spec.classes:
        path = os.path.join(out_dir, f"{cls.name}.pcap")
        write_pcap([pkt for pkt, name in packets if name == cls.name], path)
        scenarios.append((path, cls.name))
    return scenarios
