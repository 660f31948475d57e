"""Group captured packets into the three traffic representations.

A capture can be viewed as raw packets (one unit per packet), raw flows
(unidirectional, grouped by exact 5-tuple) or raw sessions (bidirectional,
grouped by the 5-tuple up to source/destination reversal).  Whole captures
are grouped: there is no timeout-based expiry, one key means one unit per
file.  Frames that cannot be dissected, or that carry no 5-tuple where one
is required, are excluded and counted, never dropped silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from ipaddress import IPv4Address, IPv6Address
from typing import Iterable

from .ingest import (FiveTuple, HeaderLayout, MalformedHeaderError, RawPacket,
                     five_tuple_of, parse_layout, _fmt_endpoint)


class Representation(Enum):
    PACKET = "packet"
    FLOW = "flow"
    SESSION = "session"

    @property
    def display(self) -> str:
        """Short experiment tag used in report tables."""
        return {"packet": "ExpP", "flow": "ExpF", "session": "ExpS"}[self.value]


@dataclass(frozen=True)
class SessionKey:
    """Bidirectional traffic identity: endpoints in canonical order.

    canonical(t) == canonical(t reversed) for every 5-tuple t, which is the
    defining property of a session.
    """

    endpoint_a: tuple[IPv4Address | IPv6Address, int]
    endpoint_b: tuple[IPv4Address | IPv6Address, int]
    proto: int

    @classmethod
    def from_five_tuple(cls, ft: FiveTuple) -> "SessionKey":
        a = (ft.src_ip, ft.src_port)
        b = (ft.dst_ip, ft.dst_port)
        # Lexicographically smaller endpoint first; version before packed
        # bytes keeps v4/v6 comparable.
        if _endpoint_sort_key(a) > _endpoint_sort_key(b):
            a, b = b, a
        return cls(a, b, ft.proto)

    def matches(self, ft: FiveTuple) -> bool:
        return SessionKey.from_five_tuple(ft) == self

    def __str__(self) -> str:
        return (f"{_fmt_endpoint(*self.endpoint_a)}<>"
                f"{_fmt_endpoint(*self.endpoint_b)}/{self.proto}")


def _endpoint_sort_key(endpoint):
    ip, port = endpoint
    return (ip.version, ip.packed, port)


@dataclass
class TrafficUnit:
    """One sample-to-be: a key plus its time-ordered dissected packets."""

    unit_kind: Representation
    key: FiveTuple | SessionKey | int
    packets: list[tuple[RawPacket, HeaderLayout]]

    @property
    def packet_count(self) -> int:
        return len(self.packets)

    @property
    def byte_count(self) -> int:
        return sum(len(pkt.data) for pkt, _ in self.packets)


@dataclass
class SplitResult:
    """Units plus the exclusion accounting that makes grouping auditable.

    Conservation: n_excluded + sum of unit sizes == n_packets.
    """

    representation: Representation
    units: list[TrafficUnit]
    n_packets: int = 0
    n_excluded: int = 0
    excluded_malformed: int = 0
    excluded_no_five_tuple: int = 0

    def __iter__(self):
        return iter(self.units)

    def __len__(self) -> int:
        return len(self.units)


def _dissected(capture: Iterable[RawPacket]):
    """Yield (index, packet, layout-or-None); None marks unparsable frames."""
    for index, pkt in enumerate(capture):
        try:
            yield index, pkt, parse_layout(pkt)
        except MalformedHeaderError:
            yield index, pkt, None


def split_packets(capture: Iterable[RawPacket]) -> SplitResult:
    """One unit per parsable packet, capture order preserved."""
    result = SplitResult(Representation.PACKET, [])
    for index, pkt, layout in _dissected(capture):
        result.n_packets += 1
        if layout is None:
            result.n_excluded += 1
            result.excluded_malformed += 1
            continue
        result.units.append(
            TrafficUnit(Representation.PACKET, index, [(pkt, layout)]))
    return result


def split_flows(capture: Iterable[RawPacket]) -> SplitResult:
    """One unit per distinct 5-tuple, ordered by first appearance."""
    return _split_keyed(capture, Representation.FLOW, lambda ft: ft)


def split_sessions(capture: Iterable[RawPacket]) -> SplitResult:
    """One unit per canonical endpoint pair, ordered by first appearance."""
    return _split_keyed(capture, Representation.SESSION,
                        SessionKey.from_five_tuple)


def _split_keyed(capture, representation, key_of):
    result = SplitResult(representation, [])
    order: list = []
    groups: dict = {}
    for index, pkt, layout in _dissected(capture):
        result.n_packets += 1
        if layout is None:
            result.n_excluded += 1
            result.excluded_malformed += 1
            continue
        ft = five_tuple_of(pkt, layout)
        if ft is None:
            result.n_excluded += 1
            result.excluded_no_five_tuple += 1
            continue
        key = key_of(ft)
        if key not in groups:
            groups[key] = []
            order.append(key)
        # Carry the capture index so equal timestamps keep file order.
        groups[key].append((index, pkt, layout))
    for key in order:
        recs = sorted(groups[key],
                      key=lambda r: (r[1].ts_sec, r[1].ts_frac, r[0]))
        result.units.append(
            TrafficUnit(representation, key,
                        [(pkt, layout) for _, pkt, layout in recs]))
    return result


def split(capture: Iterable[RawPacket],
          representation: Representation) -> SplitResult:
    """Dispatch to the splitter for the requested representation."""
    fn = {Representation.PACKET: split_packets,
          Representation.FLOW: split_flows,
          Representation.SESSION: split_sessions}[representation]
    return fn(capture)


def write_manifest(result: SplitResult, path: str,
                   header_lines: Iterable[str] = ()) -> None:
    """One `kind,key,packet_count,byte_count` line per unit.

    The manifest exists for auditing our grouping against external
    splitting tools; header_lines go in as '#'-prefixed comments.
    """
    with open(path, "w") as fp:
        for line in header_lines:
            fp.write(f"# {line}\n")
        fp.write(f"# packets={result.n_packets} excluded={result.n_excluded} "
                 f"malformed={result.excluded_malformed} "
                 f"no_five_tuple={result.excluded_no_five_tuple}\n")
        for unit in result.units:
            fp.write(f"{unit.unit_kind.value},{unit.key},"
                     f"{unit.packet_count},{unit.byte_count}\n")
