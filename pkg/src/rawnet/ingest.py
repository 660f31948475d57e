"""Classic-pcap reading/writing and protocol header dissection.

Container layout (https://wiki.wireshark.org/Development/LibpcapFileFormat):
global header (24 bytes) followed by records, each a 16-byte header plus
captured bytes.  Both byte orders and both timestamp resolutions
(microsecond magic 0xa1b2c3d4, nanosecond magic 0xa1b23c4d) are supported.
pcapng is a different format and is rejected by name.

Dissection locates the link / network / transport header spans inside one
captured Ethernet frame so later stages can slice bytes by span.  It never
reads outside the captured data: a header that claims more bytes than were
captured makes the packet unparsable (MalformedHeaderError), it is not
guessed at.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from ipaddress import IPv4Address, IPv6Address, ip_address
from typing import Iterable, Iterator

LINKTYPE_ETHERNET = 1

MAGIC_MICRO = 0xA1B2C3D4
MAGIC_NANO = 0xA1B23C4D
_PCAPNG_MAGIC = 0x0A0D0D0A

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_IPV6 = 0x86DD
# 802.1Q / 802.1ad / QinQ tag protocol identifiers; each tag adds 4 bytes
# of link-layer framing.
VLAN_TPIDS = (0x8100, 0x88A8, 0x9100)

PROTO_ICMP = 1
PROTO_TCP = 6
PROTO_UDP = 17
PROTO_ICMPV6 = 58


class PcapError(Exception):
    """Base for capture-file and dissection failures."""


class UnknownMagicError(PcapError):
    """File does not start with a classic-pcap magic number."""


class TruncatedRecordError(PcapError):
    """A record header promises more bytes than remain in the file."""


class MalformedHeaderError(PcapError):
    """A protocol header is inconsistent with the captured bytes."""


@dataclass(frozen=True)
class RawPacket:
    """One captured frame.

    ts_frac is in the capture's native resolution (micro or nano seconds);
    data holds exactly the record's captured-length bytes, which may be
    shorter or longer than orig_len (snap length, padding).
    """

    ts_sec: int
    ts_frac: int
    orig_len: int
    data: bytes
    link_type: int


@dataclass(frozen=True)
class HeaderLayout:
    """Byte spans of the link / network / transport headers in one packet.

    Offsets/lengths are None for layers absent beyond the last parsable
    boundary.  Present layers are contiguous: net_off = eth_off + eth_len,
    trans_off = net_off + net_len, payload_off = trans_off + trans_len.
    """

    eth_off: int | None = None
    eth_len: int | None = None
    net_off: int | None = None
    net_len: int | None = None
    trans_off: int | None = None
    trans_len: int | None = None
    payload_off: int | None = None


@dataclass(frozen=True)
class FiveTuple:
    """Unidirectional traffic identity: addresses, ports, IP protocol.

    Ports are 0 when the transport has none (ICMP and friends).
    """

    src_ip: IPv4Address | IPv6Address
    dst_ip: IPv4Address | IPv6Address
    src_port: int
    dst_port: int
    proto: int

    def reversed(self) -> "FiveTuple":
        return FiveTuple(self.dst_ip, self.src_ip, self.dst_port,
                         self.src_port, self.proto)

    def __str__(self) -> str:
        return (f"{_fmt_endpoint(self.src_ip, self.src_port)}>"
                f"{_fmt_endpoint(self.dst_ip, self.dst_port)}/{self.proto}")


def _fmt_endpoint(ip, port) -> str:
    host = f"[{ip}]" if ip.version == 6 else str(ip)
    return f"{host}:{port}"


class PcapReader:
    """Streaming reader for one classic-pcap file.

    Capture-level facts (link type, timestamp resolution, byte order,
    snap length) are parsed once from the global header and exposed as
    attributes; iterating yields RawPacket in file order.  Memory use is
    independent of file size.
    """

    def __init__(self, path: str):
        self.path = path
        self._fp = open(path, "rb")
        try:
            magic_bytes = self._fp.read(4)
            if len(magic_bytes) < 4:
                raise UnknownMagicError(f"{path}: too short to hold a pcap magic number")
            for order in ("<", ">"):
                magic = struct.unpack(order + "I", magic_bytes)[0]
                if magic in (MAGIC_MICRO, MAGIC_NANO):
                    self.byte_order = order
                    self.nanosecond = magic == MAGIC_NANO
                    break
            else:
                magic_le = struct.unpack("<I", magic_bytes)[0]
                if magic_le == _PCAPNG_MAGIC:
                    raise UnknownMagicError(
                        f"{path}: pcapng is not supported, convert to classic pcap")
                raise UnknownMagicError(
                    f"{path}: magic 0x{magic_le:08x} is not classic pcap")
            rest = self._fp.read(20)
            if len(rest) < 20:
                raise TruncatedRecordError(f"{path}: global header truncated")
            (self.version_major, self.version_minor, self.thiszone,
             self.sigfigs, self.snaplen, self.link_type) = struct.unpack(
                self.byte_order + "HHiIII", rest)
        except Exception:
            self._fp.close()
            raise

    @property
    def ts_resolution(self) -> int:
        """Ticks per second of ts_frac: 1e6 (micro) or 1e9 (nano)."""
        return 1_000_000_000 if self.nanosecond else 1_000_000

    def __iter__(self) -> Iterator[RawPacket]:
        rec = struct.Struct(self.byte_order + "IIII")
        while True:
            head = self._fp.read(16)
            if not head:
                return
            if len(head) < 16:
                raise TruncatedRecordError(
                    f"{self.path}: record header truncated ({len(head)} of 16 bytes)")
            ts_sec, ts_frac, incl_len, orig_len = rec.unpack(head)
            data = self._fp.read(incl_len)
            if len(data) < incl_len:
                raise TruncatedRecordError(
                    f"{self.path}: record promises {incl_len} bytes, "
                    f"{len(data)} remain")
            yield RawPacket(ts_sec, ts_frac, orig_len, data, self.link_type)

    def close(self) -> None:
        self._fp.close()

    def __enter__(self) -> "PcapReader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_pcap(path: str) -> Iterator[RawPacket]:
    """Yield RawPacket from a classic pcap file, in file order.

    Damage mid-file surfaces as TruncatedRecordError after every packet
    before the damage has been yielded.
    """
    with PcapReader(path) as reader:
        yield from reader


def write_pcap(packets: Iterable[RawPacket], path: str, *,
               nanosecond: bool = False, big_endian: bool = False,
               snaplen: int = 65535, link_type: int | None = None) -> None:
    """Write packets as a classic pcap file, bit-exact on re-read.

    link_type defaults to the first packet's; all packets must agree
    (classic pcap stores one link type per file).
    """
    packets = list(packets)
    if link_type is None:
        link_type = packets[0].link_type if packets else LINKTYPE_ETHERNET
    order = ">" if big_endian else "<"
    magic = MAGIC_NANO if nanosecond else MAGIC_MICRO
    limit = 1_000_000_000 if nanosecond else 1_000_000
    rec = struct.Struct(order + "IIII")
    with open(path, "wb") as fp:
        fp.write(struct.pack(order + "IHHiIII", magic, 2, 4, 0, 0,
                             snaplen, link_type))
        for pkt in packets:
            if pkt.link_type != link_type:
                raise ValueError(
                    f"packet link type {pkt.link_type} differs from file "
                    f"link type {link_type}")
            if not 0 <= pkt.ts_frac < limit:
                raise ValueError(
                    f"ts_frac {pkt.ts_frac} out of range for "
                    f"{'nano' if nanosecond else 'micro'}second resolution")
            fp.write(rec.pack(pkt.ts_sec, pkt.ts_frac, len(pkt.data),
                              pkt.orig_len))
            fp.write(pkt.data)


def _u16(data: bytes, off: int) -> int:
    return (data[off] << 8) | data[off + 1]


def parse_layout(pkt: RawPacket) -> HeaderLayout:
    """Locate header spans in an Ethernet frame.

    Raises MalformedHeaderError when a header is inconsistent (IHL < 5,
    TCP data offset < 5, or any span past the captured bytes); callers
    tag such packets unparsable and count them rather than dropping
    silently.  Layers that simply end (ARP, unknown transport) leave the
    deeper fields None.
    """
    if pkt.link_type != LINKTYPE_ETHERNET:
        raise MalformedHeaderError(
            f"link type {pkt.link_type} is not Ethernet ({LINKTYPE_ETHERNET})")
    data = pkt.data
    if len(data) < 14:
        raise MalformedHeaderError(f"{len(data)} bytes cannot hold an Ethernet header")
    # VLAN tags are link-layer framing: fold each 4-byte tag into eth_len.
    pos = 12
    ethertype = _u16(data, pos)
    while ethertype in VLAN_TPIDS:
        pos += 4
        if pos + 2 > len(data):
            raise MalformedHeaderError("VLAN tag exceeds captured bytes")
        ethertype = _u16(data, pos)
    eth_len = pos + 2
    layout = HeaderLayout(eth_off=0, eth_len=eth_len)

    net_off = eth_len
    if ethertype == ETHERTYPE_IPV4:
        if net_off + 20 > len(data):
            raise MalformedHeaderError("IPv4 header exceeds captured bytes")
        version, ihl = data[net_off] >> 4, data[net_off] & 0x0F
        if version != 4:
            raise MalformedHeaderError(f"IPv4 ethertype but version field is {version}")
        if ihl < 5:
            raise MalformedHeaderError(f"IPv4 IHL {ihl} < 5")
        net_len = ihl * 4
        if net_off + net_len > len(data):
            raise MalformedHeaderError("IPv4 options exceed captured bytes")
        proto = data[net_off + 9]
    elif ethertype == ETHERTYPE_IPV6:
        if net_off + 40 > len(data):
            raise MalformedHeaderError("IPv6 header exceeds captured bytes")
        if data[net_off] >> 4 != 6:
            raise MalformedHeaderError(
                f"IPv6 ethertype but version field is {data[net_off] >> 4}")
        # Extension headers count as payload; only the fixed header is the
        # network span.
        net_len = 40
        proto = data[net_off + 6]
    else:
        return layout  # no IP layer (ARP etc.): deeper spans stay unset

    layout = HeaderLayout(eth_off=0, eth_len=eth_len,
                          net_off=net_off, net_len=net_len)
    trans_off = net_off + net_len
    if proto == PROTO_TCP:
        if trans_off + 20 > len(data):
            raise MalformedHeaderError("TCP header exceeds captured bytes")
        doff = data[trans_off + 12] >> 4
        if doff < 5:
            raise MalformedHeaderError(f"TCP data offset {doff} < 5")
        trans_len = doff * 4
        if trans_off + trans_len > len(data):
            raise MalformedHeaderError("TCP options exceed captured bytes")
    elif proto == PROTO_UDP:
        trans_len = 8
        if trans_off + trans_len > len(data):
            raise MalformedHeaderError("UDP header exceeds captured bytes")
    elif proto in (PROTO_ICMP, PROTO_ICMPV6):
        trans_len = 8
        if trans_off + trans_len > len(data):
            raise MalformedHeaderError("ICMP header exceeds captured bytes")
    else:
        return layout  # unknown transport: the rest of the packet is payload

    return HeaderLayout(eth_off=0, eth_len=eth_len, net_off=net_off,
                        net_len=net_len, trans_off=trans_off,
                        trans_len=trans_len, payload_off=trans_off + trans_len)


def five_tuple_of(pkt: RawPacket, layout: HeaderLayout) -> FiveTuple | None:
    """Extract the 5-tuple, or None when the packet has no network layer."""
    if layout.net_off is None:
        return None
    data, off = pkt.data, layout.net_off
    if data[off] >> 4 == 4:
        src = ip_address(data[off + 12:off + 16])
        dst = ip_address(data[off + 16:off + 20])
        proto = data[off + 9]
    else:
        src = ip_address(data[off + 8:off + 24])
        dst = ip_address(data[off + 24:off + 40])
        proto = data[off + 6]
    sport = dport = 0
    if proto in (PROTO_TCP, PROTO_UDP) and layout.trans_off is not None:
        sport = _u16(data, layout.trans_off)
        dport = _u16(data, layout.trans_off + 2)
    return FiveTuple(src, dst, sport, dport, proto)
