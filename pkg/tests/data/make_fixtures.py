"""Regenerate the checked-in capture fixtures (run from the repo root).

one_udp.pcap: a single 60-byte Ethernet/IPv4/UDP packet
(10.0.0.1:5000 -> 10.0.0.2:53, 18 payload bytes).  Tests assert the file
byte-for-byte, so regenerate only when the builder changes on purpose.
"""

import os

from rawnet.ingest import write_pcap
from rawnet.synth import build_packet

HERE = os.path.dirname(os.path.abspath(__file__))

ONE_UDP = build_packet("10.0.0.1", "10.0.0.2", 5000, 53, 17,
                       bytes(range(18)), ts_sec=1_600_000_000, ts_frac=250_000)

if __name__ == "__main__":
    path = os.path.join(HERE, "one_udp.pcap")
    write_pcap([ONE_UDP], path)
    print(f"wrote {path} ({len(ONE_UDP.data)}-byte packet)")
