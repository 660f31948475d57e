#!/usr/bin/env python3
# One capture, three views: raw packets, unidirectional flows, and
# bidirectional sessions. Flows key on the exact 5-tuple; sessions fold the
# two directions of a conversation together.

from rawnet import (ClassSpec, SynthSpec, split_flows, split_packets,
                    split_sessions, synth_packets)

spec = SynthSpec(classes=[ClassSpec("demo", b"\xd0\x0d", 0)],
                 packets_per_class=200, payload_min=16, payload_max=120,
                 tuple_pool=5, proto="mixed", seed=3)
capture = [pkt for pkt, _ in synth_packets(spec)]

for name, result in [("packets", split_packets(capture)),
                     ("flows", split_flows(capture)),
                     ("sessions", split_sessions(capture))]:
    sizes = [u.packet_count for u in result.units]
    print(f"{name:9s} {len(result.units):4d} units  "
          f"(largest {max(sizes)}, excluded {result.n_excluded})")

# Conservation: every input packet is in exactly one unit or counted out.
flows = split_flows(capture)
assert flows.n_excluded + sum(u.packet_count for u in flows.units) \
    == len(capture)

# Each session is the union of one or two flows (one per direction).
sessions = split_sessions(capture)
print("\nfirst three sessions:")
for unit in sessions.units[:3]:
    print(f"  {unit.key}  packets={unit.packet_count} bytes={unit.byte_count}")
