#!/usr/bin/env python3
# Inference-cost comparison across the three representations. Grouping the
# same capture into sessions yields far fewer units than per-packet
# samples, so a session model answers "is this traffic malicious?" with
# much less inference work: the trend the timing table quantifies.

import numpy as np

from rawnet import (ClassSpec, HeaderCategory, Network, NetworkConfig,
                    Representation, SynthSpec, bench_inference, encode_unit,
                    split, synth_packets)

spec = SynthSpec(classes=[ClassSpec("c", b"\x42\x99\x10\x77", 0)],
                 packets_per_class=6000, payload_min=48, payload_max=200,
                 tuple_pool=512, proto="udp", seed=21)
capture = [pkt for pkt, _ in synth_packets(spec)]

net = Network(NetworkConfig(input_len=256), seed=0)
print(f"{'rep':6s} {'units':>6s} {'median ms':>10s} {'samples/s':>10s} "
      f"{'util':>5s}")
for rep in (Representation.SESSION, Representation.FLOW,
            Representation.PACKET):
    units = split(capture, rep).units
    x = np.stack([encode_unit(u, HeaderCategory.ALL_HEADERS, 256).values
                  for u in units])[:, None, :]
    r = bench_inference(net, x, repetitions=5, batch_size=16, lock_path=None)
    print(f"{rep.display:6s} {r.sample_count:6d} "
          f"{r.wall_test_seconds * 1e3:10.2f} {r.samples_per_second:10.0f} "
          f"{r.utilization:5.2f}")

print("\nfewer units -> less test-time work: ExpS < ExpF < ExpP")
