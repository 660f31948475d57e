#!/usr/bin/env python3
# The four header-retention categories, on one packet. Slices are byte
# ranges over the dissected header spans; removing the network header from
# one category and the link header from another makes the slice lengths
# obey |OnlyEth| + |WithoutEth| == |AllHeaders| + |NoHeaders|.

import tempfile

from rawnet import (HeaderCategory, build_packet, encode_unit, export_hex,
                    import_hex, parse_layout, slice_category, split_packets)

pkt = build_packet("192.168.1.10", "8.8.8.8", 40123, 443, 6,
                   b"\x16\x03\x01" + bytes(29))
layout = parse_layout(pkt)

sizes = {}
for cat in HeaderCategory:
    sliced = slice_category(pkt.data, layout, cat)
    sizes[cat] = len(sliced)
    print(f"{cat.display:12s} {len(sliced):3d} bytes  "
          f"head: {sliced[:8].hex()}...")
assert sizes[HeaderCategory.ONLY_ETH] + sizes[HeaderCategory.WITHOUT_ETH] \
    == sizes[HeaderCategory.ALL_HEADERS] + sizes[HeaderCategory.NO_HEADERS]

# A unit becomes one fixed-length training row: slices concatenated in time
# order, truncated/zero-padded to L, scaled into [0, 1] by 1/255.
(unit,) = split_packets([pkt]).units
sample = encode_unit(unit, HeaderCategory.NO_HEADERS, sample_len=64)
print(f"\nencoded: {sample.n_bytes} real bytes, padded to "
      f"{len(sample.values)}, values in [{sample.values.min():.3f}, "
      f"{sample.values.max():.3f}]")
print("first 16 scaled values:", [round(float(v), 3) for v in sample.values[:16]])

# Datasets interchange as hex lines (`label,hexdigits`), invertible exactly.
from rawnet import Dataset

ds = Dataset([sample], ["tls"], {"train": [0], "val": [], "test": []},
             seed=0, sample_len=64)
sample.label = 0
path = tempfile.mktemp(suffix=".hex")
export_hex(ds, path)
print("\nhex line:", open(path).read().splitlines()[-1][:48], "...")
assert import_hex(path).samples[0].n_bytes == sample.n_bytes
