"""Turn traffic units into fixed-length labeled byte vectors.

Four header-retention categories decide which byte spans of each packet
survive:

    all headers     whole packet
    only eth        link header ++ transport header onward (network removed)
    without eth     network header onward
    no headers      transport header onward

Per-packet slices are concatenated in time order, truncated to the sample
length, zero-padded, and scaled by 1/255 so every value sits in [0, 1].
Datasets carry an ordered class vocabulary and seeded, stratified
train/val/test splits, and round-trip through a line-oriented hex
interchange file (two hex digits per pre-padding byte).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .ingest import HeaderLayout, read_pcap
from .splitter import Representation, TrafficUnit, split

DEFAULT_SAMPLE_LEN = 1024
DEFAULT_RATIOS = (0.8, 0.1, 0.1)
SPLIT_NAMES = ("train", "val", "test")


class EncodingError(Exception):
    """Base for dataset-construction failures."""


class EmptyUnitError(EncodingError):
    """A unit contributes zero bytes under the chosen category."""


class ClassTooSmallError(EncodingError):
    """A class has fewer samples than the split granularity requires."""


class BadHexLineError(EncodingError):
    """A hex interchange line is malformed; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class HeaderCategory(Enum):
    ALL_HEADERS = "all_headers"
    ONLY_ETH = "only_eth"
    WITHOUT_ETH = "without_eth"
    NO_HEADERS = "no_headers"

    @property
    def display(self) -> str:
        return {"all_headers": "All headers", "only_eth": "Only Eth",
                "without_eth": "Without Eth",
                "no_headers": "No headers"}[self.value]


def slice_category(pkt_bytes: bytes, layout: HeaderLayout,
                   cat: HeaderCategory) -> bytes:
    """Return the bytes a packet contributes under one category.

    When a required boundary is absent the packet contributes its bytes
    from the deepest available boundary, so degenerate layouts (ARP,
    unknown transports) still contribute rather than erroring.
    """
    eth_end = (layout.eth_off or 0) + (layout.eth_len or 0)
    net_boundary = layout.net_off if layout.net_off is not None else eth_end
    if layout.trans_off is not None:
        trans_boundary = layout.trans_off
    elif layout.net_off is not None:
        trans_boundary = layout.net_off + layout.net_len
    else:
        trans_boundary = eth_end
    if cat is HeaderCategory.ALL_HEADERS:
        return pkt_bytes
    if cat is HeaderCategory.ONLY_ETH:
        return pkt_bytes[:eth_end] + pkt_bytes[trans_boundary:]
    if cat is HeaderCategory.WITHOUT_ETH:
        return pkt_bytes[net_boundary:]
    return pkt_bytes[trans_boundary:]


@dataclass
class SampleMeta:
    """Provenance of one sample: where its bytes came from."""

    scenario: str
    representation: Representation
    category: HeaderCategory
    key: str


@dataclass
class ByteSample:
    """One training row: a length-L vector of byte/255 values plus label.

    n_bytes counts the unit's contributed bytes after truncation and before
    zero padding, which keeps padding distinguishable in the hex export.
    """

    values: np.ndarray
    label: int | None
    meta: SampleMeta
    n_bytes: int

    def raw_bytes(self) -> bytes:
        """Invert the 1/255 scaling over the pre-padding prefix."""
        return bytes(int(round(v * 255)) for v in self.values[:self.n_bytes])


def encode_unit(unit: TrafficUnit, cat: HeaderCategory,
                sample_len: int = DEFAULT_SAMPLE_LEN,
                scenario: str = "") -> ByteSample:
    """Encode one unit: concatenate slices, truncate, pad, scale."""
    if sample_len <= 0:
        raise ValueError(f"sample length must be positive, got {sample_len}")
    chunks = [slice_category(pkt.data, layout, cat)
              for pkt, layout in unit.packets]
    stream = b"".join(chunks)
    if not stream:
        raise EmptyUnitError(
            f"unit {unit.key} contributes no bytes under {cat.display!r}")
    kept = stream[:sample_len]
    values = np.zeros(sample_len, dtype=np.float64)
    values[:len(kept)] = np.frombuffer(kept, dtype=np.uint8)
    values /= 255.0
    meta = SampleMeta(scenario, unit.unit_kind, cat, str(unit.key))
    return ByteSample(values, None, meta, len(kept))


@dataclass
class Dataset:
    """Labeled samples, class vocabulary, and seeded index splits."""

    samples: list[ByteSample]
    classes: list[str]
    splits: dict[str, list[int]]
    seed: int
    sample_len: int = DEFAULT_SAMPLE_LEN
    representation: Representation | None = None
    category: HeaderCategory | None = None
    truncated_bytes: int = 0
    empty_units: int = 0
    ratios: tuple[float, float, float] = DEFAULT_RATIOS

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def class_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(self.classes, 0)
        for sample in self.samples:
            counts[self.classes[sample.label]] += 1
        return counts

    def arrays(self, split: str | None = None):
        """(X, y) for one split (or all samples), X shaped (n, 1, L)."""
        idx = range(len(self.samples)) if split is None else self.splits[split]
        if not len(idx):
            return (np.empty((0, 1, self.sample_len)),
                    np.empty(0, dtype=np.int64))
        X = np.stack([self.samples[i].values for i in idx])[:, None, :]
        y = np.array([self.samples[i].label for i in idx], dtype=np.int64)
        return X, y


def stratified_split(labels: Sequence[int], n_classes: int,
                     ratios: Sequence[float], seed: int) -> dict[str, list[int]]:
    """Per-class largest-remainder allocation over a seeded shuffle.

    Every nonzero-ratio split receives at least one sample per class,
    borrowing from the fullest split when rounding starves one.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    if len(ratios) != 3:
        raise ValueError("expected (train, val, test) ratios")
    rng = np.random.default_rng(seed)
    nonzero = [i for i, r in enumerate(ratios) if r > 0]
    splits: dict[str, list[int]] = {name: [] for name in SPLIT_NAMES}
    for c in range(n_classes):
        idx = [i for i, lab in enumerate(labels) if lab == c]
        if len(idx) < len(nonzero):
            raise ClassTooSmallError(
                f"class {c} has {len(idx)} samples, fewer than the "
                f"{len(nonzero)} nonzero splits")
        perm = rng.permutation(len(idx))
        idx = [idx[p] for p in perm]
        counts = _largest_remainder(len(idx), ratios, nonzero)
        start = 0
        for name, count in zip(SPLIT_NAMES, counts):
            splits[name].extend(idx[start:start + count])
            start += count
    for name in SPLIT_NAMES:
        splits[name].sort()
    return splits


def _largest_remainder(n: int, ratios: Sequence[float], nonzero: list[int]):
    quotas = [n * r for r in ratios]
    counts = [int(q) for q in quotas]
    remainders = sorted(range(len(ratios)),
                        key=lambda i: (quotas[i] - counts[i], -i), reverse=True)
    for i in remainders[:n - sum(counts)]:
        counts[i] += 1
    # Rounding may starve a small nonzero split; borrow from the fullest.
    for i in nonzero:
        while counts[i] == 0:
            donor = max(nonzero, key=lambda j: counts[j])
            counts[donor] -= 1
            counts[i] += 1
    return counts


def build_dataset(scenarios: list[tuple[str, str]],
                  representation: Representation,
                  cat: HeaderCategory,
                  sample_len: int = DEFAULT_SAMPLE_LEN,
                  ratios: Sequence[float] = DEFAULT_RATIOS,
                  seed: int = 0) -> Dataset:
    """Run capture files through split + encode into one labeled dataset.

    scenarios maps pcap path -> class label; the class vocabulary is
    ordered by first appearance.  Deterministic for a given seed.
    """
    classes: list[str] = []
    samples: list[ByteSample] = []
    truncated = 0
    empty = 0
    for path, label in scenarios:
        if label not in classes:
            classes.append(label)
        label_idx = classes.index(label)
        result = split(read_pcap(path), representation)
        for unit in result.units:
            try:
                sample = encode_unit(unit, cat, sample_len, scenario=label)
            except EmptyUnitError:
                empty += 1
                continue
            sample.label = label_idx
            stream_len = sum(len(slice_category(p.data, lay, cat))
                             for p, lay in unit.packets)
            truncated += max(0, stream_len - sample_len)
            samples.append(sample)
    if len(classes) < 2:
        raise ValueError(
            f"classification needs at least 2 classes, got {classes}")
    labels = [s.label for s in samples]
    splits = stratified_split(labels, len(classes), ratios, seed)
    return Dataset(samples, classes, splits, seed, sample_len,
                   representation, cat, truncated, empty, tuple(ratios))


def export_hex(ds: Dataset, path: str, extra_header: dict | None = None) -> None:
    """Write `label,hexdigits` lines, one per sample.

    '#key=value' header lines carry length, classes, seed and splits so
    import_hex inverts the export exactly; padding bytes are not written,
    which keeps them distinguishable from real zeros.
    """
    with open(path, "w") as fp:
        for key, value in (extra_header or {}).items():
            fp.write(f"#{key}={value}\n")
        fp.write(f"#length={ds.sample_len}\n")
        fp.write(f"#classes={','.join(ds.classes)}\n")
        fp.write(f"#seed={ds.seed}\n")
        if ds.representation is not None:
            fp.write(f"#representation={ds.representation.value}\n")
        if ds.category is not None:
            fp.write(f"#category={ds.category.value}\n")
        for name in SPLIT_NAMES:
            fp.write(f"#split_{name}={' '.join(map(str, ds.splits[name]))}\n")
        for sample in ds.samples:
            fp.write(f"{sample.label},{sample.raw_bytes().hex()}\n")


def import_hex(path: str) -> Dataset:
    """Rebuild a Dataset from a hex interchange file."""
    header: dict[str, str] = {}
    rows: list[tuple[int, int, bytes]] = []
    with open(path) as fp:
        for lineno, line in enumerate(fp, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                header[key] = value
                continue
            label_str, sep, hexdigits = line.partition(",")
            if not sep:
                raise BadHexLineError(lineno, "missing ',' separator")
            try:
                label = int(label_str)
            except ValueError:
                raise BadHexLineError(lineno, f"bad label {label_str!r}") from None
            if len(hexdigits) % 2:
                raise BadHexLineError(lineno, "odd number of hex digits")
            try:
                raw = bytes.fromhex(hexdigits)
            except ValueError:
                raise BadHexLineError(lineno, "invalid hex digits") from None
            rows.append((lineno, label, raw))
    sample_len = int(header.get("length") or
                     max((len(r) for _, _, r in rows), default=1))
    classes = header.get("classes", "").split(",") if header.get("classes") \
        else sorted({str(lab) for _, lab, _ in rows})
    representation = (Representation(header["representation"])
                      if "representation" in header else None)
    category = (HeaderCategory(header["category"])
                if "category" in header else None)
    out: list[ByteSample] = []
    for i, (lineno, label, raw) in enumerate(rows):
        if len(raw) > sample_len:
            raise BadHexLineError(lineno,
                                  f"{len(raw)} bytes exceed length {sample_len}")
        values = np.zeros(sample_len, dtype=np.float64)
        values[:len(raw)] = np.frombuffer(raw, dtype=np.uint8)
        values /= 255.0
        meta = SampleMeta("imported", representation, category, str(i))
        out.append(ByteSample(values, label, meta, len(raw)))
    splits = {}
    for name in SPLIT_NAMES:
        text = header.get(f"split_{name}", "")
        splits[name] = [int(tok) for tok in text.split()] if text else []
    if not any(splits.values()):
        splits = {"train": list(range(len(out))), "val": [], "test": []}
    return Dataset(out, classes, splits, int(header.get("seed", 0)),
                   sample_len, representation, category)


def write_dataset_manifest(ds: Dataset, path: str,
                           extra: Iterable[str] = ()) -> None:
    """Key-value sidecar recording how the dataset was produced."""
    counts = ds.class_counts()
    with open(path, "w") as fp:
        for line in extra:
            fp.write(f"{line}\n")
        fp.write(f"length={ds.sample_len}\n")
        if ds.representation is not None:
            fp.write(f"representation={ds.representation.value}\n")
        if ds.category is not None:
            fp.write(f"category={ds.category.value}\n")
        fp.write(f"seed={ds.seed}\n")
        fp.write(f"ratios={','.join(repr(r) for r in ds.ratios)}\n")
        fp.write(f"classes={','.join(ds.classes)}\n")
        for name, count in counts.items():
            fp.write(f"count_{name}={count}\n")
        for name in SPLIT_NAMES:
            fp.write(f"n_{name}={len(ds.splits[name])}\n")
        fp.write(f"truncated_bytes={ds.truncated_bytes}\n")
        fp.write(f"empty_units={ds.empty_units}\n")
