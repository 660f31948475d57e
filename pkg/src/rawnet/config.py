"""Layered key-value configuration for the pipeline commands.

A config is plain `key = value` lines ('#' comments, repeated keys append,
e.g. one `scenario` line per capture).  Command-line overrides layer on
top of the file, which layers on top of defaults.  The semantic keys hash
to a short config fingerprint that every produced artifact embeds next to
the seed, so `verify` can later prove an artifact matches its config.
Output-location keys stay out of the hash: moving results around does not
change what was computed.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

from .bench import DEFAULT_LOCK_PATH
from .encoder import DEFAULT_RATIOS, DEFAULT_SAMPLE_LEN, HeaderCategory
from .splitter import Representation
from .synth import ClassSpec, SynthSpec


class ConfigError(ValueError):
    """A config file or override cannot be parsed or validated."""


def parse_kv_file(path: str) -> dict[str, list[str]]:
    """`key = value` lines -> {key: [values in order]}."""
    values: dict[str, list[str]] = {}
    with open(path) as fp:
        for lineno, line in enumerate(fp, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            values.setdefault(key.strip(), []).append(value.strip())
    return values


@dataclass
class PipelineConfig:
    """Everything one experiment needs, from captures to reports."""

    scenarios: list[tuple[str, str]] = field(default_factory=list)
    representation: Representation = Representation.PACKET
    category: HeaderCategory = HeaderCategory.ALL_HEADERS
    sample_len: int = DEFAULT_SAMPLE_LEN
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    seed: int = 0
    # network
    conv1_filters: int = 24
    conv2_filters: int = 32
    kernel: int = 64
    stride: int = 3
    pool: int = 5
    dropout_rate: float = 0.5
    head: str = "softmax"
    padding: str = "same"
    # training
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    # synthesis (used by the synth command)
    synth_classes: list[ClassSpec] = field(default_factory=list)
    packets_per_class: int = 100
    payload_min: int = 32
    payload_max: int = 256
    tuple_pool: int = 8
    proto: str = "udp"
    # plumbing (excluded from the config hash)
    out_dir: str = "runs"
    bench_lock: str = DEFAULT_LOCK_PATH
    jobs: int = 0  # 0 = one worker per grid row, capped by cpu count
    reference: str = "none"  # none | binary | multilabel
    bench_repetitions: int = 5

    def network_config(self, n_classes: int):
        from .nn.model import NetworkConfig

        return NetworkConfig(
            input_len=self.sample_len, conv1_filters=self.conv1_filters,
            conv2_filters=self.conv2_filters, kernel=self.kernel,
            stride=self.stride, pool=self.pool,
            dropout_rate=self.dropout_rate, n_classes=n_classes,
            head=self.head, padding=self.padding)

    def train_config(self):
        from .nn.training import TrainConfig

        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate,
                           optimizer=self.optimizer, seed=self.seed)

    def synth_spec(self) -> SynthSpec:
        if not self.synth_classes:
            raise ConfigError("no `class = name,offset,hexsignature` lines")
        return SynthSpec(classes=self.synth_classes,
                         packets_per_class=self.packets_per_class,
                         payload_min=self.payload_min,
                         payload_max=self.payload_max,
                         tuple_pool=self.tuple_pool, proto=self.proto,
                         seed=self.seed)

    # Keys that change what is computed, in hash order.
    def _semantic_items(self) -> list[tuple[str, str]]:
        items = [("scenario", f"{path},{label}")
                 for path, label in self.scenarios]
        items += [("class", f"{c.name},{c.signature_offset},"
                            f"{c.signature.hex()}")
                  for c in self.synth_classes]
        for key in ("representation", "category"):
            items.append((key, getattr(self, key).value))
        for key in ("sample_len", "seed", "conv1_filters", "conv2_filters",
                    "kernel", "stride", "pool", "dropout_rate", "head",
                    "padding", "epochs", "batch_size", "learning_rate",
                    "optimizer", "packets_per_class", "payload_min",
                    "payload_max", "tuple_pool", "proto"):
            items.append((key, str(getattr(self, key))))
        items.append(("ratios", ",".join(repr(r) for r in self.ratios)))
        return items

    def config_hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in self._semantic_items())
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def header_lines(self) -> list[str]:
        return [f"config_hash={self.config_hash()}", f"seed={self.seed}"]

    def validate_scenarios(self) -> None:
        if not self.scenarios:
            raise ConfigError("no `scenario = path,label` lines configured")
        for path, _ in self.scenarios:
            if not os.path.exists(path):
                raise FileNotFoundError(f"scenario capture not found: {path}")


def _parse_scenario(value: str) -> tuple[str, str]:
    path, sep, label = value.rpartition(",")
    if not sep or not path.strip() or not label.strip():
        raise ConfigError(f"scenario needs `path,label`, got {value!r}")
    return path.strip(), label.strip()


def _parse_class(value: str) -> ClassSpec:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"class needs `name,offset,hexsignature`, got {value!r}")
    name, offset, hexsig = parts
    try:
        return ClassSpec(name, bytes.fromhex(hexsig), int(offset))
    except ValueError as exc:
        raise ConfigError(f"bad class line {value!r}: {exc}") from None


_INT_KEYS = ("sample_len", "seed", "conv1_filters", "conv2_filters", "kernel",
             "stride", "pool", "epochs", "batch_size", "packets_per_class",
             "payload_min", "payload_max", "tuple_pool", "jobs",
             "bench_repetitions")
_FLOAT_KEYS = ("dropout_rate", "learning_rate")
_STR_KEYS = ("head", "padding", "optimizer", "proto", "out_dir", "bench_lock",
             "reference")


def load_config(path: str | None = None,
                overrides: list[str] | None = None) -> PipelineConfig:
    """Defaults <- config file <- `key=value` override strings."""
    layers: dict[str, list[str]] = {}
    if path is not None:
        layers = parse_kv_file(path)
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override needs key=value, got {item!r}")
        key, value = key.strip(), value.strip()
        if key in ("scenario", "class"):
            layers.setdefault(key, []).append(value)
        else:
            layers[key] = [value]

    cfg = PipelineConfig()
    try:
        for key, values in layers.items():
            value = values[-1]
            if key == "scenario":
                cfg.scenarios = [_parse_scenario(v) for v in values]
            elif key == "class":
                cfg.synth_classes = [_parse_class(v) for v in values]
            elif key == "representation":
                cfg.representation = Representation(value)
            elif key == "category":
                cfg.category = HeaderCategory(value)
            elif key == "ratios":
                parts = tuple(float(p) for p in value.split(","))
                if len(parts) != 3:
                    raise ConfigError(f"ratios needs 3 values, got {value!r}")
                cfg.ratios = parts
            elif key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _FLOAT_KEYS:
                setattr(cfg, key, float(value))
            elif key in _STR_KEYS:
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key!r}: {exc}") from None
    return cfg
