"""The small raw-byte classifier: two strided conv layers, one max-pool
between them, dropout, and a dense head.

Defaults are the working point the whole toolkit is built around: kernel
64, stride 3, 5-to-1 pooling, dropout 0.5, and filter counts (24, 32)
that put the trainable parameter total near 60k at input length 1024.
The model file is a versioned binary (magic, version, config, parameter
arrays in declared order, trailing checksum).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .layers import (Conv1D, Dense, Dropout, MaxPool1D, ShapeMismatchError,
                     StaleCacheError, conv_output_length, sigmoid, softmax)

MODEL_MAGIC = b"RWNET"
MODEL_VERSION = 1

HEADS = ("softmax", "sigmoid")
PADDINGS = ("same", "valid")


class CorruptModelFileError(Exception):
    """Model file failed structural or checksum validation."""


@dataclass
class NetworkConfig:
    input_len: int = 1024
    conv1_filters: int = 24
    conv2_filters: int = 32
    kernel: int = 64
    stride: int = 3
    pool: int = 5
    dropout_rate: float = 0.5
    n_classes: int = 2
    head: str = "softmax"
    padding: str = "same"

    def __post_init__(self):
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.padding not in PADDINGS:
            raise ValueError(
                f"padding must be one of {PADDINGS}, got {self.padding!r}")
        if self.n_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.n_classes}")
        if min(self.layer_lengths()) < 1:
            raise ValueError(
                f"config collapses: layer lengths {self.layer_lengths()} "
                f"for input_len {self.input_len}")

    def layer_lengths(self) -> tuple[int, int, int]:
        """(conv1 out, pooled, conv2 out) lengths, before any ReLU/dropout."""
        if self.padding == "valid" and self.input_len < self.kernel:
            return (0, 0, 0)
        l1 = conv_output_length(self.input_len, self.kernel, self.stride,
                                self.padding)
        p1 = -(-l1 // self.pool)
        if self.padding == "valid" and p1 < self.kernel:
            return (l1, p1, 0)
        l2 = conv_output_length(p1, self.kernel, self.stride, self.padding)
        return (l1, p1, l2)

    def parameter_count(self) -> int:
        _, _, l2 = self.layer_lengths()
        conv1 = self.conv1_filters * (self.kernel + 1)
        conv2 = self.conv2_filters * (self.conv1_filters * self.kernel + 1)
        dense = (self.conv2_filters * l2 + 1) * self.n_classes
        return conv1 + conv2 + dense


class Network:
    """Built layers plus the seeded dropout stream.

    Exclusively owned while training; safe to share across threads for
    inference once trained (eval-mode forward mutates nothing but caches,
    so concurrent inference should go through predict/predict_batch which
    never run backward).
    """

    def __init__(self, config: NetworkConfig, seed=0):
        self.config = config
        ss = seed if isinstance(seed, np.random.SeedSequence) \
            else np.random.SeedSequence(seed)
        init_ss, dropout_ss = ss.spawn(2)
        init_rng = np.random.Generator(np.random.PCG64(init_ss))
        self.dropout_rng = np.random.Generator(np.random.PCG64(dropout_ss))
        c = config
        _, _, l2 = c.layer_lengths()
        self.conv1 = Conv1D(1, c.conv1_filters, c.kernel, c.stride,
                            c.padding, init_rng)
        self.pool = MaxPool1D(c.pool)
        self.conv2 = Conv1D(c.conv1_filters, c.conv2_filters, c.kernel,
                            c.stride, c.padding, init_rng)
        self.dropout = Dropout(c.dropout_rate, self.dropout_rng)
        self.dense = Dense(c.conv2_filters * l2, c.n_classes, init_rng)
        self.param_count = sum(p.size for _, p in self.parameters())
        self._flat_shape = None

    @property
    def layers(self):
        return (self.conv1, self.pool, self.conv2, self.dropout, self.dense)

    def parameters(self):
        """(name, array) pairs in declared order: conv1, conv2, dense."""
        out = []
        for tag, layer in (("conv1", self.conv1), ("conv2", self.conv2),
                           ("dense", self.dense)):
            out.extend((f"{tag}.{name}", arr) for name, arr in layer.params())
        return out

    def gradients(self):
        out = []
        for tag, layer in (("conv1", self.conv1), ("conv2", self.conv2),
                           ("dense", self.dense)):
            out.extend((f"{tag}.{name}", arr) for name, arr in layer.grads())
        return out

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        """(batch, 1, input_len) -> raw class scores (batch, n_classes)."""
        if x.ndim != 3 or x.shape[2] != self.config.input_len:
            raise ShapeMismatchError(
                f"expected (batch, 1, {self.config.input_len}), got {x.shape}")
        h = self.conv1.forward(x, train)
        h = self.pool.forward(h, train)
        h = self.conv2.forward(h, train)
        h = self.dropout.forward(h, train)
        self._flat_shape = h.shape
        return self.dense.forward(h.reshape(h.shape[0], -1), train)

    def backward(self, dscores: np.ndarray) -> None:
        """Propagate score gradients; leaves parameter grads on each layer."""
        if self._flat_shape is None:
            raise StaleCacheError("Network.backward without cached forward")
        d = self.dense.backward(dscores).reshape(self._flat_shape)
        self._flat_shape = None
        d = self.dropout.backward(d)
        d = self.conv2.backward(d)
        d = self.pool.backward(d)
        self.conv1.backward(d)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities in eval mode (dropout off); x is (B, 1, L)."""
        scores = self.forward(x, train=False)
        self._clear_caches()
        if self.config.head == "sigmoid":
            return sigmoid(scores)
        return softmax(scores)

    def _clear_caches(self):
        for layer in (self.conv1, self.pool, self.conv2):
            layer._cache = None
        self.dropout._mask = None
        self.dense._cache = None
        self._flat_shape = None


def predict(net: Network, sample) -> np.ndarray:
    """Probability vector for one sample (ByteSample or length-L vector)."""
    values = np.asarray(getattr(sample, "values", sample), dtype=np.float64)
    if values.shape != (net.config.input_len,):
        raise ShapeMismatchError(
            f"sample length {values.shape} != input_len {net.config.input_len}")
    return net.predict_proba(values[None, None, :])[0]


def predict_batch(net: Network, x: np.ndarray,
                  batch_size: int = 32) -> np.ndarray:
    """Probabilities for (n, 1, L) or (n, L) inputs, evaluated in batches."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, None, :]
    if x.shape[0] == 0:
        return np.empty((0, net.config.n_classes))
    chunks = [net.predict_proba(x[i:i + batch_size])
              for i in range(0, x.shape[0], batch_size)]
    return np.concatenate(chunks, axis=0)


def save_model(net: Network, path: str, extra: dict | None = None) -> None:
    """Versioned binary: magic, version, config json, params, sha256.

    extra lands in the json header (provenance such as the config hash
    and seed) and is returned by read_model_header.
    """
    header = {
        "config": asdict(net.config),
        "param_count": net.param_count,
        "dropout_rng_state": net.dropout_rng.bit_generator.state,
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    body = bytearray()
    body += MODEL_MAGIC
    body += struct.pack("<H", MODEL_VERSION)
    body += struct.pack("<I", len(blob))
    body += blob
    for _, arr in net.parameters():
        body += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    digest = hashlib.sha256(bytes(body)).digest()
    with open(path, "wb") as fp:
        fp.write(body)
        fp.write(digest)


def _read_validated(path: str) -> tuple[bytes, int, dict]:
    """(body, param offset, header) after magic/version/checksum checks."""
    with open(path, "rb") as fp:
        raw = fp.read()
    if len(raw) < len(MODEL_MAGIC) + 6 + 32:
        raise CorruptModelFileError(f"{path}: file too short to be a model")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptModelFileError(f"{path}: checksum mismatch")
    if body[:len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise CorruptModelFileError(f"{path}: bad magic, not a model file")
    pos = len(MODEL_MAGIC)
    (version,) = struct.unpack_from("<H", body, pos)
    pos += 2
    if version != MODEL_VERSION:
        raise CorruptModelFileError(
            f"{path}: format version {version}, this build reads "
            f"{MODEL_VERSION}")
    (blob_len,) = struct.unpack_from("<I", body, pos)
    pos += 4
    header = json.loads(body[pos:pos + blob_len])
    return body, pos + blob_len, header


def read_model_header(path: str) -> dict:
    """Header dict (config, param_count, extra) without loading weights."""
    _, _, header = _read_validated(path)
    return header


def load_model(path: str) -> Network:
    """Inverse of save_model; checksum and version are enforced."""
    body, pos, header = _read_validated(path)
    net = Network(NetworkConfig(**header["config"]))
    for _, arr in net.parameters():
        end = pos + arr.size * 8
        if end > len(body):
            raise CorruptModelFileError(f"{path}: parameter block truncated")
        arr[...] = np.frombuffer(body[pos:end], dtype="<f8").reshape(arr.shape)
        pos = end
    if pos != len(body):
        raise CorruptModelFileError(f"{path}: {len(body) - pos} trailing bytes")
    state = header.get("dropout_rng_state")
    if state is not None:
        net.dropout_rng.bit_generator.state = state
    return net
