"""From-scratch 1D network layers with exact analytic gradients.

Every layer caches what its backward pass needs during forward and
releases it after backward; calling backward without a matching forward
raises StaleCacheError.  Arrays are float64 throughout, batch-first:
convolution/pool work on (batch, channels, length), dense on
(batch, features).  The loss divides by the batch size, so parameter
gradients everywhere are batch means.
"""

from __future__ import annotations

import numpy as np


class ShapeMismatchError(ValueError):
    """Input shape is inconsistent with the layer's weights."""


class StaleCacheError(RuntimeError):
    """backward called without a matching cached forward pass."""


class InvalidLabelError(ValueError):
    """A label index falls outside the class vocabulary."""


def conv_output_length(length: int, kernel: int, stride: int,
                       padding: str) -> int:
    if padding == "same":
        return -(-length // stride)  # ceil
    return (length - kernel) // stride + 1


def _same_padding(length: int, kernel: int, stride: int) -> tuple[int, int]:
    out = -(-length // stride)
    total = max((out - 1) * stride + kernel - length, 0)
    left = total // 2
    return left, total - left


def sliding_windows(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    """(B, C, L) -> zero-copy view (B, C, out, kernel) of kernel windows."""
    b, c, length = x.shape
    out = (length - kernel) // stride + 1
    s0, s1, s2 = x.strides
    return np.lib.stride_tricks.as_strided(
        x, (b, c, out, kernel), (s0, s1, s2 * stride, s2), writeable=False)


def cross_correlate1d(x: np.ndarray, weights: np.ndarray,
                      bias: np.ndarray | None, stride: int,
                      padding: str) -> np.ndarray:
    """Plain strided cross-correlation, no activation.

    x: (B, C, L); weights: (F, C, K); returns (B, F, out_length).
    """
    if x.ndim != 3 or weights.ndim != 3 or x.shape[1] != weights.shape[1]:
        raise ShapeMismatchError(
            f"input {x.shape} does not match weights {weights.shape}")
    kernel = weights.shape[2]
    if padding == "same":
        left, right = _same_padding(x.shape[2], kernel, stride)
        x = np.pad(x, ((0, 0), (0, 0), (left, right)))
    elif x.shape[2] < kernel:
        raise ShapeMismatchError(
            f"length {x.shape[2]} shorter than kernel {kernel} without padding")
    win = sliding_windows(x, kernel, stride)
    z = np.tensordot(win, weights, axes=([1, 3], [1, 2]))  # (B, out, F)
    z = np.ascontiguousarray(z.transpose(0, 2, 1))
    if bias is not None:
        z += bias[None, :, None]
    return z


class Conv1D:
    """Strided 1D cross-correlation plus bias, ReLU activation."""

    def __init__(self, in_channels: int, filters: int, kernel: int,
                 stride: int, padding: str, rng: np.random.Generator):
        scale = np.sqrt(2.0 / (in_channels * kernel))
        self.weights = rng.normal(0.0, scale, (filters, in_channels, kernel))
        self.bias = np.zeros(filters)
        self.stride = stride
        self.padding = padding
        self.grad_weights = None
        self.grad_bias = None
        self._cache = None

    @property
    def param_count(self) -> int:
        return self.weights.size + self.bias.size

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        kernel = self.weights.shape[2]
        if x.ndim != 3 or x.shape[1] != self.weights.shape[1]:
            raise ShapeMismatchError(
                f"input {x.shape} does not match weights {self.weights.shape}")
        padded = self.padding == "same"
        if padded:
            left, right = _same_padding(x.shape[2], kernel, self.stride)
            xp = np.pad(x, ((0, 0), (0, 0), (left, right)))
        else:
            left = 0
            xp = x
        if xp.shape[2] < kernel:
            raise ShapeMismatchError(
                f"length {xp.shape[2]} shorter than kernel {kernel}")
        win = sliding_windows(xp, kernel, self.stride)
        z = np.tensordot(win, self.weights, axes=([1, 3], [1, 2]))
        z = np.ascontiguousarray(z.transpose(0, 2, 1)) + self.bias[None, :, None]
        active = z > 0
        self._cache = (win, active, xp.shape, left, x.shape[2], padded)
        return np.where(active, z, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StaleCacheError("Conv1D.backward without cached forward")
        win, active, padded_shape, left, in_len, padded = self._cache
        self._cache = None
        dz = np.where(active, dout, 0.0)
        self.grad_bias = dz.sum(axis=(0, 2))
        self.grad_weights = np.tensordot(dz, win, axes=([0, 2], [0, 2]))
        kernel = self.weights.shape[2]
        out = dz.shape[2]
        dxp = np.zeros(padded_shape)
        # Scatter-add one kernel tap at a time; each tap touches a strided
        # slice of the padded input exactly once.
        for k in range(kernel):
            dxp[:, :, k:k + self.stride * out:self.stride] += np.einsum(
                "bfo,fc->bco", dz, self.weights[:, :, k])
        if padded:
            return dxp[:, :, left:left + in_len]
        return dxp

    def params(self):
        return [("weights", self.weights), ("bias", self.bias)]

    def grads(self):
        return [("weights", self.grad_weights), ("bias", self.grad_bias)]


class MaxPool1D:
    """Non-overlapping pooling; a final partial window is pooled as-is."""

    def __init__(self, pool: int):
        self.pool = pool
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        b, c, length = x.shape
        out = -(-length // self.pool)
        xp = np.full((b, c, out * self.pool), -np.inf)
        xp[:, :, :length] = x
        windows = xp.reshape(b, c, out, self.pool)
        argmax = windows.argmax(axis=3)  # ties resolve to the first index
        self._cache = (argmax, length)
        return np.take_along_axis(windows, argmax[..., None], axis=3)[..., 0]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StaleCacheError("MaxPool1D.backward without cached forward")
        argmax, length = self._cache
        self._cache = None
        b, c, out = dout.shape
        dxp = np.zeros((b, c, out, self.pool))
        np.put_along_axis(dxp, argmax[..., None], dout[..., None], axis=3)
        return dxp.reshape(b, c, out * self.pool)[:, :, :length]

    def params(self):
        return []

    def grads(self):
        return []


class Dropout:
    """Inverted dropout: survivors scaled at train time, eval is identity."""

    def __init__(self, rate: float, rng: np.random.Generator):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng
        self._mask = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if not train or self.rate == 0.0:
            self._mask = 1.0
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) >= self.rate) / keep
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise StaleCacheError("Dropout.backward without cached forward")
        mask, self._mask = self._mask, None
        return dout * mask

    def params(self):
        return []

    def grads(self):
        return []


class Dense:
    """Affine map on flattened features; head activation lives in the loss."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        self.weights = rng.normal(0.0, np.sqrt(2.0 / n_in), (n_in, n_out))
        self.bias = np.zeros(n_out)
        self.grad_weights = None
        self.grad_bias = None
        self._cache = None

    @property
    def param_count(self) -> int:
        return self.weights.size + self.bias.size

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.weights.shape[0]:
            raise ShapeMismatchError(
                f"input {x.shape} does not match weights {self.weights.shape}")
        self._cache = x
        return x @ self.weights + self.bias

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StaleCacheError("Dense.backward without cached forward")
        x, self._cache = self._cache, None
        self.grad_weights = x.T @ dout
        self.grad_bias = dout.sum(axis=0)
        return dout @ self.weights.T

    def params(self):
        return [("weights", self.weights), ("bias", self.bias)]

    def grads(self):
        return [("weights", self.grad_weights), ("bias", self.grad_bias)]


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(scores: np.ndarray) -> np.ndarray:
    out = np.empty_like(scores)
    pos = scores >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-scores[pos]))
    e = np.exp(scores[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def loss_and_grad(scores: np.ndarray, labels,
                  head: str = "softmax") -> tuple[float, np.ndarray]:
    """Mean loss over the batch and its analytic gradient w.r.t. scores.

    softmax head: cross-entropy of the softmax distribution.  sigmoid head:
    per-class binary cross-entropy against the one-hot target, summed over
    classes.  Accepts a single score vector with an int label, or a
    (batch, classes) matrix with a label array.
    """
    single = np.ndim(scores) == 1
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    batch, n_classes = scores.shape
    if labels.shape != (batch,):
        raise ShapeMismatchError(
            f"{labels.shape[0]} labels for {batch} score rows")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise InvalidLabelError(
            f"labels must lie in [0, {n_classes}), got "
            f"{labels[(labels < 0) | (labels >= n_classes)][0]}")
    onehot = np.zeros_like(scores)
    onehot[np.arange(batch), labels] = 1.0
    if head == "softmax":
        shifted = scores - scores.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        loss = -log_probs[np.arange(batch), labels].mean()
        grad = (np.exp(log_probs) - onehot) / batch
    elif head == "sigmoid":
        # Stable elementwise BCE: softplus(z) - z*y, summed over classes.
        loss = (np.logaddexp(0.0, scores) - scores * onehot).sum(axis=1).mean()
        grad = (sigmoid(scores) - onehot) / batch
    else:
        raise ValueError(f"unknown head {head!r}")
    return float(loss), grad[0] if single else grad
