"""Seeded training loop with best-model checkpointing.

The regimen: shuffled mini-batches (default 32) for up to 50 epochs,
validation after every epoch, and a snapshot of the best
validation-accuracy model which is what train() returns.  Training may
stop early once validation accuracy reaches 1.0, since the checkpoint
cannot improve further.  Everything that draws randomness (init, dropout,
shuffling) derives from the one seed, so a fixed seed gives bit-identical
history across runs on one machine.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..encoder import Dataset
from .layers import loss_and_grad
from .model import Network, NetworkConfig

OPTIMIZERS = ("adam", "sgd")


class DivergedLossError(RuntimeError):
    """Training hit a non-finite loss; carries the history so far."""

    def __init__(self, message: str, history: "TrainHistory"):
        super().__init__(message)
        self.history = history


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    momentum: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(
                f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)

    best_epoch: int = -1

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    def lines(self) -> list[str]:
        """Delimited epoch rows for the history file."""
        out = ["epoch,train_loss,train_acc,val_loss,val_acc,is_best"]
        for e in range(self.epochs_run):
            out.append(f"{e},{self.train_loss[e]!r},{self.train_acc[e]!r},"
                       f"{self.val_loss[e]!r},{self.val_acc[e]!r},"
                       f"{int(e == self.best_epoch)}")
        return out


class Adam:
    """Adaptive-moment gradient descent (biased moments corrected)."""

    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params, grads) -> None:
        self.t += 1
        for (name, p), (_, g) in zip(params, grads):
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SGD:
    """Plain gradient descent with optional momentum."""

    def __init__(self, learning_rate=1e-3, momentum=0.0):
        self.lr = learning_rate
        self.momentum = momentum
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params, grads) -> None:
        for (name, p), (_, g) in zip(params, grads):
            if self.momentum:
                v = self.velocity.setdefault(name, np.zeros_like(p))
                v *= self.momentum
                v -= self.lr * g
                p += v
            else:
                p -= self.lr * g


def make_optimizer(tc: TrainConfig):
    if tc.optimizer == "adam":
        return Adam(tc.learning_rate)
    return SGD(tc.learning_rate, tc.momentum)


def evaluate(net: Network, x: np.ndarray, y: np.ndarray,
             batch_size: int = 32) -> tuple[float, float]:
    """(mean loss, accuracy) in eval mode."""
    losses = []
    correct = 0
    for i in range(0, x.shape[0], batch_size):
        xb, yb = x[i:i + batch_size], y[i:i + batch_size]
        scores = net.forward(xb, train=False)
        loss, _ = loss_and_grad(scores, yb, net.config.head)
        losses.append(loss * xb.shape[0])
        correct += int((scores.argmax(axis=1) == yb).sum())
    net._clear_caches()
    return sum(losses) / x.shape[0], correct / x.shape[0]


def train(ds: Dataset, nc: NetworkConfig,
          tc: TrainConfig) -> tuple[Network, TrainHistory]:
    """Train on ds's train split, checkpoint on validation accuracy.

    Returns the checkpointed-best network (not the final-epoch one) and
    the full per-epoch history.
    """
    if not ds.splits["train"] or not ds.splits["val"]:
        raise ValueError("dataset needs non-empty train and val splits")
    if ds.n_classes != nc.n_classes:
        raise ValueError(f"dataset has {ds.n_classes} classes, "
                         f"config expects {nc.n_classes}")
    x_train, y_train = ds.arrays("train")
    x_val, y_val = ds.arrays("val")

    ss = np.random.SeedSequence(tc.seed)
    net_ss, shuffle_ss = ss.spawn(2)
    net = Network(nc, seed=net_ss)
    shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_ss))
    optimizer = make_optimizer(tc)

    history = TrainHistory()
    best: Network | None = None
    best_acc = -1.0
    n = x_train.shape[0]
    for epoch in range(tc.epochs):
        perm = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        epoch_correct = 0
        for start in range(0, n, tc.batch_size):
            idx = perm[start:start + tc.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            scores = net.forward(xb, train=True)
            loss, dscores = loss_and_grad(scores, yb, nc.head)
            if not np.isfinite(loss):
                raise DivergedLossError(
                    f"non-finite loss at epoch {epoch}", history)
            net.backward(dscores)
            optimizer.step(net.parameters(), net.gradients())
            epoch_loss += loss * xb.shape[0]
            epoch_correct += int((scores.argmax(axis=1) == yb).sum())
        val_loss, val_acc = evaluate(net, x_val, y_val, tc.batch_size)
        history.train_loss.append(epoch_loss / n)
        history.train_acc.append(epoch_correct / n)
        history.val_loss.append(val_loss)
        history.val_acc.append(val_acc)
        if val_acc > best_acc:
            best_acc = val_acc
            history.best_epoch = epoch
            best = copy.deepcopy(net)
        if val_acc >= 1.0:
            break  # the checkpoint metric cannot improve further
    assert best is not None
    return best, history


def write_history(history: TrainHistory, path: str,
                  header_lines=()) -> None:
    with open(path, "w") as fp:
        for line in header_lines:
            fp.write(f"# {line}\n")
        for line in history.lines():
            fp.write(line + "\n")


def read_history(path: str) -> TrainHistory:
    history = TrainHistory()
    with open(path) as fp:
        for line in fp:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("epoch,"):
                continue
            epoch, tl, ta, vl, va, best = line.split(",")
            history.train_loss.append(float(tl))
            history.train_acc.append(float(ta))
            history.val_loss.append(float(vl))
            history.val_acc.append(float(va))
            if best == "1":
                history.best_epoch = int(epoch)
    return history
