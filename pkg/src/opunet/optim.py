"""Adam optimizer and the training/evaluation loop.

Training shuffles with a generator seeded once up front, steps Adam on
the mean binary cross-entropy of each batch (last partial batch kept),
scores the validation split after every epoch, and keeps the parameters
of the best validation-F1 epoch. It stops at max_epochs or after
`patience` consecutive epochs without improvement. Single-threaded over
the model, so a fixed seed reproduces the loss trajectory bit for bit.

Epoch log line (tab-separated): epoch index, mean train loss (6
decimals), then validation precision, recall, IoU, F1 (4 decimals each).
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import metrics
from .data import normalize_bands
from .errors import NumericsError
from .tensor import Tensor, bce_loss, no_grad


class Adam:
    """Bias-corrected Adam over a list of (name, Tensor) parameters."""

    def __init__(self, named_params, lr=1e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        if named_params and not isinstance(named_params[0], tuple):
            named_params = [(f"param{i}", p) for i, p in enumerate(named_params)]
        self.named_params = list(named_params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = [np.zeros_like(p.data) for _, p in self.named_params]
        self.v = [np.zeros_like(p.data) for _, p in self.named_params]

    def zero_grad(self):
        for _, p in self.named_params:
            p.zero_grad()

    def step(self):
        """One in-place update from the gradients currently on the parameters."""
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for i, (name, p) in enumerate(self.named_params):
            g = p.grad
            if g is None:
                raise ValueError(f"parameter '{name}' has no gradient")
            if g.shape != p.data.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter '{name}' {p.data.shape}")
            if not np.all(np.isfinite(g)):
                raise NumericsError(f"non-finite gradient for parameter '{name}'")
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            mhat = self.m[i] / b1c
            vhat = self.v[i] / b2c
            p.data -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(p.data.dtype)


@dataclasses.dataclass
class TrainConfig:
    batch_size: int = 8
    max_epochs: int = 1000
    patience: int = 20
    seed: int = 0
    threshold: float = 0.5
    lr: float = 1e-5

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.patience < 0 or self.patience > self.max_epochs:
            raise ValueError("patience must lie in [0, max_epochs]")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.lr <= 0.0:
            raise ValueError("lr must be positive")


@dataclasses.dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val: metrics.Scores


@dataclasses.dataclass
class TrainResult:
    best_epoch: int
    best_f1: float
    history: list
    best_state: dict


def format_epoch_line(st: EpochStats) -> str:
    v = st.val
    return (f"{st.epoch}\t{st.train_loss:.6f}\t{v.precision:.4f}\t{v.recall:.4f}"
            f"\t{v.iou:.4f}\t{v.f1:.4f}")


def prepare(records):
    """PatchRecords -> list of (normalized input, target) float32 pairs."""
    pairs = []
    for r in records:
        x = normalize_bands(r.bands).astype(np.float32)
        y = r.mask.astype(np.float32)[None, :, :]
        pairs.append((x, y))
    return pairs


def _batches(pairs, order, batch_size):
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        x = np.stack([pairs[i][0] for i in idx])
        y = np.stack([pairs[i][1] for i in idx])
        yield Tensor(x), Tensor(y)


def evaluate_pairs(model, pairs, threshold=0.5, batch_size=8):
    """Micro-aggregated scores of thresholded predictions over the pairs."""
    counts = metrics.ConfusionCounts()
    order = list(range(len(pairs)))
    with no_grad():
        for x, y in _batches(pairs, order, batch_size):
            prob = model.forward(x)
            pred = (prob.data >= threshold).astype(np.uint8)
            metrics.accumulate(counts, pred, y.data.astype(np.uint8))
    return metrics.scores(counts), counts


def evaluate(model, records, threshold=0.5, batch_size=8):
    """Normalize the records and score the model on them."""
    return evaluate_pairs(model, prepare(records), threshold, batch_size)


def train(model, train_records, val_records, tc: TrainConfig, log_fn=None) -> TrainResult:
    """Fit the model; on return it carries the best-validation-F1 parameters."""
    if not train_records or not val_records:
        raise ValueError("training and validation splits must be non-empty")
    train_pairs = prepare(train_records)
    val_pairs = prepare(val_records)
    rng = np.random.default_rng(int(tc.seed))
    opt = Adam(model.named_parameters(), lr=tc.lr)

    best_f1 = -1.0
    best_epoch = 0
    best_state = model.state_dict()
    since_improved = 0
    history = []

    for epoch in range(1, tc.max_epochs + 1):
        order = rng.permutation(len(train_pairs))
        losses = []
        for b, (x, y) in enumerate(_batches(train_pairs, order, tc.batch_size)):
            loss = bce_loss(model.forward(x), y)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericsError(f"non-finite loss at epoch {epoch}, batch {b}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(value)

        val_scores, _ = evaluate_pairs(model, val_pairs, tc.threshold, tc.batch_size)
        st = EpochStats(epoch, float(np.mean(losses)), val_scores)
        history.append(st)
        if log_fn is not None:
            log_fn(format_epoch_line(st))

        if val_scores.f1 > best_f1:
            best_f1 = val_scores.f1
            best_epoch = epoch
            best_state = model.state_dict()
            since_improved = 0
        else:
            since_improved += 1
            if since_improved > tc.patience:
                break

    model.load_state_dict(best_state)
    return TrainResult(best_epoch, best_f1, history, best_state)
