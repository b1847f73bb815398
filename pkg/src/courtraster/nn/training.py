"""Mini-batch SGD training with batch normalization and early stopping.

Training is single-threaded and bitwise deterministic for a fixed seed: the
shuffle order comes from one seeded generator, batches are visited in order,
and parameter updates are plain ``w -= lr * g``. Feature inputs are z-scored
with statistics of the training split only; the statistics ride along in the
parameter dict so checkpoints reproduce inference exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import Standardize, softmax_logloss
from .network import ModelSpec, Network


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    batch_size: int = 64
    epochs: int = 30
    seed: int = 0
    patience: int = 5  # early stop on validation log loss
    lr_decay_every: int = 0  # halve the step size every N epochs; 0 = constant

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")

    def lr_at(self, epoch: int) -> float:
        if self.lr_decay_every <= 0:
            return self.lr
        return self.lr * 0.5 ** (epoch // self.lr_decay_every)


@dataclass
class Dataset:
    labels: np.ndarray
    images: np.ndarray | None = None
    features: np.ndarray | None = None
    splits: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = len(self.labels)
        if self.images is not None:
            self.images = np.asarray(self.images, dtype=np.float32)
            if len(self.images) != n:
                raise ValueError("images/labels length mismatch")
        if self.features is not None:
            self.features = np.asarray(self.features, dtype=np.float32)
            if len(self.features) != n:
                raise ValueError("features/labels length mismatch")

    def take(self, idx: np.ndarray, spec: ModelSpec):
        imgs = self.images[idx] if spec.uses_images() else None
        feats = self.features[idx] if spec.uses_features() else None
        return imgs, feats, self.labels[idx]


def split_indices(n: int, ratios: tuple[float, float, float], seed: int) -> dict[str, np.ndarray]:
    """Deterministic shuffled train/val/test split by ratio."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(n * ratios[0]))
    n_val = int(round(n * ratios[1]))
    return {
        "train": perm[:n_train],
        "val": perm[n_train : n_train + n_val],
        "test": perm[n_train + n_val :],
    }


def _first_nonfinite_layer(net: Network, images, features, params) -> str:
    """Replay a forward pass layer by layer to name the first bad output."""
    stacks = []
    if net.image_layers:
        stacks.append((net.image_layers, net._to_channels_last(images)))
    if net.feature_layers:
        stacks.append((net.feature_layers, features))
    parts = []
    for layers, x in stacks:
        for layer in layers:
            x = layer.forward(x, params, train=False)
            if not np.isfinite(x).all():
                return layer.prefix
        parts.append(x)
    h = np.concatenate(parts, axis=1) if len(parts) == 2 else parts[0]
    for layer in net.head_layers:
        h = layer.forward(h, params, train=False)
        if not np.isfinite(h).all():
            return layer.prefix
    return "loss"


def _set_feature_norm(net: Network, params, features, train_idx) -> None:
    std_layers = [l for l in net.feature_layers if isinstance(l, Standardize)]
    if not std_layers:
        return
    layer = std_layers[0]
    feats = features[train_idx].astype(np.float64)
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std < 1e-8] = 1.0  # constant features pass through centered
    dtype = params[layer.m_name].dtype
    params[layer.m_name] = mean.astype(dtype)
    params[layer.s_name] = std.astype(dtype)


def train(spec: ModelSpec, dataset: Dataset, cfg: TrainConfig):
    """Returns (params of the best-validation epoch, per-epoch history)."""
    net = Network(spec)
    params = net.init_params(cfg.seed)
    train_idx = dataset.splits["train"]
    val_idx = dataset.splits.get("val", np.empty(0, dtype=np.int64))
    if len(train_idx) < 2:
        raise TrainingError("need at least 2 training samples (batch norm)")
    if spec.uses_features():
        _set_feature_norm(net, params, dataset.features, train_idx)

    shuffle_rng = np.random.default_rng([cfg.seed, 0x5E1])
    trainable = net.trainable_names()
    history: list[dict] = []
    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    best_epoch = -1

    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        order = train_idx[shuffle_rng.permutation(len(train_idx))]
        loss_sum = 0.0
        err_sum = 0.0
        seen = 0
        for lo in range(0, len(order), cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            if len(batch) == 1:
                continue  # a single sample has no batch statistics
            imgs, feats, labels = dataset.take(batch, spec)
            loss, err, grads = net.loss_and_grads(imgs, feats, labels, params)
            if not np.isfinite(loss):
                bad = _first_nonfinite_layer(net, imgs, feats, params)
                raise TrainingError(
                    f"non-finite loss in epoch {epoch}; first non-finite output at {bad!r}"
                )
            for name in trainable:
                if name in grads:
                    params[name] -= lr * grads[name]
            loss_sum += loss * len(batch)
            err_sum += err * len(batch)
            seen += len(batch)

        row = {
            "epoch": epoch,
            "train_log_loss": loss_sum / max(seen, 1),
            "train_error_rate": err_sum / max(seen, 1),
        }
        if len(val_idx):
            val = evaluate(params, spec, dataset, split="val", net=net)
            row["val_log_loss"] = val["log_loss"]
            row["val_error_rate"] = val["error_rate"]
            if row["val_log_loss"] < best_val:
                best_val = row["val_log_loss"]
                best_params = {k: v.copy() for k, v in params.items()}
                best_epoch = epoch
        history.append(row)
        if len(val_idx) and cfg.patience >= 0 and epoch - best_epoch > cfg.patience:
            break

    if not len(val_idx):
        best_params = params
    return best_params, history


def predict_probs(params, spec: ModelSpec, images, features, batch: int = 256, net=None):
    """Class probabilities (N, classes) float64, eval-mode batch norm."""
    net = net or Network(spec)
    n = len(images) if images is not None else len(features)
    out = np.empty((n, spec.classes), dtype=np.float64)
    for lo in range(0, n, batch):
        hi = min(lo + batch, n)
        imgs = images[lo:hi] if images is not None and spec.uses_images() else None
        feats = features[lo:hi] if features is not None and spec.uses_features() else None
        logits = net.forward(imgs, feats, params, train=False)
        probs, _, _ = softmax_logloss(logits, np.zeros(hi - lo, dtype=np.int64))
        out[lo:hi] = probs
    return out


def evaluate(params, spec: ModelSpec, dataset: Dataset, split: str = "test", batch: int = 256, net=None):
    """Mean per-sample log loss and argmax error rate over a split."""
    net = net or Network(spec)
    idx = dataset.splits[split]
    if len(idx) == 0:
        raise ValueError(f"split {split!r} is empty")
    loss_sum = 0.0
    wrong = 0
    for lo in range(0, len(idx), batch):
        sel = idx[lo : lo + batch]
        imgs, feats, labels = dataset.take(sel, spec)
        logits = net.forward(imgs, feats, params, train=False)
        probs, losses, _ = softmax_logloss(logits, labels)
        loss_sum += float(losses.sum())
        wrong += int(np.sum(np.argmax(probs, axis=1) != labels))
    return {
        "log_loss": loss_sum / len(idx),
        "error_rate": wrong / len(idx),
    }
