"""The probing model: a single linear layer over frozen embeddings.

Multinomial softmax regression trained with deterministic mini-batch
gradient descent, elementwise gradient clipping, dev-accuracy early
stopping with patience, and restore-best weights. Contrastive pair tasks
use the same model over the concatenation of the two token vectors.

Embeddings are inputs, never parameters: they are read from the table and
never written.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .embio import EmbeddingTable
from .errors import (
    BadLabelIndex,
    DimMismatch,
    EmptySplit,
    OOVToken,
    SingleClassDataset,
)
from .probing_data import Instance, ProbingDataset, TOKEN_PAIR

INIT_SCALE = 0.08


@dataclass
class TrainConfig:
    """Training recipe: 20 epochs, patience 5, elementwise clip 0.5.

    The learning rate and batch size are free parameters; the defaults are
    tuned so that plain gradient descent separates linearly separable data
    well within the epoch budget.
    """

    max_epochs: int = 20
    patience: int = 5
    grad_clip: float = 0.5
    learning_rate: float = 1.0
    batch_size: int = 32
    seed: int = 13

    def __post_init__(self):
        if self.max_epochs < 1 or self.patience < 1:
            raise ValueError("max_epochs and patience must be >= 1")
        if self.learning_rate <= 0 or self.grad_clip <= 0 or self.batch_size < 1:
            raise ValueError("learning_rate, grad_clip and batch_size must be positive")


@dataclass
class Classifier:
    """Linear probe: p(y|x) = softmax(W x + b)."""

    W: np.ndarray  # (K, D)
    b: np.ndarray  # (K,)
    input_dim: int
    label_index: dict[str, int]
    kind: str

    @property
    def labels(self) -> list[str]:
        return [l for l, _ in sorted(self.label_index.items(), key=lambda kv: kv[1])]


@dataclass
class TrainReport:
    epochs_run: int
    best_epoch: int
    dev_accuracy_per_epoch: list[float]
    train_loss_per_epoch: list[float]
    stopped_early: bool


@dataclass
class EvalResult:
    accuracy: float
    mean_loss: float
    n: int


@dataclass
class Gradients:
    W: np.ndarray
    b: np.ndarray


def encode(instance: Instance, table: EmbeddingTable, kind: str) -> np.ndarray:
    """Instance -> input vector: the token vector, or the pair concatenated."""
    vecs = []
    for token in instance.tokens:
        vec = table.lookup(token)
        if vec is None:
            raise OOVToken(f"token {token!r} not in embedding table")
        vecs.append(vec)
    expected = 2 if kind == TOKEN_PAIR else 1
    if len(vecs) != expected:
        raise DimMismatch(
            f"{kind} instance must carry {expected} token(s), got {len(vecs)}"
        )
    return vecs[0] if len(vecs) == 1 else np.concatenate(vecs)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def forward(c: Classifier, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (c.input_dim,):
        raise DimMismatch(f"input has shape {x.shape}, classifier expects ({c.input_dim},)")
    return _softmax(c.W @ x + c.b)


def _loss_grads_matrix(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy and its exact gradients over a batch."""
    n = len(y)
    probs = _softmax(X @ W.T + b)
    loss = float(-np.log(probs[np.arange(n), y]).mean())
    probs[np.arange(n), y] -= 1.0
    return loss, probs.T @ X / n, probs.mean(axis=0)


def loss_and_grad(
    c: Classifier, batch: Sequence[tuple[np.ndarray, int]]
) -> tuple[float, Gradients]:
    """Mean negative log-likelihood of the true labels plus analytic gradients."""
    if not batch:
        raise EmptySplit("loss_and_grad needs a non-empty batch")
    K = len(c.label_index)
    X = np.empty((len(batch), c.input_dim), dtype=np.float64)
    y = np.empty(len(batch), dtype=np.intp)
    for i, (x, label_idx) in enumerate(batch):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (c.input_dim,):
            raise DimMismatch(f"batch item {i} has shape {x.shape}")
        if not 0 <= label_idx < K:
            raise BadLabelIndex(f"label index {label_idx} outside 0..{K - 1}")
        X[i] = x
        y[i] = label_idx
    loss, gW, gb = _loss_grads_matrix(c.W, c.b, X, y)
    return loss, Gradients(W=gW, b=gb)


def clip_gradients(grads: Gradients, bound: float = 0.5) -> Gradients:
    """Clamp every gradient component into [-bound, +bound]."""
    return Gradients(W=np.clip(grads.W, -bound, bound), b=np.clip(grads.b, -bound, bound))


def _encode_split(
    split: Sequence[Instance],
    table: EmbeddingTable,
    kind: str,
    label_index: dict[str, int],
) -> tuple[np.ndarray, np.ndarray]:
    dim = table.dim * (2 if kind == TOKEN_PAIR else 1)
    X = np.empty((len(split), dim), dtype=np.float64)
    y = np.empty(len(split), dtype=np.intp)
    for i, inst in enumerate(split):
        X[i] = encode(inst, table, kind)
        if inst.label not in label_index:
            raise BadLabelIndex(f"label {inst.label!r} not in label set")
        y[i] = label_index[inst.label]
    return X, y


def train(
    table: EmbeddingTable,
    ds: ProbingDataset,
    cfg: TrainConfig,
    grad_hook: Optional[Callable[[Gradients], None]] = None,
) -> tuple[Classifier, TrainReport]:
    """Train the probe on a dataset already intersected with the table.

    Mini-batch gradient descent with per-epoch reshuffling driven by
    ``cfg.seed``; after each epoch dev accuracy is measured, and training
    stops once ``patience`` consecutive epochs fail to improve the best
    value (ties do not count) or at ``max_epochs``. The returned classifier
    carries the best-epoch parameters. Fully deterministic.

    ``grad_hook``, if given, observes every post-clip gradient.
    """
    if len(ds.label_set) < 2:
        raise SingleClassDataset(f"training needs >= 2 classes, got {ds.label_set}")
    for split in ("train", "dev"):
        if not ds.splits.get(split):
            raise EmptySplit(f"training needs a non-empty {split!r} split")

    kind = ds.task.kind
    label_index = {label: i for i, label in enumerate(ds.label_set)}
    X_train, y_train = _encode_split(ds.splits["train"], table, kind, label_index)
    X_dev, y_dev = _encode_split(ds.splits["dev"], table, kind, label_index)

    K, D = len(label_index), X_train.shape[1]
    rng = np.random.default_rng(cfg.seed)
    W = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(K, D))
    b = rng.uniform(-INIT_SCALE, INIT_SCALE, size=K)

    best_acc = -1.0
    best_params = (W.copy(), b.copy())
    best_epoch = 0
    epochs_without_improvement = 0
    stopped_early = False
    dev_accuracies: list[float] = []
    train_losses: list[float] = []

    n = len(y_train)
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, gW, gb = _loss_grads_matrix(W, b, X_train[idx], y_train[idx])
            clipped = clip_gradients(Gradients(W=gW, b=gb), cfg.grad_clip)
            if grad_hook is not None:
                grad_hook(clipped)
            W -= cfg.learning_rate * clipped.W
            b -= cfg.learning_rate * clipped.b
            loss_sum += loss * len(idx)
        train_losses.append(loss_sum / n)

        dev_acc = float((np.argmax(X_dev @ W.T + b, axis=1) == y_dev).mean())
        dev_accuracies.append(dev_acc)
        if dev_acc > best_acc:
            best_acc = dev_acc
            best_params = (W.copy(), b.copy())
            best_epoch = epoch
            epochs_without_improvement = 0
        else:
            epochs_without_improvement += 1
            if epochs_without_improvement >= cfg.patience:
                stopped_early = True
                break

    classifier = Classifier(
        W=best_params[0],
        b=best_params[1],
        input_dim=D,
        label_index=label_index,
        kind=kind,
    )
    report = TrainReport(
        epochs_run=len(dev_accuracies),
        best_epoch=best_epoch,
        dev_accuracy_per_epoch=dev_accuracies,
        train_loss_per_epoch=train_losses,
        stopped_early=stopped_early,
    )
    return classifier, report


def evaluate(
    c: Classifier, table: EmbeddingTable, split: Sequence[Instance]
) -> EvalResult:
    """Accuracy (argmax ties -> lowest class index) and mean cross-entropy."""
    if not split:
        raise EmptySplit("evaluate needs a non-empty split")
    X, y = _encode_split(split, table, c.kind, c.label_index)
    probs = _softmax(X @ c.W.T + c.b)
    accuracy = float((probs.argmax(axis=1) == y).mean())
    mean_loss = float(-np.log(probs[np.arange(len(y)), y]).mean())
    return EvalResult(accuracy=accuracy, mean_loss=mean_loss, n=len(y))
