"""Contrastive training of the Siamese metric from labeled image pairs.

Pair files are JSON-lines, one object per line:
``{"a": "<relpath>", "b": "<relpath>", "label": 0|1}`` with label 1 for
similar pairs and 0 for dissimilar ones; paths resolve against the image
directory. Training is mini-batch Adam on the mean contrastive loss and is
bit-reproducible for a fixed seed.
"""
from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from ..raycast import GrayImage, load_image, resample64
from .adam import AdamState, adam_step
from .siamese import SiameseModel, contrastive_loss, core_backward, core_forward

DEFAULT_BATCH_SIZE = 32


@dataclass(frozen=True)
class PairExample:
    a: str
    b: str
    label: int

    def __post_init__(self) -> None:
        if not isinstance(self.a, str) or not isinstance(self.b, str):
            raise ValueError(f"pair paths must be strings, got {self.a!r}, {self.b!r}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


def load_pairs(path: str | os.PathLike) -> list[PairExample]:
    """Parse a JSONL pair file."""
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                pairs.append(PairExample(obj["a"], obj["b"], obj["label"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{path}:{lineno}: bad pair line: {e}") from None
    return pairs


def _load_corpus(images_dir: str, pairs: list[PairExample]) -> dict[str, np.ndarray]:
    """Load every referenced image once, resampled to the 64x64 input size."""
    arrays: dict[str, np.ndarray] = {}
    for pair in pairs:
        for rel in (pair.a, pair.b):
            if rel in arrays:
                continue
            path = os.path.join(images_dir, rel)
            if not os.path.isfile(path):
                raise FileNotFoundError(f"pair image not found: {path}")
            img = resample64(load_image(path))
            arrays[rel] = img.pixels2d().astype(np.float64)
    return arrays


def _pair_batch_step(
    model: SiameseModel,
    xa: np.ndarray,
    xb: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, list[np.ndarray]]:
    """Mean contrastive loss over one batch plus gradients for all params."""
    ea, cache_a = core_forward(model, xa)
    eb, cache_b = core_forward(model, xb)
    diff = ea - eb
    dists = np.sqrt((diff * diff).sum(axis=1))

    n = len(labels)
    losses = np.zeros(n)
    dloss_dd = np.zeros(n)
    for i in range(n):
        losses[i], dloss_dd[i] = contrastive_loss(
            float(dists[i]), int(labels[i]), model.margin
        )
    # d(dist)/d(ea) = diff / dist; combined with dloss_dd this stays finite
    # at dist == 0 for similar pairs (2 * diff) and is zeroed for dissimilar.
    coef = np.zeros(n)
    nonzero = dists > 0
    coef[nonzero] = dloss_dd[nonzero] / dists[nonzero]
    coef[(~nonzero) & (labels == 1)] = 2.0
    dea = (coef[:, None] * diff) / n
    grads_a = core_backward(model, dea, cache_a)
    grads_b = core_backward(model, -dea, cache_b)
    grads = [ga + gb for ga, gb in zip(grads_a, grads_b)]
    return float(losses.mean()), grads


def train_metric(
    images_dir: str | os.PathLike,
    pairs: list[PairExample],
    epochs: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH_SIZE,
    alpha: float = 1e-4,
    margin: float = 1.0,
    log=None,
) -> tuple[SiameseModel, list[float]]:
    """Train a fresh model; returns (model, per-epoch mean losses).

    `log`, when given, is called with one line per epoch (progress only;
    it does not affect the result).
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if not pairs:
        raise ValueError("empty pair set")
    images_dir = os.fspath(images_dir)
    corpus = _load_corpus(images_dir, pairs)

    rng = np.random.default_rng(seed)
    model = SiameseModel.initialize(rng, margin=margin)
    state = AdamState.for_params(model.params, alpha=alpha)

    xa_all = np.stack([corpus[p.a] for p in pairs])[:, None]  # (P, 1, 64, 64)
    xb_all = np.stack([corpus[p.b] for p in pairs])[:, None]
    labels_all = np.array([p.label for p in pairs])

    epoch_losses: list[float] = []
    for epoch in range(epochs):
        order = rng.permutation(len(pairs))
        total = 0.0
        for lo in range(0, len(pairs), batch_size):
            sel = order[lo : lo + batch_size]
            loss, grads = _pair_batch_step(
                model, xa_all[sel], xb_all[sel], labels_all[sel]
            )
            adam_step(model.params, grads, state)
            total += loss * len(sel)
        epoch_losses.append(total / len(pairs))
        if log is not None:
            log(f"epoch {epoch + 1}/{epochs} mean loss {epoch_losses[-1]:.6f}")
    return model, epoch_losses
