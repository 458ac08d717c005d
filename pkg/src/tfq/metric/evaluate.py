"""Pluggable render-vs-target cost metrics: the trained Siamese distance and
a pixelwise MSE oracle. Lower cost means more similar."""
from __future__ import annotations

import numpy as np

from ..raycast import GrayImage
from .layers import DimensionError
from .siamese import SiameseModel, distance


class MseMetric:
    """Mean squared pixel difference; exact, training-free oracle metric."""

    name = "mse"

    def cost(self, a: GrayImage, b: GrayImage) -> float:
        da = a.pixels.astype(np.float64)
        db = b.pixels.astype(np.float64)
        return float(np.mean((da - db) ** 2))


class SiameseMetric:
    """Embedding-distance metric backed by a trained Siamese model."""

    name = "siamese"

    def __init__(self, model: SiameseModel):
        self.model = model

    def cost(self, a: GrayImage, b: GrayImage) -> float:
        return distance(self.model, a, b)


def metric_evaluate(metric, render: GrayImage, target: GrayImage) -> float:
    """Score a render against the target; both must already be 64x64."""
    for name, img in (("render", render), ("target", target)):
        if (img.width, img.height) != (64, 64):
            raise DimensionError(
                f"{name} must be 64x64, got {img.width}x{img.height}"
            )
    return metric.cost(render, target)
