"""Siamese image-similarity metric: tensor layers, the shared-core model,
contrastive training with Adam, persistence, and pluggable evaluation."""

from .adam import AdamState, adam_step
from .evaluate import MseMetric, SiameseMetric, metric_evaluate
from .layers import (
    DimensionError,
    conv2d_backward,
    conv2d_forward,
    fc_backward,
    fc_forward,
    maxpool2x2_backward,
    maxpool2x2_forward,
    relu_backward,
    relu_forward,
)
from .siamese import (
    DEFAULT_MARGIN,
    ModelFormatError,
    SiameseModel,
    contrastive_loss,
    core_backward,
    core_forward,
    default_architecture,
    distance,
    embed,
    load_model,
    save_model,
)
from .train import PairExample, load_pairs, train_metric

__all__ = [
    "AdamState",
    "adam_step",
    "MseMetric",
    "SiameseMetric",
    "metric_evaluate",
    "DimensionError",
    "conv2d_backward",
    "conv2d_forward",
    "fc_backward",
    "fc_forward",
    "maxpool2x2_backward",
    "maxpool2x2_forward",
    "relu_backward",
    "relu_forward",
    "DEFAULT_MARGIN",
    "ModelFormatError",
    "SiameseModel",
    "contrastive_loss",
    "core_backward",
    "core_forward",
    "default_architecture",
    "distance",
    "embed",
    "load_model",
    "save_model",
    "PairExample",
    "load_pairs",
    "train_metric",
]
