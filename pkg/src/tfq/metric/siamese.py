"""Siamese similarity model: twin max-pooling convolutional cores with
shared weights, L2 embedding distance, and contrastive loss.

The standard core takes a 64x64 grayscale image through three
conv+relu+maxpool stages (1->32->128->256 channels, spatial 64->32->16->8),
flattens the 256 8x8 feature maps, and applies two fully connected layers
to produce a 1024-wide embedding. Both inputs of a pair run through the
same weight storage, so distance(a, b) == distance(b, a) bit-exactly.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..raycast import GrayImage
from ..util import atomic_write_bytes
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

MODEL_MAGIC = b"TFQNN1\n"
DEFAULT_MARGIN = 1.0
EMBED_SIZE = 1024


class ModelFormatError(ValueError):
    """Malformed or unsupported model file."""


def default_architecture() -> list[dict]:
    """Layer chain of the standard 64x64 core (ending in 256 8x8 features)."""
    return [
        {"op": "conv", "in": 1, "out": 32, "k": 5, "pad": 2, "stride": 1},
        {"op": "relu"},
        {"op": "pool"},
        {"op": "conv", "in": 32, "out": 128, "k": 5, "pad": 2, "stride": 1},
        {"op": "relu"},
        {"op": "pool"},
        {"op": "conv", "in": 128, "out": 256, "k": 3, "pad": 1, "stride": 1},
        {"op": "relu"},
        {"op": "pool"},
        {"op": "flatten"},
        {"op": "fc", "in": 16384, "out": 1024},
        {"op": "relu"},
        {"op": "fc", "in": 1024, "out": 1024},
    ]


def _param_shapes(layer: dict) -> list[tuple[int, ...]]:
    if layer["op"] == "conv":
        return [(layer["out"], layer["in"], layer["k"], layer["k"]), (layer["out"],)]
    if layer["op"] == "fc":
        return [(layer["out"], layer["in"]), (layer["out"],)]
    return []


@dataclass
class SiameseModel:
    """Architecture descriptor plus the single shared parameter storage."""

    layers: list[dict]
    params: list[np.ndarray]
    margin: float = DEFAULT_MARGIN
    input_shape: tuple[int, int, int] = (1, 64, 64)
    # params[param_offsets[i] : param_offsets[i+1]] belong to layers[i]
    param_offsets: list[int] = field(init=False)

    def __post_init__(self) -> None:
        offsets = [0]
        for layer in self.layers:
            offsets.append(offsets[-1] + len(_param_shapes(layer)))
        self.param_offsets = offsets
        if len(self.params) != offsets[-1]:
            raise ModelFormatError(
                f"expected {offsets[-1]} parameter tensors, got {len(self.params)}"
            )
        idx = 0
        for layer in self.layers:
            for shape in _param_shapes(layer):
                if self.params[idx].shape != shape:
                    raise ModelFormatError(
                        f"parameter {idx} has shape {self.params[idx].shape}, "
                        f"expected {shape}"
                    )
                self.params[idx] = np.asarray(self.params[idx], dtype=np.float64)
                idx += 1

    @classmethod
    def initialize(
        cls,
        rng: np.random.Generator,
        layers: list[dict] | None = None,
        margin: float = DEFAULT_MARGIN,
        input_shape: tuple[int, int, int] = (1, 64, 64),
    ) -> "SiameseModel":
        """Fan-in-scaled uniform weight init (+-sqrt(6/fan_in)), zero biases."""
        layers = layers if layers is not None else default_architecture()
        params: list[np.ndarray] = []
        for layer in layers:
            if layer["op"] == "conv":
                fan_in = layer["in"] * layer["k"] * layer["k"]
            elif layer["op"] == "fc":
                fan_in = layer["in"]
            else:
                continue
            bound = np.sqrt(6.0 / fan_in)
            wshape, bshape = _param_shapes(layer)
            params.append(rng.uniform(-bound, bound, size=wshape))
            params.append(np.zeros(bshape))
        return cls(layers, params, margin=margin, input_shape=input_shape)

    def layer_params(self, i: int) -> list[np.ndarray]:
        return self.params[self.param_offsets[i] : self.param_offsets[i + 1]]


def core_forward(model: SiameseModel, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Run a batch (N, C, H, W) through the core; returns (embeddings, cache).

    The cache holds per-layer inputs/argmaxes for core_backward.
    """
    from .layers import _conv_forward_cols

    cache: list = []
    out = np.asarray(x, dtype=np.float64)
    for i, layer in enumerate(model.layers):
        op = layer["op"]
        if op == "conv":
            w, b = model.layer_params(i)
            x_in = out
            out, cols = _conv_forward_cols(out, w, b, layer["pad"], layer["stride"])
            cache.append(("conv", x_in, w, layer["pad"], layer["stride"], cols))
        elif op == "relu":
            cache.append(("relu", out))
            out = relu_forward(out)
        elif op == "pool":
            out, arg = maxpool2x2_forward(out)
            cache.append(("pool", arg))
        elif op == "flatten":
            cache.append(("flatten", out.shape))
            out = out.reshape(out.shape[0], -1)
        elif op == "fc":
            w, b = model.layer_params(i)
            cache.append(("fc", out, w))
            out = fc_forward(out, w, b)
        else:
            raise ModelFormatError(f"unknown layer op {op!r}")
    return out, cache


def core_backward(
    model: SiameseModel, dout: np.ndarray, cache: list
) -> list[np.ndarray]:
    """Backprop through the core; returns gradients aligned with model.params."""
    grads: list[np.ndarray | None] = [None] * len(model.params)
    d = np.asarray(dout, dtype=np.float64)
    for i in range(len(model.layers) - 1, -1, -1):
        entry = cache[i]
        kind = entry[0]
        if kind == "conv":
            _, x, w, pad, stride, cols = entry
            d, dw, db = conv2d_backward(d, x, w, pad=pad, stride=stride, cols=cols)
            grads[model.param_offsets[i]] = dw
            grads[model.param_offsets[i] + 1] = db
        elif kind == "relu":
            d = relu_backward(d, entry[1])
        elif kind == "pool":
            d = maxpool2x2_backward(d, entry[1])
        elif kind == "flatten":
            d = d.reshape(entry[1])
        elif kind == "fc":
            _, x, w = entry
            d, dw, db = fc_backward(d, x, w)
            grads[model.param_offsets[i]] = dw
            grads[model.param_offsets[i] + 1] = db
    return [g if g is not None else np.zeros(0) for g in grads]


def _check_input(model: SiameseModel, img: GrayImage) -> np.ndarray:
    c, h, w = model.input_shape
    if (img.height, img.width) != (h, w):
        raise DimensionError(
            f"expected a {w}x{h} image, got {img.width}x{img.height}"
        )
    return img.pixels2d().astype(np.float64)[None, None]


def embed(model: SiameseModel, img: GrayImage) -> np.ndarray:
    """Map one image to its feature vector."""
    out, _ = core_forward(model, _check_input(model, img))
    return out[0]


def distance(model: SiameseModel, a: GrayImage, b: GrayImage) -> float:
    """L2 distance between the two embeddings (symmetric, >= 0)."""
    diff = embed(model, a) - embed(model, b)
    return float(np.sqrt(np.dot(diff, diff)))


def contrastive_loss(d: float, label: int, margin: float) -> tuple[float, float]:
    """Loss and dLoss/dd for one pair: d^2 if similar (label 1), else
    max(0, margin - d)^2."""
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label}")
    if label == 1:
        return d * d, 2.0 * d
    gap = margin - d
    if gap <= 0:
        return 0.0, 0.0
    return gap * gap, -2.0 * gap


def save_model(model: SiameseModel, path: str | os.PathLike) -> None:
    """Write magic, one JSON descriptor line, then float64 LE weights."""
    descriptor = {
        "version": 1,
        "margin": model.margin,
        "input": list(model.input_shape),
        "layers": model.layers,
    }
    blob = MODEL_MAGIC + json.dumps(descriptor).encode("ascii") + b"\n"
    blob += b"".join(p.astype("<f8").tobytes() for p in model.params)
    atomic_write_bytes(path, blob)


def load_model(path: str | os.PathLike) -> SiameseModel:
    with open(path, "rb") as f:
        blob = f.read()
    if not blob.startswith(MODEL_MAGIC):
        raise ModelFormatError(f"{path}: bad magic")
    nl = blob.find(b"\n", len(MODEL_MAGIC))
    if nl < 0:
        raise ModelFormatError(f"{path}: missing descriptor line")
    try:
        descriptor = json.loads(blob[len(MODEL_MAGIC) : nl])
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path}: bad descriptor: {e}") from None
    if descriptor.get("version") != 1:
        raise ModelFormatError(
            f"{path}: unsupported version {descriptor.get('version')!r}"
        )
    layers = descriptor["layers"]
    payload = blob[nl + 1 :]
    params: list[np.ndarray] = []
    pos = 0
    for layer in layers:
        for shape in _param_shapes(layer):
            n = int(np.prod(shape)) * 8
            if pos + n > len(payload):
                raise ModelFormatError(f"{path}: truncated weight data")
            params.append(
                np.frombuffer(payload[pos : pos + n], dtype="<f8").reshape(shape).copy()
            )
            pos += n
    if pos != len(payload):
        raise ModelFormatError(f"{path}: {len(payload) - pos} trailing bytes")
    return SiameseModel(
        layers,
        params,
        margin=float(descriptor["margin"]),
        input_shape=tuple(descriptor["input"]),
    )
