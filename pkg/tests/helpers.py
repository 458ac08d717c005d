"""Shared builders for synthetic volumes, images, and toy training corpora."""
from __future__ import annotations

import json
import os

import numpy as np

from tfq.raycast import GrayImage, save_image
from tfq.volume import Volume


def radial_volume(n: int = 64) -> Volume:
    """Spherical-gradient volume: value = distance from center, so bins form
    concentric shells and window transfer functions render distinct rings."""
    axis = (np.arange(n) + 0.5) / n - 0.5
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    r = np.sqrt(x * x + y * y + z * z)
    # x-fastest layout: index = x + nx*(y + ny*z)
    samples = np.transpose(r, (2, 1, 0)).ravel().astype(np.float32)
    return Volume.from_samples(n, n, n, samples)


def column_volume(values: list[float]) -> Volume:
    """A 1x1xN column; values[0] is the bottom voxel (z = 0)."""
    return Volume.from_samples(1, 1, len(values), np.array(values, dtype=np.float32))


def random_gray(rng: np.random.Generator, width: int = 64, height: int = 64) -> GrayImage:
    return GrayImage.from_array(rng.random((height, width)).astype(np.float32))


def brute_force_composite(
    bins_top_down: list[int],
    opacity: list[int],
    background: float = 0.0,
    opacity_scale: float = 1.0,
) -> float:
    """Independent scalar oracle for one ray, front-to-back with early
    termination; bins_top_down[0] is the voxel nearest the camera."""
    lum = 0.0
    acc = 0.0
    for b in bins_top_down:
        if acc >= 0.999:
            break
        a = min(max(opacity_scale * opacity[b] / 255.0, 0.0), 1.0)
        e = b / 255.0
        lum += (1.0 - acc) * a * e
        acc += (1.0 - acc) * a
    return lum + (1.0 - acc) * background


def write_toy_corpus(root: str, rng: np.random.Generator) -> tuple[list[str], list[str]]:
    """Two visually separable 64x64 image families: bright and dark, each
    with per-image texture. Returns (bright_names, dark_names)."""
    os.makedirs(root, exist_ok=True)
    bright, dark = [], []
    for i in range(4):
        texture = rng.random((64, 64)).astype(np.float32)
        b = np.clip(0.85 + 0.15 * texture, 0.0, 1.0)
        d = np.clip(0.15 * texture, 0.0, 1.0)
        bname, dname = f"bright_{i}.png", f"dark_{i}.png"
        save_image(GrayImage.from_array(b), os.path.join(root, bname))
        save_image(GrayImage.from_array(d), os.path.join(root, dname))
        bright.append(bname)
        dark.append(dname)
    return bright, dark


def write_toy_pairs(path: str, bright: list[str], dark: list[str]) -> int:
    """20 labeled pairs: 10 similar (within family), 10 dissimilar (across)."""
    lines = []
    combos = [(i, j) for i in range(4) for j in range(i + 1, 4)]  # 6 per family
    for i, j in combos[:5]:
        lines.append({"a": bright[i], "b": bright[j], "label": 1})
        lines.append({"a": dark[i], "b": dark[j], "label": 1})
    for k in range(10):
        lines.append({"a": bright[k % 4], "b": dark[(k * 3 + 1) % 4], "label": 0})
    with open(path, "w", encoding="utf-8") as f:
        for obj in lines:
            f.write(json.dumps(obj) + "\n")
    return len(lines)
