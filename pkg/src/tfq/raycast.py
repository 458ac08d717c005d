"""Deterministic software volume renderer and grayscale image utilities.

The camera is fixed: orthographic, looking straight down -z, with the
volume's (x, y) footprint mapped onto the full output image. Each ray
visits voxels from the top slice (z = nz-1) down to z = 0 and composites
front to back:

    a = clamp(opacity_scale * tf.opacity[bin] / 255, 0, 1)
    e = bin / 255
    L += (1 - A) * a * e
    A += (1 - A) * a

with early termination once A >= 0.999 and a final background fill of
(1 - A) * background. Identical inputs produce bit-identical images.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .transfer import TransferFunction
from .volume import BinnedVolume

EARLY_TERMINATION = 0.999


class ImageIOError(OSError):
    """Unreadable or malformed image file."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass
class GrayImage:
    """2D grayscale intensity grid, float32 in [0, 1], row-major."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad image size {self.width}x{self.height}")
        # private copy: image payloads never alias caller-owned buffers
        self.pixels = np.array(self.pixels, dtype=np.float32, order="C")
        n = self.width * self.height
        if self.pixels.shape != (n,):
            raise ValueError(
                f"expected {n} pixels for {self.width}x{self.height}, got {self.pixels.size}"
            )
        if not np.isfinite(self.pixels).all():
            raise ValueError("non-finite pixel value")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("pixel value outside [0, 1]")
        _freeze(self.pixels)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "GrayImage":
        """Build from a (height, width) array."""
        arr = np.asarray(arr, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2D array, got shape {arr.shape}")
        return cls(arr.shape[1], arr.shape[0], arr.ravel())

    def pixels2d(self) -> np.ndarray:
        """Read-only (height, width) view."""
        return self.pixels.reshape(self.height, self.width)


@dataclass(frozen=True)
class RenderSettings:
    out_width: int = 256
    out_height: int = 256
    background: float = 0.0
    opacity_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.out_width < 1 or self.out_height < 1:
            raise ValueError(f"bad output size {self.out_width}x{self.out_height}")
        if not 0.0 <= self.background <= 1.0:
            raise ValueError(f"background {self.background} outside [0, 1]")
        if not self.opacity_scale > 0.0:
            raise ValueError(f"opacity_scale must be > 0, got {self.opacity_scale}")


def _nearest_indices(n_out: int, n_src: int) -> np.ndarray:
    # Output pixel centers mapped onto source cells, clamped at the top edge.
    idx = np.floor((np.arange(n_out) + 0.5) * (n_src / n_out)).astype(np.intp)
    return np.minimum(idx, n_src - 1)


def render(
    bv: BinnedVolume, tf: TransferFunction, settings: RenderSettings | None = None
) -> GrayImage:
    """Ray-cast the binned volume through an (already smoothed) transfer
    function; see the module docstring for the compositing model."""
    s = settings or RenderSettings()
    bins3d = bv.bins3d()
    rows = _nearest_indices(s.out_height, bv.ny)
    cols = _nearest_indices(s.out_width, bv.nx)
    slab = bins3d[:, rows[:, None], cols[None, :]]  # (nz, out_h, out_w)

    levels = np.arange(256, dtype=np.float64)
    alpha_lut = np.clip(
        s.opacity_scale * np.asarray(tf.opacity, dtype=np.float64) / 255.0, 0.0, 1.0
    )
    emit_lut = levels / 255.0

    lum = np.zeros((s.out_height, s.out_width), dtype=np.float64)
    acc = np.zeros_like(lum)
    for z in range(bv.nz - 1, -1, -1):
        active = acc < EARLY_TERMINATION
        if not active.any():
            break
        b = slab[z]
        step = np.where(active, (1.0 - acc) * alpha_lut[b], 0.0)
        lum += step * emit_lut[b]
        acc += step
    final = lum + (1.0 - acc) * s.background
    return GrayImage.from_array(np.clip(final, 0.0, 1.0).astype(np.float32))


def resample_bilinear(img: GrayImage, out_width: int, out_height: int) -> GrayImage:
    """Bilinear resampling with pixel-center alignment and clamped edges."""
    src = img.pixels2d().astype(np.float64)

    def axis_coords(n_out: int, n_src: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = (np.arange(n_out) + 0.5) * (n_src / n_out) - 0.5
        x0f = np.floor(x)
        frac = x - x0f
        lo = np.clip(x0f, 0, n_src - 1).astype(np.intp)
        hi = np.clip(x0f + 1, 0, n_src - 1).astype(np.intp)
        return lo, hi, frac

    cx0, cx1, fx = axis_coords(out_width, img.width)
    cy0, cy1, fy = axis_coords(out_height, img.height)
    top = src[cy0[:, None], cx0[None, :]] * (1 - fx)[None, :] + src[
        cy0[:, None], cx1[None, :]
    ] * fx[None, :]
    bot = src[cy1[:, None], cx0[None, :]] * (1 - fx)[None, :] + src[
        cy1[:, None], cx1[None, :]
    ] * fx[None, :]
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    return GrayImage.from_array(np.clip(out, 0.0, 1.0).astype(np.float32))


def resample64(img: GrayImage) -> GrayImage:
    """Resample to the 64x64 metric input size (identity for 64x64 input)."""
    if img.width == 64 and img.height == 64:
        return img
    return resample_bilinear(img, 64, 64)


def load_image(path: str | os.PathLike) -> GrayImage:
    """Load a PNG (8-bit gray or RGB/RGBA) as grayscale in [0, 1].

    Color is reduced with the 0.299 R + 0.587 G + 0.114 B luminance weights
    before scaling by 1/255.
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.float64)
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                arr = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    except (OSError, ValueError) as e:
        raise ImageIOError(f"cannot read image {path}: {e}") from None
    return GrayImage.from_array(np.clip(arr / 255.0, 0.0, 1.0).astype(np.float32))


def save_image(img: GrayImage, path: str | os.PathLike) -> None:
    """Write an 8-bit grayscale PNG, quantizing with round-half-up."""
    q = np.clip(np.floor(img.pixels2d().astype(np.float64) * 255.0 + 0.5), 0, 255)
    Image.fromarray(q.astype(np.uint8), mode="L").save(os.fspath(path), format="PNG")
