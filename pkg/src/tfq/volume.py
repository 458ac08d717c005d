"""Volume data model, .vol file I/O, and quantization onto opacity bins.

A volume is a dense 3D scalar field stored x-fastest (x varies quickest,
then y, then z). Rendering never consumes raw scalars directly: samples are
first quantized onto the 256 bins that index an opacity transfer function.

.vol format (bit-exact): ASCII line ``TFQVOL1``, ASCII line ``nx ny nz``,
one ``\\n`` after each, then nx*ny*nz little-endian IEEE-754 float32
samples, x-fastest. No trailing bytes.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .util import atomic_write_bytes

VOL_MAGIC = b"TFQVOL1"
NUM_BINS = 256


class VolumeFormatError(ValueError):
    """Malformed .vol file or invalid volume payload."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass
class Volume:
    """3D scalar field with precomputed value range.

    samples is a flat float32 array of length nx*ny*nz, x-fastest; vmin and
    vmax are the exact sample min/max. Immutable after construction and safe
    to share across evaluation workers.
    """

    nx: int
    ny: int
    nz: int
    samples: np.ndarray
    vmin: float
    vmax: float

    def __post_init__(self) -> None:
        if min(self.nx, self.ny, self.nz) < 1:
            raise VolumeFormatError(
                f"dimensions must be positive, got {self.nx}x{self.ny}x{self.nz}"
            )
        # private copy: callers must not be able to mutate a constructed volume
        self.samples = np.array(self.samples, dtype=np.float32, order="C")
        n = self.nx * self.ny * self.nz
        if self.samples.shape != (n,):
            raise VolumeFormatError(
                f"expected {n} samples for {self.nx}x{self.ny}x{self.nz}, "
                f"got {self.samples.size}"
            )
        finite = np.isfinite(self.samples)
        if not finite.all():
            idx = int(np.argmin(finite))
            raise VolumeFormatError(f"non-finite sample at index {idx}")
        lo = float(self.samples.min())
        hi = float(self.samples.max())
        if (self.vmin, self.vmax) != (lo, hi):
            raise VolumeFormatError(
                f"stored range [{self.vmin}, {self.vmax}] does not match "
                f"data range [{lo}, {hi}]"
            )
        _freeze(self.samples)

    @classmethod
    def from_samples(cls, nx: int, ny: int, nz: int, samples: np.ndarray) -> "Volume":
        """Build a Volume, computing vmin/vmax from the data."""
        samples = np.ascontiguousarray(samples, dtype=np.float32).ravel()
        if samples.size == 0:
            raise VolumeFormatError("empty sample array")
        finite = np.isfinite(samples)
        if not finite.all():
            idx = int(np.argmin(finite))
            raise VolumeFormatError(f"non-finite sample at index {idx}")
        return cls(nx, ny, nz, samples, float(samples.min()), float(samples.max()))


@dataclass
class BinnedVolume:
    """Volume quantized to the 256 transfer-function domain bins.

    bins is a flat uint8 array with the same x-fastest layout as the source
    Volume. Immutable after construction.
    """

    nx: int
    ny: int
    nz: int
    bins: np.ndarray

    def __post_init__(self) -> None:
        if min(self.nx, self.ny, self.nz) < 1:
            raise VolumeFormatError(
                f"dimensions must be positive, got {self.nx}x{self.ny}x{self.nz}"
            )
        self.bins = np.array(self.bins, dtype=np.uint8, order="C")
        n = self.nx * self.ny * self.nz
        if self.bins.shape != (n,):
            raise VolumeFormatError(
                f"expected {n} bins for {self.nx}x{self.ny}x{self.nz}, "
                f"got {self.bins.size}"
            )
        _freeze(self.bins)

    def bins3d(self) -> np.ndarray:
        """Read-only (nz, ny, nx) view of the bin grid."""
        return self.bins.reshape(self.nz, self.ny, self.nx)


def bin_volume(v: Volume) -> BinnedVolume:
    """Assign each sample its domain-interval index in [0, 255].

    bin = floor((sample - vmin) / (vmax - vmin) * 256), clamped to [0, 255].
    A constant volume (vmax == vmin) maps everything to bin 0.
    """
    if v.vmax == v.vmin:
        bins = np.zeros(v.samples.size, dtype=np.uint8)
    else:
        scaled = (v.samples.astype(np.float64) - v.vmin) / (v.vmax - v.vmin)
        bins = np.clip(np.floor(scaled * NUM_BINS), 0, NUM_BINS - 1).astype(np.uint8)
    return BinnedVolume(v.nx, v.ny, v.nz, bins)


def load_volume(path: str | os.PathLike) -> Volume:
    """Read a .vol file; see the module docstring for the format."""
    with open(path, "rb") as f:
        blob = f.read()

    first = blob.find(b"\n")
    second = blob.find(b"\n", first + 1) if first >= 0 else -1
    if first < 0 or second < 0:
        raise VolumeFormatError(f"{path}: missing header lines")
    if blob[:first] != VOL_MAGIC:
        raise VolumeFormatError(
            f"{path}: bad magic {blob[:first]!r}, expected {VOL_MAGIC!r}"
        )
    dim_line = blob[first + 1 : second]
    parts = dim_line.split(b" ")
    try:
        nx, ny, nz = (int(p) for p in parts)
    except ValueError:
        raise VolumeFormatError(f"{path}: bad dimension line {dim_line!r}") from None
    if min(nx, ny, nz) < 1:
        raise VolumeFormatError(f"{path}: non-positive dimensions {nx}x{ny}x{nz}")

    payload = blob[second + 1 :]
    expected = nx * ny * nz * 4
    if len(payload) != expected:
        raise VolumeFormatError(
            f"{path}: expected {expected} payload bytes, got {len(payload)}"
        )
    samples = np.frombuffer(payload, dtype="<f4").astype(np.float32)
    finite = np.isfinite(samples)
    if not finite.all():
        idx = int(np.argmin(finite))
        raise VolumeFormatError(f"{path}: non-finite sample at index {idx}")
    return Volume(nx, ny, nz, samples, float(samples.min()), float(samples.max()))


def save_volume(v: Volume, path: str | os.PathLike) -> None:
    """Write a Volume as .vol; reloading yields bit-identical samples."""
    header = VOL_MAGIC + b"\n" + f"{v.nx} {v.ny} {v.nz}".encode("ascii") + b"\n"
    atomic_write_bytes(path, header + v.samples.astype("<f4").tobytes())
