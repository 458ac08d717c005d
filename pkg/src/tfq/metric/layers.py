"""Neural layer primitives with hand-derived backward passes.

Everything is float64 so finite-difference gradient checks are meaningful.
Convolution and pooling take a single image (C, H, W) or a batch
(N, C, H, W); fully connected layers take (D,) or (N, D). Backward
functions return exact analytic gradients with the same rank as their
inputs.

Convolution is cross-correlation with zero padding, computed as a single
tensordot over strided input windows (im2col-style, BLAS-bound).
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class DimensionError(ValueError):
    """Tensor shape incompatible with the layer configuration."""


def _as_batch(x: np.ndarray, rank: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == rank - 1:
        return x[None], True
    if x.ndim == rank:
        return x, False
    raise DimensionError(f"{what}: expected {rank - 1}D or {rank}D input, got {x.ndim}D")


def _unbatch(x: np.ndarray, squeeze: bool) -> np.ndarray:
    return x[0] if squeeze else x


def _im2col(
    x4: np.ndarray, kh: int, kw: int, pad: int, stride: int
) -> tuple[np.ndarray, int, int]:
    """Windowed copy of the padded input: (N, OH, OW, C*KH*KW)."""
    xp = np.pad(x4, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    hp, wp = xp.shape[2], xp.shape[3]
    if hp < kh or wp < kw:
        raise DimensionError(f"conv2d: padded input {hp}x{wp} smaller than kernel")
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    n, c, oh, ow = win.shape[:4]
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(
        n, oh, ow, c * kh * kw
    )
    return cols, oh, ow


def _conv_forward_cols(
    x4: np.ndarray, w: np.ndarray, b: np.ndarray, pad: int, stride: int
) -> tuple[np.ndarray, np.ndarray]:
    oc, ic, kh, kw = w.shape
    if x4.shape[1] != ic:
        raise DimensionError(
            f"conv2d: input has {x4.shape[1]} channels, kernel expects {ic}"
        )
    if b.shape != (oc,):
        raise DimensionError(f"conv2d: bias shape {b.shape} != ({oc},)")
    cols, oh, ow = _im2col(x4, kh, kw, pad, stride)
    out = cols @ w.reshape(oc, -1).T + b  # (N, OH, OW, OC)
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2)), cols


def conv2d_forward(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, pad: int = 0, stride: int = 1
) -> np.ndarray:
    """Cross-correlate x (N, C, H, W) with w (OC, C, KH, KW) plus bias (OC,).

    Output is (N, OC, OH, OW) with OH = (H + 2*pad - KH) // stride + 1.
    """
    x4, squeeze = _as_batch(x, 4, "conv2d")
    out, _cols = _conv_forward_cols(x4, w, b, pad, stride)
    return _unbatch(out, squeeze)


def conv2d_backward(
    dout: np.ndarray,
    x: np.ndarray,
    w: np.ndarray,
    pad: int = 0,
    stride: int = 1,
    cols: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv2d_forward: returns (dx, dw, db).

    `cols` may pass the im2col buffer from the forward pass to avoid
    rebuilding it; the result is identical either way.
    """
    x4, squeeze = _as_batch(x, 4, "conv2d")
    dout4, _ = _as_batch(dout, 4, "conv2d")
    oc, ic, kh, kw = w.shape
    oh, ow = dout4.shape[2], dout4.shape[3]
    if cols is None:
        cols, _, _ = _im2col(x4, kh, kw, pad, stride)

    dout_mat = np.ascontiguousarray(dout4.transpose(0, 2, 3, 1)).reshape(-1, oc)
    dw = (dout_mat.T @ cols.reshape(-1, ic * kh * kw)).reshape(w.shape)
    db = dout4.sum(axis=(0, 2, 3))

    # dx: expand dout against the kernel, then scatter-add each tap offset
    g = (dout_mat @ w.reshape(oc, -1)).reshape(len(x4), oh, ow, ic, kh, kw)
    h, wd = x4.shape[2], x4.shape[3]
    dxp = np.zeros((len(x4), ic, h + 2 * pad, wd + 2 * pad))
    for i in range(kh):
        for j in range(kw):
            rows = slice(i, i + stride * (oh - 1) + 1, stride)
            ccols = slice(j, j + stride * (ow - 1) + 1, stride)
            dxp[:, :, rows, ccols] += g[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    dx = dxp[:, :, pad : pad + h, pad : pad + wd]
    return _unbatch(dx, squeeze), dw, db


def maxpool2x2_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 max pooling with stride 2.

    Returns (output, argmax) where argmax holds the flat within-window
    position 0..3 in row-major order ((0,0), (0,1), (1,0), (1,1)); ties go
    to the first position in that order.
    """
    x4, squeeze = _as_batch(x, 4, "maxpool")
    n, c, h, w = x4.shape
    if h % 2 or w % 2:
        raise DimensionError(f"maxpool: spatial size {h}x{w} must be even")
    win = (
        x4.reshape(n, c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h // 2, w // 2, 4)
    )
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return _unbatch(out, squeeze), _unbatch(arg.astype(np.uint8), squeeze)


def maxpool2x2_backward(dout: np.ndarray, argmax: np.ndarray) -> np.ndarray:
    """Route gradients to the stored argmax position of each window."""
    dout4, squeeze = _as_batch(dout, 4, "maxpool")
    arg = np.asarray(argmax)
    if arg.ndim == 3:
        arg = arg[None]
    arg4 = arg.astype(np.intp)
    if dout4.shape != arg4.shape:
        raise DimensionError(
            f"maxpool: gradient shape {dout4.shape} != argmax shape {arg4.shape}"
        )
    n, c, oh, ow = dout4.shape
    dwin = np.zeros((n, c, oh, ow, 4), dtype=np.float64)
    np.put_along_axis(dwin, arg4[..., None], dout4[..., None], axis=-1)
    dx = (
        dwin.reshape(n, c, oh, ow, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, oh * 2, ow * 2)
    )
    return _unbatch(dx, squeeze)


def fc_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map y = W x + b with w (OUT, IN) and b (OUT,)."""
    x2, squeeze = _as_batch(x, 2, "fc")
    if x2.shape[1] != w.shape[1]:
        raise DimensionError(f"fc: input width {x2.shape[1]} != weight in {w.shape[1]}")
    if b.shape != (w.shape[0],):
        raise DimensionError(f"fc: bias shape {b.shape} != ({w.shape[0]},)")
    return _unbatch(x2 @ w.T + b, squeeze)


def fc_backward(
    dout: np.ndarray, x: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x2, squeeze = _as_batch(x, 2, "fc")
    dout2, _ = _as_batch(dout, 2, "fc")
    dx = dout2 @ w
    dw = dout2.T @ x2
    db = dout2.sum(axis=0)
    return _unbatch(dx, squeeze), dw, db


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(dout: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Gradient is 0 at x == 0.
    return np.asarray(dout, dtype=np.float64) * (np.asarray(x) > 0)
