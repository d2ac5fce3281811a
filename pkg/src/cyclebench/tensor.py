"""Rank-4 image tensors with an explicit memory layout, plus the
layout-sensitive spatial ops (conv2d, blurpool2d) built on them.

A ``Tensor4`` is semantically (N, C, H, W) regardless of layout; the
layout tag only governs the physical element order of the buffer:
channels-first stores (N, C, H, W), channels-last stores (N, H, W, C).
conv2d keeps a layout-specialized inner path for each order and records
per-call wall clock so the two layouts' throughput can be compared.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Layout(str, Enum):
    CHANNELS_FIRST = "channels_first"
    CHANNELS_LAST = "channels_last"


class ShapeError(ValueError):
    """Raised when tensor or kernel shapes are inconsistent."""


@dataclass
class Tensor4:
    data: np.ndarray
    layout: Layout = Layout.CHANNELS_FIRST

    def __post_init__(self):
        if self.data.ndim != 4:
            raise ShapeError(f"Tensor4 needs a rank-4 buffer, got rank {self.data.ndim}")

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """Semantic (N, C, H, W) independent of physical layout."""
        if self.layout is Layout.CHANNELS_FIRST:
            n, c, h, w = self.data.shape
        else:
            n, h, w, c = self.data.shape
        return n, c, h, w

    def at(self, n: int, c: int, h: int, w: int) -> float:
        """Logical element access; identical result under either layout."""
        if self.layout is Layout.CHANNELS_FIRST:
            return float(self.data[n, c, h, w])
        return float(self.data[n, h, w, c])

    def nchw(self) -> np.ndarray:
        """Logical (N, C, H, W) array (a view when already channels-first)."""
        if self.layout is Layout.CHANNELS_FIRST:
            return self.data
        return self.data.transpose(0, 3, 1, 2)


def to_layout(x: Tensor4, layout: Layout) -> Tensor4:
    """Physically permute the buffer into ``layout``; no-op if already there."""
    if x.layout is layout:
        return x
    if layout is Layout.CHANNELS_LAST:
        buf = np.ascontiguousarray(x.data.transpose(0, 2, 3, 1))
    else:
        buf = np.ascontiguousarray(x.data.transpose(0, 3, 1, 2))
    return Tensor4(buf, layout)


@dataclass
class OpClock:
    """Accumulated wall clock per (op, layout), for throughput reports."""

    calls: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)

    def record(self, key: str, elapsed: float) -> None:
        self.calls[key] = self.calls.get(key, 0) + 1
        self.seconds[key] = self.seconds.get(key, 0.0) + elapsed

    def reset(self) -> None:
        self.calls.clear()
        self.seconds.clear()


conv_clock = OpClock()


def conv2d(x: Tensor4, weights: np.ndarray, stride: int = 1, padding: int = 0) -> Tensor4:
    """2-D cross-correlation with layout-specialized inner loops.

    ``weights`` has shape (C_out, C_in, KH, KW) in either layout; the
    output keeps the input's layout.  Logical results agree between
    layouts to within 64-bit summation reordering.
    """
    n, c, h, w = x.dims
    c_out, c_in, kh, kw = weights.shape
    if c_in != c:
        raise ShapeError(f"kernel expects {c_in} input channels, tensor has {c}")
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise ShapeError("input smaller than kernel")
    if stride < 1:
        raise ShapeError("stride below 1")

    t0 = time.perf_counter()
    if x.layout is Layout.CHANNELS_FIRST:
        buf = x.data
        if padding:
            buf = np.pad(buf, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        win = np.lib.stride_tricks.sliding_window_view(buf, (kh, kw), axis=(2, 3))
        win = win[:, :, ::stride, ::stride]  # (N, C, Ho, Wo, KH, KW)
        out = np.tensordot(win, weights, axes=([1, 4, 5], [1, 2, 3]))  # (N, Ho, Wo, Cout)
        out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))
    else:
        buf = x.data
        if padding:
            buf = np.pad(buf, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
        win = np.lib.stride_tricks.sliding_window_view(buf, (kh, kw), axis=(1, 2))
        win = win[:, ::stride, ::stride]  # (N, Ho, Wo, C, KH, KW)
        out = np.tensordot(win, weights, axes=([3, 4, 5], [1, 2, 3]))  # (N, Ho, Wo, Cout)
        out = np.ascontiguousarray(out)
    conv_clock.record(f"conv2d/{x.layout.value}", time.perf_counter() - t0)
    return Tensor4(out, x.layout)


def conv2d_grads(
    x: Tensor4, weights: np.ndarray, dy: Tensor4, stride: int = 1, padding: int = 0
) -> tuple[Tensor4, np.ndarray]:
    """Gradients of conv2d w.r.t. input and weights given upstream dy.

    Computed in the channels-first domain; layout of the returned input
    gradient matches ``x``.
    """
    xb = x.nchw()
    gy = dy.nchw()
    n, c, h, w = xb.shape
    c_out, c_in, kh, kw = weights.shape
    if padding:
        xb = np.pad(xb, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    hp, wp = xb.shape[2], xb.shape[3]
    ho, wo = gy.shape[2], gy.shape[3]

    win = np.lib.stride_tricks.sliding_window_view(xb, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]  # (N, C, Ho, Wo, KH, KW)
    dw = np.tensordot(gy, win, axes=([0, 2, 3], [0, 2, 3]))  # (Cout, C, KH, KW)

    dxp = np.zeros((n, c, hp, wp))
    # Scatter each kernel tap's contribution back onto the padded input.
    contrib = np.tensordot(gy, weights, axes=([1], [0]))  # (N, Ho, Wo, C, KH, KW)
    for u in range(kh):
        for v in range(kw):
            dxp[:, :, u : u + ho * stride : stride, v : v + wo * stride : stride] += (
                contrib[:, :, :, :, u, v].transpose(0, 3, 1, 2)
            )
    if padding:
        dxp = dxp[:, :, padding:-padding, padding:-padding]
    dx = Tensor4(np.ascontiguousarray(dxp), Layout.CHANNELS_FIRST)
    if x.layout is Layout.CHANNELS_LAST:
        dx = to_layout(dx, Layout.CHANNELS_LAST)
    return dx, dw


def blur_kernel() -> np.ndarray:
    """Normalized 3x3 binomial kernel, outer product of (1, 2, 1)/4."""
    v = np.array([1.0, 2.0, 1.0]) / 4.0
    return np.outer(v, v)


def blurpool2d(x: Tensor4, stride: int = 2) -> Tensor4:
    """Anti-aliased downsampling: binomial blur (reflect padded) then subsample.

    Replaces plain strided subsampling; DC signals pass through unchanged
    because the kernel sums to 1.
    """
    n, c, h, w = x.dims
    k = blur_kernel()
    if stride < 2:
        raise ShapeError("blurpool stride below 2")
    if h < 3 or w < 3:
        raise ShapeError(f"input {h}x{w} smaller than 3x3 blur kernel")
    xb = x.nchw()
    xp = np.pad(xb, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="reflect")
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]
    out = np.tensordot(win, k, axes=([4, 5], [0, 1]))
    out_t = Tensor4(np.ascontiguousarray(out), Layout.CHANNELS_FIRST)
    if x.layout is Layout.CHANNELS_LAST:
        out_t = to_layout(out_t, Layout.CHANNELS_LAST)
    return out_t


def blurpool2d_input_grad(x: Tensor4, dy: Tensor4, stride: int = 2) -> Tensor4:
    """Gradient of blurpool2d w.r.t. its input (the op has no parameters)."""
    n, c, h, w = x.dims
    k = blur_kernel()
    gy = dy.nchw()
    ho, wo = gy.shape[2], gy.shape[3]
    dxp = np.zeros((n, c, h + 2, w + 2))
    for u in range(3):
        for v in range(3):
            dxp[:, :, u : u + ho * stride : stride, v : v + wo * stride : stride] += (
                k[u, v] * gy
            )
    # Fold reflect-padded borders back onto their source rows/columns.
    dx = dxp[:, :, 1:-1, 1:-1].copy()
    dx[:, :, 1, :] += dxp[:, :, 0, 1:-1]
    dx[:, :, -2, :] += dxp[:, :, -1, 1:-1]
    dx[:, :, :, 1] += dxp[:, :, 1:-1, 0]
    dx[:, :, :, -2] += dxp[:, :, 1:-1, -1]
    dx[:, :, 1, 1] += dxp[:, :, 0, 0]
    dx[:, :, 1, -2] += dxp[:, :, 0, -1]
    dx[:, :, -2, 1] += dxp[:, :, -1, 0]
    dx[:, :, -2, -2] += dxp[:, :, -1, -1]
    out = Tensor4(np.ascontiguousarray(dx), Layout.CHANNELS_FIRST)
    if x.layout is Layout.CHANNELS_LAST:
        out = to_layout(out, Layout.CHANNELS_LAST)
    return out
