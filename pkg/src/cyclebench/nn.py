"""Tiny dense and convolutional networks with exact analytic gradients.

Layers follow a functional contract: ``forward(x) -> (y, cache)`` and
``backward(cache, dy) -> (dx, param_grads)``, with all math in 64-bit
floats so gradient checks against finite differences are sharp.
Convolutional activations travel as :class:`Tensor4` and respect the
tensor's memory layout end to end.
"""

from __future__ import annotations

import numpy as np

from .methods import one_hot
from .tensor import (
    Layout,
    ShapeError,
    Tensor4,
    blurpool2d,
    blurpool2d_input_grad,
    conv2d,
    conv2d_grads,
)


class NumericError(ArithmeticError):
    """Raised when a layer produces non-finite activations."""


def _raw(x):
    return x.data if isinstance(x, Tensor4) else x


class Dense:
    """Affine layer on (N, d_in) -> (N, d_out)."""

    def __init__(self, w: np.ndarray, b: np.ndarray):
        self.w = w
        self.b = b

    @property
    def params(self):
        return {"w": self.w, "b": self.b}

    def forward(self, x):
        return x @ self.w + self.b, x

    def backward(self, cache, dy):
        x = cache
        return dy @ self.w.T, {"w": x.T @ dy, "b": dy.sum(axis=0)}


class ReLU:
    params: dict = {}

    def forward(self, x):
        arr = _raw(x)
        mask = arr > 0
        y = arr * mask
        if isinstance(x, Tensor4):
            return Tensor4(y, x.layout), mask
        return y, mask

    def backward(self, cache, dy):
        mask = cache
        g = _raw(dy) * mask
        if isinstance(dy, Tensor4):
            return Tensor4(g, dy.layout), {}
        return g, {}


class Conv:
    """3x3-style convolution with bias; stride and zero padding configurable."""

    def __init__(self, w: np.ndarray, b: np.ndarray, stride: int = 1, padding: int = 1):
        self.w = w  # (C_out, C_in, KH, KW)
        self.b = b  # (C_out,)
        self.stride = stride
        self.padding = padding

    @property
    def params(self):
        return {"w": self.w, "b": self.b}

    def forward(self, x: Tensor4):
        y = conv2d(x, self.w, stride=self.stride, padding=self.padding)
        if y.layout is Layout.CHANNELS_FIRST:
            out = y.data + self.b[None, :, None, None]
        else:
            out = y.data + self.b[None, None, None, :]
        return Tensor4(out, y.layout), x

    def backward(self, cache, dy: Tensor4):
        x = cache
        gy = dy.nchw()
        db = gy.sum(axis=(0, 2, 3))
        dx, dw = conv2d_grads(x, self.w, dy, stride=self.stride, padding=self.padding)
        return dx, {"w": dw, "b": db}


class BlurPoolDown:
    """Parameter-free anti-aliased downsampling stage."""

    params: dict = {}

    def __init__(self, stride: int = 2):
        self.stride = stride

    def forward(self, x: Tensor4):
        return blurpool2d(x, stride=self.stride), x

    def backward(self, cache, dy: Tensor4):
        return blurpool2d_input_grad(cache, dy, stride=self.stride), {}


class GlobalAvgPool:
    """Tensor4 -> (N, C) by averaging over the spatial extent."""

    params: dict = {}

    def forward(self, x: Tensor4):
        n, c, h, w = x.dims
        if x.layout is Layout.CHANNELS_FIRST:
            y = x.data.mean(axis=(2, 3))
        else:
            y = x.data.mean(axis=(1, 2))
        return y, (x.layout, x.dims)

    def backward(self, cache, dy):
        layout, (n, c, h, w) = cache
        scale = 1.0 / (h * w)
        if layout is Layout.CHANNELS_FIRST:
            g = np.broadcast_to(dy[:, :, None, None] * scale, (n, c, h, w)).copy()
        else:
            g = np.broadcast_to(dy[:, None, None, :] * scale, (n, h, w, c)).copy()
        return Tensor4(g, layout), {}


class Model:
    """An ordered stack of layers ending in class logits."""

    def __init__(self, layers: list, n_classes: int):
        self.layers = layers
        self.n_classes = n_classes

    def forward(self, x):
        caches = []
        # overflow is reported via NumericError, not numpy warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for i, layer in enumerate(self.layers):
                x, cache = layer.forward(x)
                arr = _raw(x)
                if not np.all(np.isfinite(arr)):
                    raise NumericError(
                        f"non-finite activations after layer {i} ({type(layer).__name__})"
                    )
                caches.append(cache)
        return x, caches

    def backward(self, caches, dlogits):
        grads = [None] * len(self.layers)
        dy = dlogits
        for i in range(len(self.layers) - 1, -1, -1):
            dy, g = self.layers[i].backward(caches[i], dy)
            grads[i] = g
        return grads

    def param_arrays(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            for key in sorted(layer.params):
                out.append(layer.params[key])
        return out

    def grad_arrays(self, grads) -> list[np.ndarray]:
        out = []
        for layer, g in zip(self.layers, grads):
            for key in sorted(layer.params):
                out.append(g[key])
        return out

    def predict(self, x) -> np.ndarray:
        logits, _ = self.forward(x)
        return np.argmax(logits, axis=1)


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy against per-sample target distributions.

    Returns (loss, dloss/dlogits); the gradient already carries the 1/N
    batch-mean factor.
    """
    if logits.shape != targets.shape:
        raise ShapeError(f"logits {logits.shape} vs targets {targets.shape}")
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    loss = float(-(targets * log_probs).sum() / n)
    dlogits = (np.exp(log_probs) - targets) / n
    return loss, dlogits


def forward_backward(model: Model, inputs, targets):
    """Loss and exact parameter gradients for one batch.

    ``targets`` is either an integer label vector or an (N, k) target
    distribution (smoothed and/or mixed rows).
    """
    loss, grads, _ = forward_backward_logits(model, inputs, targets)
    return loss, grads


def forward_backward_logits(model: Model, inputs, targets):
    targets = np.asarray(targets)
    if targets.ndim == 1:
        targets = one_hot(targets, model.n_classes)
    n_in = _raw(inputs).shape[0]
    if targets.shape[0] != n_in:
        raise ShapeError(f"batch of {n_in} inputs but {targets.shape[0]} target rows")
    logits, caches = model.forward(inputs)
    loss, dlogits = softmax_cross_entropy(logits, targets)
    grads = model.backward(caches, dlogits)
    return loss, grads, logits


def build_mlp(widths, rng: np.random.Generator) -> Model:
    """ReLU MLP over the full width chain [d_in, hidden..., n_classes]."""
    if len(widths) < 3:
        raise ValueError("MLP needs at least one hidden layer")
    layers = []
    for i in range(len(widths) - 1):
        d_in, d_out = widths[i], widths[i + 1]
        last = i == len(widths) - 2
        # near-zero classifier head keeps the initial loss at ~ln(k)
        # regardless of the input scale
        scale = 0.01 if last else np.sqrt(2.0 / d_in)
        w = rng.standard_normal((d_in, d_out)) * scale
        layers.append(Dense(w, np.zeros(d_out)))
        if not last:
            layers.append(ReLU())
    return Model(layers, n_classes=widths[-1])


def build_tiny_cnn(
    in_channels: int,
    channels,
    n_classes: int,
    downsample: str,
    rng: np.random.Generator,
) -> Model:
    """Small conv net: one downsampling block per channel width, then
    global average pooling into a linear classifier.

    ``downsample`` picks the mechanism: "stride" uses stride-2 convs,
    "blurpool" uses stride-1 convs followed by anti-aliased pooling.
    """
    if downsample not in ("stride", "blurpool"):
        raise ValueError(f"unknown downsample {downsample!r}")
    if not channels:
        raise ValueError("TinyCNN needs at least one conv block")
    layers: list = []
    c_prev = in_channels
    for c in channels:
        w = rng.standard_normal((c, c_prev, 3, 3)) * np.sqrt(2.0 / (c_prev * 9))
        if downsample == "stride":
            layers.append(Conv(w, np.zeros(c), stride=2, padding=1))
            layers.append(ReLU())
        else:
            layers.append(Conv(w, np.zeros(c), stride=1, padding=1))
            layers.append(ReLU())
            layers.append(BlurPoolDown(stride=2))
        c_prev = c
    layers.append(GlobalAvgPool())
    w = rng.standard_normal((c_prev, n_classes)) * 0.01
    layers.append(Dense(w, np.zeros(n_classes)))
    return Model(layers, n_classes=n_classes)
