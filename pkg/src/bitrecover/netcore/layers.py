"""Layers with explicit forward and backward passes.

Tensors are ``(batch, channels, height, width)``.  Every layer caches what
its backward pass needs during ``forward``; ``backward(grad_out)`` returns the
gradient with respect to the layer input and stores parameter gradients in
``self.grads`` under the same keys as ``self.params``.
"""

import logging

import numpy as np
from scipy.special import expit

from ..errors import InvalidArgument

log = logging.getLogger(__name__)

KERNEL = 3


def _shifted_columns(xp, h, w):
    """im2col for a 3x3 window over a padded channels-last batch.

    ``xp`` is ``(B, h+2, w+2, C)``; the result is ``(B*h*w, 9*C)`` with
    column index ``(i*3 + j)*C + c`` for kernel tap ``(i, j)``.
    """
    b, c = xp.shape[0], xp.shape[3]
    cols = np.concatenate(
        [xp[:, i:i + h, j:j + w, :] for i in range(KERNEL) for j in range(KERNEL)],
        axis=-1)
    return cols.reshape(b * h * w, KERNEL * KERNEL * c)


def _pad_channels_last(x):
    b, c, h, w = x.shape
    xp = np.zeros((b, h + 2, w + 2, c), dtype=x.dtype)
    xp[:, 1:-1, 1:-1, :] = x.transpose(0, 2, 3, 1)
    return xp


def _weight_matrix(weight):
    # (out, in, 3, 3) -> (9*in, out), matching the column order above.
    o, i = weight.shape[:2]
    return weight.transpose(2, 3, 1, 0).reshape(KERNEL * KERNEL * i, o)


def correlate3x3(x, weight, bias=None):
    """Zero-padded 3x3 cross-correlation, stride 1; returns output and columns."""
    b, c, h, w = x.shape
    cols = _shifted_columns(_pad_channels_last(x), h, w)
    out = cols @ _weight_matrix(weight)
    if bias is not None:
        out += bias
    out = out.reshape(b, h, w, weight.shape[0]).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(out), cols


class Conv2d:
    """3x3 convolution with padding 1 (cross-correlation, no kernel flip)."""

    def __init__(self, in_channels, out_channels, rng=None, dtype=np.float32):
        self.in_channels = in_channels
        self.out_channels = out_channels
        fan_in = in_channels * KERNEL * KERNEL
        if rng is None:
            weight = np.zeros((out_channels, in_channels, KERNEL, KERNEL))
        else:
            # He-normal initialization on fan-in.
            weight = rng.standard_normal((out_channels, in_channels, KERNEL, KERNEL))
            weight *= np.sqrt(2.0 / fan_in)
        self.params = {
            "weight": weight.astype(dtype),
            "bias": np.zeros(out_channels, dtype=dtype),
        }
        self.grads = {}
        self._cache = None

    def forward(self, x):
        if x.shape[1] != self.in_channels:
            raise InvalidArgument(
                f"conv expects {self.in_channels} input channels, got {x.shape[1]}")
        out, cols = correlate3x3(x, self.params["weight"], self.params["bias"])
        self._cache = (x.shape, cols)
        return out

    def backward(self, grad_out):
        shape, cols = self._cache
        b, c, h, w = shape
        weight = self.params["weight"]
        g2 = grad_out.transpose(0, 2, 3, 1).reshape(b * h * w, self.out_channels)
        gw = cols.T @ g2
        self.grads["weight"] = np.ascontiguousarray(
            gw.reshape(KERNEL, KERNEL, c, self.out_channels).transpose(3, 2, 0, 1))
        self.grads["bias"] = g2.sum(axis=0)
        # Input gradient: correlate the padded output gradient with the
        # spatially flipped, channel-transposed kernel.
        flipped = weight.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1]
        grad_in, _ = correlate3x3(grad_out, np.ascontiguousarray(flipped))
        return grad_in


class BatchNorm2d:
    """Per-channel batch normalization.

    In train mode the batch statistics normalize the input and the running
    statistics follow ``running = momentum*running + (1-momentum)*batch``
    (the running variance uses the unbiased batch variance).  Eval mode
    normalizes with the running statistics.
    """

    def __init__(self, channels, momentum=0.9, eps=1e-5, dtype=np.float32):
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.training = True
        self.params = {
            "gamma": np.ones(channels, dtype=dtype),
            "beta": np.zeros(channels, dtype=dtype),
        }
        self.buffers = {
            "running_mean": np.zeros(channels, dtype=dtype),
            "running_var": np.ones(channels, dtype=dtype),
        }
        self.updated = False
        self.grads = {}
        self._cache = None

    def forward(self, x):
        if x.shape[1] != self.channels:
            raise InvalidArgument(
                f"batch norm expects {self.channels} channels, got {x.shape[1]}")
        gamma = self.params["gamma"][None, :, None, None]
        beta = self.params["beta"][None, :, None, None]
        if self.training:
            n = x.shape[0] * x.shape[2] * x.shape[3]
            mean = x.mean(axis=(0, 2, 3))
            centered = x - mean[None, :, None, None]
            var = (centered * centered).mean(axis=(0, 2, 3))
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = centered * inv_std[None, :, None, None]
            m = self.momentum
            rm, rv = self.buffers["running_mean"], self.buffers["running_var"]
            unbiased = var * (n / (n - 1)) if n > 1 else var
            rm[...] = m * rm + (1 - m) * mean
            rv[...] = m * rv + (1 - m) * unbiased
            self.updated = True
            self._cache = ("train", xhat, inv_std)
        else:
            if not self.updated:
                log.debug("batch norm in eval mode with initial running statistics")
            inv_std = 1.0 / np.sqrt(self.buffers["running_var"] + self.eps)
            xhat = (x - self.buffers["running_mean"][None, :, None, None]) \
                * inv_std[None, :, None, None]
            self._cache = ("eval", xhat, inv_std)
        return gamma * xhat + beta

    def backward(self, grad_out):
        mode, xhat, inv_std = self._cache
        gamma = self.params["gamma"]
        self.grads["gamma"] = (grad_out * xhat).sum(axis=(0, 2, 3))
        self.grads["beta"] = grad_out.sum(axis=(0, 2, 3))
        scale = (gamma * inv_std)[None, :, None, None]
        if mode == "eval":
            return grad_out * scale
        n = xhat.shape[0] * xhat.shape[2] * xhat.shape[3]
        mean_g = self.grads["beta"][None, :, None, None] / n
        mean_gx = self.grads["gamma"][None, :, None, None] / n
        return scale * (grad_out - mean_g - xhat * mean_gx)


class ReLU:
    params = {}
    grads = {}

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0).astype(x.dtype, copy=False)

    def backward(self, grad_out):
        return np.where(self._mask, grad_out, 0).astype(grad_out.dtype, copy=False)


class Sigmoid:
    params = {}
    grads = {}

    def forward(self, x):
        self._out = expit(x)
        return self._out

    def backward(self, grad_out):
        s = self._out
        return grad_out * s * (1 - s)


def relu(x):
    return np.maximum(x, 0)


def sigmoid(x):
    return expit(x)
