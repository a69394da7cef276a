"""ResNet-style bitplane predictor.

``Conv(C->64) -> D x ResidualBlock -> BN -> Conv(64->C) -> sigmoid``, where
each residual block is ``Conv -> BN -> ReLU -> Conv -> BN`` plus an additive
skip connection.  With ``head="linear"`` the sigmoid is dropped, which is the
configuration used for the single-shot residual baseline.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument
from .layers import BatchNorm2d, Conv2d, ReLU, Sigmoid

WIDTH = 64
BN_MOMENTUM = 0.9
BN_EPS = 1e-5


class ResidualBlock:
    def __init__(self, width=WIDTH, rng=None, dtype=np.float32,
                 bn_momentum=BN_MOMENTUM, bn_eps=BN_EPS):
        self.conv1 = Conv2d(width, width, rng, dtype)
        self.bn1 = BatchNorm2d(width, bn_momentum, bn_eps, dtype)
        self.relu = ReLU()
        self.conv2 = Conv2d(width, width, rng, dtype)
        self.bn2 = BatchNorm2d(width, bn_momentum, bn_eps, dtype)

    @property
    def layers(self):
        return [("conv1", self.conv1), ("bn1", self.bn1), ("relu", self.relu),
                ("conv2", self.conv2), ("bn2", self.bn2)]

    def forward(self, x):
        y = x
        for _, layer in self.layers:
            y = layer.forward(y)
        return x + y

    def backward(self, grad_out):
        g = grad_out
        for _, layer in reversed(self.layers):
            g = layer.backward(g)
        return g + grad_out


class BitplaneNetwork:
    """Predicts one bitplane from a normalized image.

    Metadata: ``depth`` (D), ``channels``, ``plane_index`` (the plane this
    network predicts, -1 for a whole-residual model), ``input_bits`` (the
    effective depth of its input images), ``container_bits`` (N) and
    ``norm`` (the divisor applied to integer codes, ``2**N - 1``).
    """

    def __init__(self, depth=4, channels=3, *, plane_index=0, input_bits=1,
                 container_bits=8, head="sigmoid", rng=None, dtype=np.float32,
                 width=WIDTH, bn_momentum=BN_MOMENTUM, bn_eps=BN_EPS, extra=None):
        if depth < 1:
            raise InvalidArgument(f"need at least one residual block, got D={depth}")
        if channels not in (1, 3):
            raise InvalidArgument(f"channels must be 1 or 3, got {channels}")
        if head not in ("sigmoid", "linear"):
            raise InvalidArgument(f"head must be 'sigmoid' or 'linear', got {head!r}")
        if rng is None:
            rng = np.random.default_rng(0)
        self.depth = depth
        self.channels = channels
        self.plane_index = plane_index
        self.input_bits = input_bits
        self.container_bits = container_bits
        self.norm = float((1 << container_bits) - 1)
        self.head = head
        self.width = width
        self.bn_momentum = bn_momentum
        self.bn_eps = bn_eps
        self.dtype = np.dtype(dtype)
        self.extra = dict(extra or {})

        self.conv_in = Conv2d(channels, width, rng, dtype)
        self.blocks = [ResidualBlock(width, rng, dtype, bn_momentum, bn_eps)
                       for _ in range(depth)]
        self.bn_out = BatchNorm2d(width, bn_momentum, bn_eps, dtype)
        self.conv_out = Conv2d(width, channels, rng, dtype)
        self.sigmoid = Sigmoid() if head == "sigmoid" else None
        self.training = True

    # -- structure -----------------------------------------------------------

    def named_layers(self):
        yield "conv_in", self.conv_in
        for i, block in enumerate(self.blocks):
            for name, layer in block.layers:
                yield f"blocks.{i}.{name}", layer
        yield "bn_out", self.bn_out
        yield "conv_out", self.conv_out

    def named_parameters(self):
        """Trainable arrays as ``(qualified_name, array)`` in a fixed order."""
        for prefix, layer in self.named_layers():
            for key, arr in layer.params.items():
                yield f"{prefix}.{key}", arr

    def named_buffers(self):
        for prefix, layer in self.named_layers():
            for key, arr in getattr(layer, "buffers", {}).items():
                yield f"{prefix}.{key}", arr

    def named_grads(self):
        for prefix, layer in self.named_layers():
            for key in layer.params:
                yield f"{prefix}.{key}", layer.grads[key]

    def state_dict(self):
        return dict(list(self.named_parameters()) + list(self.named_buffers()))

    def load_state_dict(self, state):
        own = self.state_dict()
        missing = set(own) - set(state)
        unexpected = set(state) - set(own)
        if missing or unexpected:
            raise InvalidArgument(
                f"state mismatch; missing={sorted(missing)} unexpected={sorted(unexpected)}")
        for name, arr in own.items():
            src = np.asarray(state[name])
            if src.shape != arr.shape:
                raise InvalidArgument(f"{name}: shape {src.shape} != {arr.shape}")
            arr[...] = src
        for _, layer in self.named_layers():
            if isinstance(layer, BatchNorm2d):
                layer.updated = True

    def parameter_count(self, include_buffers=False):
        n = sum(a.size for _, a in self.named_parameters())
        if include_buffers:
            n += sum(a.size for _, a in self.named_buffers())
        return n

    def train(self, mode=True):
        self.training = mode
        for _, layer in self.named_layers():
            if isinstance(layer, BatchNorm2d):
                layer.training = mode
        return self

    def eval(self):
        return self.train(False)

    # -- passes --------------------------------------------------------------

    def forward(self, x):
        """Map ``(B, C, H, W)`` normalized input to same-shaped output."""
        x = np.asarray(x)
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise InvalidArgument(
                f"expected (B, {self.channels}, H, W) input, got {x.shape}")
        y = self.conv_in.forward(x.astype(self.dtype, copy=False))
        for block in self.blocks:
            y = block.forward(y)
        y = self.bn_out.forward(y)
        y = self.conv_out.forward(y)
        if self.sigmoid is not None:
            y = self.sigmoid.forward(y)
        return y

    def backward(self, grad_out):
        """Backpropagate; parameter gradients land in each layer's ``grads``."""
        g = grad_out.astype(self.dtype, copy=False)
        if self.sigmoid is not None:
            g = self.sigmoid.backward(g)
        g = self.conv_out.backward(g)
        g = self.bn_out.backward(g)
        for block in reversed(self.blocks):
            g = block.backward(g)
        return self.conv_in.backward(g)

    def predict(self, x):
        """Eval-mode forward pass that leaves the training flag as it was."""
        was_training = self.training
        self.eval()
        try:
            return self.forward(x)
        finally:
            self.train(was_training)

    def metadata(self):
        return {
            "depth": self.depth,
            "channels": self.channels,
            "plane_index": self.plane_index,
            "input_bits": self.input_bits,
            "container_bits": self.container_bits,
            "norm": self.norm,
            "head": self.head,
            "width": self.width,
            "bn_momentum": self.bn_momentum,
            "bn_eps": self.bn_eps,
            "init": "he_normal_fan_in",
            **self.extra,
        }


def network_forward(net: BitplaneNetwork, x):
    return net.forward(x)


def expected_parameter_count(depth, channels=3, width=WIDTH):
    """Trainable parameters of the architecture, from its layer shapes."""
    conv_in = channels * width * 9 + width
    block = 2 * (width * width * 9 + width) + 2 * (2 * width)
    bn_out = 2 * width
    conv_out = width * channels * 9 + channels
    return conv_in + depth * block + bn_out + conv_out
