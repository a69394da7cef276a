"""Losses returning ``(value, grad_wrt_pred)``.

The scalar is accumulated in double precision; the gradient has the dtype
of ``pred``.
"""

import numpy as np

from ..errors import InvalidArgument

BCE_CLAMP = 1e-7


def _check_shapes(pred, target):
    if pred.shape != target.shape:
        raise InvalidArgument(f"shape mismatch: {pred.shape} vs {target.shape}")


def bce_loss(pred, target, clamp=BCE_CLAMP):
    """Mean binary cross entropy against a 0/1 target.

    ``pred`` is clamped to ``[clamp, 1 - clamp]`` before the logarithms, so
    the gradient is zero wherever the clamp is active.
    """
    _check_shapes(pred, target)
    if not np.all((target == 0) | (target == 1)):
        raise InvalidArgument("BCE targets must be 0 or 1")
    n = pred.size
    p = np.clip(pred.astype(np.float64), clamp, 1.0 - clamp)
    t = target.astype(np.float64)
    loss = -np.sum(t * np.log(p) + (1 - t) * np.log1p(-p)) / n
    inside = (pred > clamp) & (pred < 1.0 - clamp)
    grad = np.where(inside, (p - t) / (p * (1 - p)), 0.0) / n
    return float(loss), grad.astype(pred.dtype)


def mse_loss(pred, target):
    _check_shapes(pred, target)
    d = pred.astype(np.float64) - target.astype(np.float64)
    n = pred.size
    return float(np.sum(d * d) / n), (2.0 * d / n).astype(pred.dtype)


LOSSES = {"bce": bce_loss, "mse": mse_loss}
