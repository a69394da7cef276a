"""Sequential bit-depth recovery with a trained bundle."""

from __future__ import annotations

import numpy as np

from ..bitcore import Bitplane, ImageTensor, apply_bitplane, low_mask
from ..errors import ContractViolation, InvalidArgument
from .bundle import ModelBundle
from .data import normalized_batch, to_network_input


def as_quantized(img: ImageTensor, q: int) -> ImageTensor:
    """Reinterpret a loaded image as q-bit quantized (its low bits must be zero)."""
    if img.role == "quantized" and img.effective_bits == q:
        return img
    n = img.container_bits
    if not 1 <= q < n:
        raise InvalidArgument(f"q={q} must be in [1, {n})")
    if np.any(img.codes & low_mask(n - q)):
        raise ContractViolation(f"image has nonzero bits below position {n - q}; "
                                f"it is not {q}-bit quantized")
    return ImageTensor(img.codes, n, q, "quantized")


def _predict(net, x):
    out = net.predict(x) if hasattr(net, "predict") else net(x)
    return np.asarray(out)[0].transpose(1, 2, 0)


def recover(img_q: ImageTensor, bundle: ModelBundle, *, binarize=None,
            return_stages=False):
    """Restore ``img_q`` to the bundle's target depth.

    Each network sees the current estimate normalized by ``2**N - 1``; its
    output is thresholded at 0.5 (ties count as 1), weighted by ``2**p`` and
    added to the estimate.  With ``binarize=False`` the raw sigmoid output is
    weighted and accumulated in floating point and the image is rounded only
    at the end.  ``return_stages`` also returns the estimate after each plane.
    """
    rrange = bundle.range
    q, n = rrange.source_bits, rrange.target_bits
    if img_q.container_bits != n:
        raise InvalidArgument(f"image is {img_q.container_bits}-bit, bundle targets {n}")
    if img_q.effective_bits != q or img_q.role != "quantized":
        raise InvalidArgument(
            f"bundle restores {q}-bit input, image has effective_bits "
            f"{img_q.effective_bits} ({img_q.role})")
    if bundle.mode == "single_shot":
        out = single_shot_recover(img_q, bundle.networks[0], rrange)
        return (out, [out]) if return_stages else out

    if binarize is None:
        binarize = bundle.binarize
    stages = []
    if binarize:
        cur = img_q
        for p, net in zip(rrange.plane_indices, bundle.networks):
            pred = _predict(net, to_network_input(cur))
            bits = _plane_decision(pred, cur.codes, p, n, bundle.target)
            cur = apply_bitplane(cur, Bitplane(bits, p))
            stages.append(cur)
        out = cur
    else:
        peak = (1 << n) - 1
        cur = img_q.codes.astype(np.float64)
        for p, net in zip(rrange.plane_indices, bundle.networks):
            pred = _predict(net, normalized_batch(cur, n)).astype(np.float64)
            if bundle.target == "next_image":
                add = np.clip(pred * peak - cur, 0.0, float(1 << p))
            else:
                add = (1 << p) * pred
            cur = cur + add
            stages.append(_materialize(cur, n))
        out = stages[-1]
    return (out, stages) if return_stages else out


def _plane_decision(pred, codes, p, n, target):
    if target == "next_image":
        # The next-depth image is either the current one or that plus 2**p;
        # pick whichever the prediction is closer to.
        gain = pred.astype(np.float64) * ((1 << n) - 1) - codes
        return (gain >= (1 << p) / 2).astype(np.uint8)
    return (pred >= 0.5).astype(np.uint8)


def _materialize(values, n):
    return ImageTensor(np.clip(np.rint(values), 0, (1 << n) - 1).astype(np.uint16), n)


def single_shot_recover(img_q: ImageTensor, net, rrange) -> ImageTensor:
    """Add ``round(prediction * (2**N - 1))``, clamped to ``[0, 2**(N-q) - 1]``."""
    q, n = rrange.source_bits, rrange.target_bits
    if img_q.effective_bits != q:
        raise InvalidArgument(f"model restores {q}-bit input, got {img_q.effective_bits}")
    pred = _predict(net, to_network_input(img_q)).astype(np.float64)
    res = np.clip(np.rint(pred * ((1 << n) - 1)), 0, (1 << (n - q)) - 1)
    return ImageTensor(img_q.codes + res.astype(np.uint16), n)
