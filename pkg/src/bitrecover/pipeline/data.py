"""Training pairs, patch tiling and augmentation."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..bitcore import (Bitplane, ImageTensor, RecoveryRange, extract_bitplane,
                       plane_bits, quantize, quantize_codes)
from ..errors import InvalidArgument

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingPair:
    input: ImageTensor
    target: Bitplane | ImageTensor


def make_training_pairs(ground_truth: ImageTensor, k: int, rrange: RecoveryRange,
                        target="bitplane") -> TrainingPair:
    """Input/target pair for step ``k`` (1-based) of ``rrange``.

    The input is the ground truth quantized to ``q + k - 1`` bits.  The target
    is the plane ``N - (q + k)`` of the ground truth, or with
    ``target="next_image"`` the ground truth quantized to ``q + k`` bits.
    """
    if ground_truth.container_bits != rrange.target_bits:
        raise InvalidArgument(f"ground truth is {ground_truth.container_bits}-bit, "
                              f"range targets {rrange.target_bits}")
    p = rrange.plane_for_step(k)
    inp = quantize(ground_truth, rrange.input_bits_for_step(k))
    if target == "bitplane":
        return TrainingPair(inp, extract_bitplane(ground_truth, p))
    if target == "next_image":
        return TrainingPair(inp, quantize(ground_truth, rrange.source_bits + k))
    raise InvalidArgument(f"unknown target {target!r}")


def extract_patches(img: ImageTensor, size: int):
    """Non-overlapping ``size`` x ``size`` tiles from the top-left corner.

    Partial tiles at the right and bottom borders are dropped.
    """
    if size < 1:
        raise InvalidArgument("patch size must be >= 1")
    rows, cols = img.height // size, img.width // size
    if rows == 0 or cols == 0:
        log.warning("image %sx%s is smaller than patch size %s; no patches",
                    img.height, img.width, size)
        return []
    return [img.with_codes(img.codes[r * size:(r + 1) * size, c * size:(c + 1) * size])
            for r in range(rows) for c in range(cols)]


def patch_stack(images, size):
    """All patches of all images as one ``(P, size, size, C)`` code array."""
    tiles = [p.codes for img in images for p in extract_patches(img, size)]
    if not tiles:
        raise InvalidArgument(f"no {size}x{size} patches in the corpus")
    return np.stack(tiles)


def apply_augmentation(codes, hflip=False, vflip=False, rot90=False):
    """Flip / rotate an ``(H, W, C)`` array; rotation is 90 degrees counter-clockwise."""
    out = codes
    if hflip:
        out = out[:, ::-1]
    if vflip:
        out = out[::-1, :]
    if rot90:
        out = np.rot90(out, 1, axes=(0, 1))
    return out


def augment(patch, rng):
    """Random horizontal flip, vertical flip and 90 degree rotation.

    Three independent fair coins are drawn from ``rng``.  Accepts an
    :class:`ImageTensor` or a raw ``(H, W, C)`` array and returns the same kind.
    """
    codes = patch.codes if isinstance(patch, ImageTensor) else np.asarray(patch)
    if codes.shape[0] != codes.shape[1]:
        raise InvalidArgument(f"augmentation needs a square patch, got {codes.shape[:2]}")
    h, v, r = rng.random(3) < 0.5
    out = np.ascontiguousarray(apply_augmentation(codes, h, v, r))
    if isinstance(patch, ImageTensor):
        return patch.with_codes(out)
    return out


def batch_arrays(codes, container_bits, input_bits, plane_index, target):
    """Network input and target for a ``(B, H, W, C)`` batch of ground-truth codes.

    Returns float32 ``(B, C, H, W)`` arrays: the quantized input divided by
    ``2**N - 1`` and either the 0/1 plane, the normalized next-depth image,
    or (``target="residual"``) the normalized residual.
    """
    norm = float((1 << container_bits) - 1)
    inp = quantize_codes(codes, container_bits, input_bits)
    if target == "bitplane":
        tgt = plane_bits(codes, plane_index).astype(np.float32)
    elif target == "next_image":
        tgt = quantize_codes(codes, container_bits, input_bits + 1) / norm
    elif target == "residual":
        tgt = (codes.astype(np.int32) - inp) / norm
    else:
        raise InvalidArgument(f"unknown target {target!r}")
    x = (inp / norm).astype(np.float32).transpose(0, 3, 1, 2)
    y = np.asarray(tgt, dtype=np.float32).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(x), np.ascontiguousarray(y)


def to_network_input(img: ImageTensor):
    """Single image as a normalized ``(1, C, H, W)`` float32 batch."""
    return normalized_batch(img.codes, img.container_bits)


def normalized_batch(codes, container_bits):
    """``(H, W, C)`` codes (integer or float) to a ``(1, C, H, W)`` float32 batch.

    Divides in double precision and then rounds, exactly as training does.
    """
    x = (np.asarray(codes) / float((1 << container_bits) - 1)).astype(np.float32)
    return np.ascontiguousarray(x.transpose(2, 0, 1)[None])
