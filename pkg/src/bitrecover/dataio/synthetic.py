"""Deterministic smooth test images.

Each image mixes a linear ramp, a few low-frequency sinusoids and soft
Gaussian blobs, with per-channel weights so colour channels differ.  The
mixture is centred near mid-range with a contrast drawn per image between
about 9% and 70% of the code range.
"""

from __future__ import annotations

import numpy as np

from ..bitcore import ImageTensor
from ..errors import InvalidArgument


def _smooth_field(rng, size, channels):
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    fields = []
    theta = rng.uniform(0, 2 * np.pi)
    ramp = np.cos(theta) * xx + np.sin(theta) * yy
    fields.append(ramp - ramp.mean())
    for _ in range(rng.integers(1, 4)):
        fx, fy = rng.uniform(-2.5, 2.5, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        fields.append(np.sin(2 * np.pi * (fx * xx + fy * yy) + phase))
    for _ in range(rng.integers(1, 5)):
        cx, cy = rng.uniform(0, 1, size=2)
        s = rng.uniform(0.08, 0.35)
        fields.append(np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * s * s)) - 0.5)
    fields = np.stack(fields)

    out = np.empty((size, size, channels))
    # Log-uniform contrast: steep images exercise the high planes, gentle
    # ones leave the low planes spatially coherent.
    amplitude = 0.35 * 2.0 ** rng.uniform(-3, 0)
    shared = rng.standard_normal(len(fields))
    for c in range(channels):
        w = shared + 0.5 * rng.standard_normal(len(fields))
        mix = np.tensordot(w, fields, axes=1)
        mix -= mix.mean()
        span = np.abs(mix).max()
        amp = amplitude
        center = 0.5 + rng.uniform(-0.1, 0.1)
        out[..., c] = center + amp * mix / (span if span > 0 else 1.0)
    return np.clip(out, 0.0, 1.0)


def generate_synthetic(count, size, bits, seed=0, channels=3):
    """``count`` square images of side ``size`` at ``bits`` depth."""
    if not 2 <= bits <= 16:
        raise InvalidArgument(f"bits must be in [2, 16], got {bits}")
    if channels not in (1, 3):
        raise InvalidArgument("channels must be 1 or 3")
    if count < 0 or size < 1:
        raise InvalidArgument("count must be >= 0 and size >= 1")
    peak = (1 << bits) - 1
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]
    return [ImageTensor(np.rint(_smooth_field(r, size, channels) * peak).astype(np.uint16),
                        bits) for r in rngs]


def plane_coverage(images, bits):
    """For each plane index, whether both 0 and 1 occur across ``images``."""
    seen0 = np.zeros(bits, bool)
    seen1 = np.zeros(bits, bool)
    for img in images:
        for p in range(bits):
            b = (img.codes >> p) & 1
            seen1[p] |= bool(b.any())
            seen0[p] |= bool((b == 0).any())
    return seen0 & seen1
