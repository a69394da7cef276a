"""Closed-form de-quantization baselines: zero padding, ideal gain, bit replication.

Each takes a quantized image (low ``N - q`` bits zero) and returns a full
N-bit image.  All three keep the top q bits of every code.
"""

import numpy as np

from .bitcore import ImageTensor
from .errors import InvalidArgument


def _lbd_codes(img: ImageTensor):
    """The q-bit codes ``c = code >> (N - q)`` and the pair (q, N)."""
    q, n = img.effective_bits, img.container_bits
    if img.role == "residual":
        raise InvalidArgument("baselines take a quantized image, not a residual")
    if q >= n:
        raise InvalidArgument(f"nothing to recover: q={q} equals N={n}")
    return img.codes.astype(np.int64) >> (n - q), q, n


def zero_pad(img: ImageTensor) -> ImageTensor:
    """Keep the padded zeros; reinterpret the codes as full depth."""
    _lbd_codes(img)
    return ImageTensor(img.codes, img.container_bits)


def ideal_gain(img: ImageTensor) -> ImageTensor:
    """Scale c by (2^N - 1)/(2^q - 1), rounding half away from zero.

    Computed in integers: ``floor((2*c*(2^N-1) + (2^q-1)) / (2*(2^q-1)))``,
    which equals round-half-up for the non-negative values involved.
    """
    c, q, n = _lbd_codes(img)
    num, den = (1 << n) - 1, (1 << q) - 1
    out = (2 * c * num + den) // (2 * den)
    return ImageTensor(out, n)


def bit_replicate(img: ImageTensor) -> ImageTensor:
    """Repeat the q-bit code into the N-bit field, truncating the last copy."""
    c, q, n = _lbd_codes(img)
    out = np.zeros_like(c)
    shift = n - q
    while shift > -q:
        out |= c << shift if shift >= 0 else c >> -shift
        shift -= q
    return ImageTensor(out, n)


METHODS = {"zp": zero_pad, "mig": ideal_gain, "br": bit_replicate}


def apply_baseline(name, img):
    try:
        fn = METHODS[name]
    except KeyError:
        raise InvalidArgument(
            f"unknown baseline {name!r}; expected one of {sorted(METHODS)}") from None
    return fn(img)
