"""Exact integer algebra for quantization, residuals and bitplanes.

Images are stored as ``uint16`` arrays of shape ``(height, width, channels)``
regardless of their container depth; the depth is carried as metadata.  The
functions ending in ``_codes`` work directly on raw integer arrays and are
what the training pipeline uses on whole batches.  The rest operate on
:class:`ImageTensor` / :class:`Bitplane` and check their contracts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, InvalidArgument

MAX_BITS = 16
CODE_DTYPE = np.uint16
ROLES = ("full", "quantized", "residual")


@dataclass(frozen=True, eq=False)
class ImageTensor:
    """Integer-coded raster with container depth N and effective depth q.

    ``role`` is one of ``"full"``, ``"quantized"`` or ``"residual"``.  For a
    residual image ``effective_bits`` holds the depth q of the quantized
    image it pairs with, so its codes are bounded by ``2**(N - q)``.
    """

    codes: np.ndarray
    container_bits: int
    effective_bits: int | None = None
    role: str = "full"

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.ndim == 2:
            codes = codes[:, :, None]
        if codes.ndim != 3 or codes.shape[2] not in (1, 3):
            raise InvalidArgument(
                f"codes must have shape (H, W) or (H, W, 1|3), got {codes.shape}")
        if codes.size and (not np.issubdtype(codes.dtype, np.integer)
                           and not np.all(np.mod(codes, 1) == 0)):
            raise InvalidArgument("codes must be integers")
        n = int(self.container_bits)
        if not 2 <= n <= MAX_BITS:
            raise InvalidArgument(f"container_bits must be in [2, 16], got {n}")
        if codes.size and (codes.min() < 0 or codes.max() >= 1 << n):
            raise InvalidArgument(f"codes out of range for {n}-bit container")
        codes = codes.astype(CODE_DTYPE, copy=True)
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "container_bits", n)

        q = n if self.effective_bits is None else int(self.effective_bits)
        object.__setattr__(self, "effective_bits", q)
        if self.role not in ROLES:
            raise InvalidArgument(f"role must be one of {ROLES}, got {self.role!r}")
        if not 0 <= q <= n:
            raise InvalidArgument(f"effective_bits {q} outside [0, {n}]")
        if self.role == "full" and q != n:
            raise InvalidArgument("a full image has effective_bits == container_bits")
        if self.role == "quantized" and np.any(codes & low_mask(n - q)):
            raise ContractViolation(
                f"quantized image has nonzero bits below position {n - q}")
        if self.role == "residual" and codes.size and codes.max() >= 1 << (n - q):
            raise ContractViolation(f"residual code exceeds 2**{n - q}")

    @property
    def shape(self):
        return self.codes.shape

    @property
    def height(self):
        return self.codes.shape[0]

    @property
    def width(self):
        return self.codes.shape[1]

    @property
    def channels(self):
        return self.codes.shape[2]

    @property
    def peak(self):
        return (1 << self.container_bits) - 1

    def with_codes(self, codes, **changes):
        """Copy of this image with new codes and optionally new metadata."""
        kw = dict(container_bits=self.container_bits,
                  effective_bits=self.effective_bits, role=self.role)
        kw.update(changes)
        return ImageTensor(codes, **kw)

    def __eq__(self, other):
        if not isinstance(other, ImageTensor):
            return NotImplemented
        return (self.container_bits == other.container_bits
                and self.effective_bits == other.effective_bits
                and self.role == other.role
                and self.codes.shape == other.codes.shape
                and bool(np.array_equal(self.codes, other.codes)))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Bitplane:
    """Binary raster holding the bit at significance ``plane_index``."""

    bits: np.ndarray
    plane_index: int

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim == 2:
            bits = bits[:, :, None]
        if bits.ndim != 3:
            raise InvalidArgument(f"bits must be 2-D or 3-D, got shape {bits.shape}")
        if bits.size and not np.all((bits == 0) | (bits == 1)):
            raise InvalidArgument("bitplane entries must be 0 or 1")
        if not 0 <= int(self.plane_index) < MAX_BITS:
            raise InvalidArgument(f"plane_index {self.plane_index} outside [0, 16)")
        bits = bits.astype(np.uint8, copy=True)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "plane_index", int(self.plane_index))

    @property
    def shape(self):
        return self.bits.shape

    def __eq__(self, other):
        if not isinstance(other, Bitplane):
            return NotImplemented
        return (self.plane_index == other.plane_index
                and self.bits.shape == other.bits.shape
                and bool(np.array_equal(self.bits, other.bits)))

    __hash__ = None


@dataclass(frozen=True)
class RecoveryRange:
    """Restore ``source_bits`` (q) to ``target_bits`` (N).

    ``plane_indices`` lists the lost planes most significant first:
    ``[N-(q+1), ..., 0]``.  Step ``k`` (1-based) recovers
    ``plane_indices[k-1]`` from an image with ``q + k - 1`` effective bits.
    """

    source_bits: int
    target_bits: int
    plane_indices: tuple = field(init=False)

    def __post_init__(self):
        q, n = int(self.source_bits), int(self.target_bits)
        if not 1 <= q < n <= MAX_BITS:
            raise InvalidArgument(f"need 1 <= q < N <= 16, got q={q}, N={n}")
        object.__setattr__(self, "source_bits", q)
        object.__setattr__(self, "target_bits", n)
        object.__setattr__(self, "plane_indices", tuple(range(n - q - 1, -1, -1)))

    @property
    def steps(self):
        return self.target_bits - self.source_bits

    def plane_for_step(self, k):
        if not 1 <= k <= self.steps:
            raise InvalidArgument(f"step k={k} outside [1, {self.steps}]")
        return self.target_bits - (self.source_bits + k)

    def input_bits_for_step(self, k):
        if not 1 <= k <= self.steps:
            raise InvalidArgument(f"step k={k} outside [1, {self.steps}]")
        return self.source_bits + k - 1


def low_mask(nbits):
    """Integer with the ``nbits`` least significant bits set."""
    return (1 << nbits) - 1


# -- raw array helpers -------------------------------------------------------

def quantize_codes(codes, container_bits, bits):
    """Zero the low ``container_bits - bits`` bits of every code.

    Implements ``floor(code / 2**(N-q)) * 2**(N-q)`` with integer shifts.
    """
    shift = container_bits - bits
    codes = np.asarray(codes)
    return ((codes >> shift) << shift).astype(codes.dtype, copy=False)


def plane_bits(codes, plane_index):
    return ((np.asarray(codes) >> plane_index) & 1).astype(np.uint8)


# -- contract-checked operations ---------------------------------------------

def quantize(img: ImageTensor, q: int) -> ImageTensor:
    """Quantize ``img`` to ``q`` bits, keeping the N-bit container."""
    n = img.container_bits
    if not 1 <= q <= n:
        raise InvalidArgument(f"q={q} outside [1, {n}]")
    if img.role == "residual":
        raise InvalidArgument("cannot quantize a residual image")
    # Re-quantizing an image above its effective depth leaves the codes as they
    # are; the resulting depth is the smaller of the two.
    eff = min(q, img.effective_bits)
    return ImageTensor(quantize_codes(img.codes, n, q), n, eff, "quantized")


def residual(original: ImageTensor, quantized: ImageTensor) -> ImageTensor:
    """``original - quantized`` for a matching quantization pair."""
    _check_same_geometry(original, quantized)
    q = quantized.effective_bits
    diff = original.codes.astype(np.int32) - quantized.codes.astype(np.int32)
    if np.any(diff < 0):
        raise ContractViolation("quantized image exceeds the original somewhere")
    if not np.array_equal(quantize_codes(original.codes, original.container_bits, q),
                          quantized.codes):
        raise ContractViolation(f"inputs are not a q={q} quantization pair")
    return ImageTensor(diff, original.container_bits, q, "residual")


def extract_bitplane(img: ImageTensor, p: int) -> Bitplane:
    if not 0 <= p < img.container_bits:
        raise InvalidArgument(f"plane index {p} outside [0, {img.container_bits})")
    return Bitplane(plane_bits(img.codes, p), p)


def compose_bitplanes(planes: Iterable[Bitplane], container_bits: int, *,
                      shape: Sequence[int] | None = None,
                      infer_effective_bits: bool = False) -> ImageTensor:
    """Sum ``2**p * bits`` over the given planes into an N-bit image.

    Missing planes contribute zero.  ``shape`` is needed only when ``planes``
    is empty.  With ``infer_effective_bits`` the effective depth is N minus
    the number of consecutive absent or all-zero planes counting up from
    plane 0, and the result is marked quantized when that is below N.
    """
    planes = list(planes)
    n = int(container_bits)
    if not 2 <= n <= MAX_BITS:
        raise InvalidArgument(f"container_bits must be in [2, 16], got {n}")
    seen = set()
    for plane in planes:
        if plane.plane_index in seen:
            raise InvalidArgument(f"duplicate plane_index {plane.plane_index}")
        if plane.plane_index >= n:
            raise InvalidArgument(f"plane_index {plane.plane_index} >= N={n}")
        seen.add(plane.plane_index)
    if planes:
        shp = planes[0].shape
        if any(pl.shape != shp for pl in planes):
            raise InvalidArgument("bitplanes differ in shape")
    elif shape is None:
        raise InvalidArgument("shape is required when no planes are given")
    else:
        shp = tuple(shape) if len(shape) == 3 else (*shape, 1)

    codes = np.zeros(shp, dtype=np.uint32)
    for plane in planes:
        codes += plane.bits.astype(np.uint32) << plane.plane_index

    if not infer_effective_bits:
        return ImageTensor(codes, n)
    nonzero = {pl.plane_index for pl in planes if pl.bits.any()}
    trailing = 0
    while trailing < n and trailing not in nonzero:
        trailing += 1
    eff = n - trailing
    return ImageTensor(codes, n, eff, "full" if eff == n else "quantized")


def apply_bitplane(img: ImageTensor, plane: Bitplane) -> ImageTensor:
    """Add the next missing plane to ``img``, raising its depth by one bit."""
    n = img.container_bits
    if img.role == "residual":
        raise InvalidArgument("cannot apply a bitplane to a residual image")
    expected = n - (img.effective_bits + 1)
    if plane.plane_index != expected:
        raise InvalidArgument(
            f"next missing plane is {expected}, got plane_index {plane.plane_index}")
    if plane.shape != img.shape:
        raise InvalidArgument(f"bitplane shape {plane.shape} != image shape {img.shape}")
    p = plane.plane_index
    if np.any(plane_bits(img.codes, p)):
        raise ContractViolation(f"bit {p} is already set in the input image")
    codes = img.codes + (plane.bits.astype(CODE_DTYPE) << p)
    eff = img.effective_bits + 1
    return ImageTensor(codes, n, eff, "full" if eff == n else "quantized")


def _check_same_geometry(a: ImageTensor, b: ImageTensor):
    if a.shape != b.shape:
        raise InvalidArgument(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.container_bits != b.container_bits:
        raise InvalidArgument(
            f"container depth mismatch: {a.container_bits} vs {b.container_bits}")
