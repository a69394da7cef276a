"""Bit-depth recovery by predicting lost bitplanes one at a time."""

from .baselines import bit_replicate, ideal_gain, zero_pad
from .bitcore import (Bitplane, ImageTensor, RecoveryRange, apply_bitplane,
                      compose_bitplanes, extract_bitplane, quantize, residual)
from .errors import ContractViolation, FormatError, InvalidArgument
from .metrics import MetricsReport, mse, psnr, ssim

__version__ = "0.1.0"

__all__ = [
    "bit_replicate", "ideal_gain", "zero_pad", "Bitplane", "ImageTensor",
    "RecoveryRange", "apply_bitplane", "compose_bitplanes", "extract_bitplane",
    "quantize", "residual", "ContractViolation", "FormatError", "InvalidArgument",
    "MetricsReport", "mse", "psnr", "ssim",
]
