"""
Classical de-quantization
=========================

Zero padding, ideal gain and bit replication on an 8-bit ramp reduced to
3 bits.
"""

import numpy as np

from bitrecover import ImageTensor, psnr, quantize, ssim
from bitrecover.baselines import bit_replicate, ideal_gain, zero_pad

# a horizontal ramp that visits every 8-bit code
ramp = np.tile(np.arange(256), (16, 1))
img = ImageTensor(ramp, 8)

low = quantize(img, 3)

# the three baselines only differ in how they fill the 5 missing bits
for name, fn in [("zp", zero_pad), ("mig", ideal_gain), ("br", bit_replicate)]:
    out = fn(low)
    print(f"{name:4s} psnr={psnr(out, img):6.2f} dB  ssim={ssim(out, img):.4f}  "
          f"top code={out.codes.max()}")

# code 0b101 -> 0b10110110 by replication, round(5*255/7) by gain
c = ImageTensor(np.array([[0b101 << 5]]), 8, 3, "quantized")
print(bit_replicate(c).codes.item(), ideal_gain(c).codes.item())

# at N == 2q the two are the same map
c = ImageTensor(np.arange(16).reshape(1, -1) << 4, 8, 4, "quantized")
print(np.array_equal(ideal_gain(c).codes, bit_replicate(c).codes))
