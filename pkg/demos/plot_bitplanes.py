"""
Bitplanes of a quantized image
==============================

Quantize a 16-bit synthetic image, split off the residual, and rebuild it
one bitplane at a time.
"""

import numpy as np

from bitrecover import (apply_bitplane, compose_bitplanes, extract_bitplane,
                        quantize, residual)
from bitrecover.dataio import generate_synthetic

# one smooth 16-bit image, 64x64 RGB
(img,) = generate_synthetic(1, 64, 16, seed=3)
print(img.shape, img.container_bits, img.codes.min(), img.codes.max())

# keep the top 6 bits; the other 10 are zero padded
low = quantize(img, 6)
print("distinct codes:", len(np.unique(img.codes)), "->", len(np.unique(low.codes)))

# the residual is exactly the sum of the lost planes
res = residual(img, low)
lost = [extract_bitplane(img, p) for p in range(10)]
assert compose_bitplanes(lost, 16).codes.tolist() == res.codes.tolist()

# fraction of ones per plane: high planes follow the image, low ones look like noise
for p in range(15, -1, -1):
    print(f"plane {p:2d}  ones={extract_bitplane(img, p).bits.mean():.3f}")

# put the planes back, most significant first
cur = low
for plane in reversed(lost):
    cur = apply_bitplane(cur, plane)
    print("effective bits", cur.effective_bits)
assert cur == img
