"""Fidelity metrics (MSE, PSNR, SSIM) and the evaluation report container."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .bitcore import ImageTensor
from .errors import InvalidArgument

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
INF_SENTINEL = "inf"


def _check_pair(a: ImageTensor, b: ImageTensor):
    if a.shape != b.shape:
        raise InvalidArgument(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.container_bits != b.container_bits:
        raise InvalidArgument(
            f"container depth mismatch: {a.container_bits} vs {b.container_bits}")


def mse(a: ImageTensor, b: ImageTensor) -> float:
    _check_pair(a, b)
    d = a.codes.astype(np.float64) - b.codes.astype(np.float64)
    return float(np.mean(d * d))


def psnr(a: ImageTensor, b: ImageTensor) -> float:
    """PSNR in dB with peak ``2**N - 1``; ``math.inf`` for identical images."""
    err = mse(a, b)
    if err == 0:
        return math.inf
    peak = float(a.peak)
    return 10.0 * math.log10(peak * peak / err)


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    """Normalized 1-D Gaussian taps; the 2-D window is their outer product."""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(x, taps):
    # Separable filtering, then crop to windows that lie fully inside the image.
    r = len(taps) // 2
    y = correlate1d(x, taps, axis=0, mode="constant")
    y = correlate1d(y, taps, axis=1, mode="constant")
    return y[r:x.shape[0] - r, r:x.shape[1] - r]


def ssim_map(x: np.ndarray, y: np.ndarray, peak: float) -> np.ndarray:
    """Local SSIM over all valid 11x11 windows of two 2-D float arrays."""
    taps = gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mu_x = _filter_valid(x, taps)
    mu_y = _filter_valid(y, taps)
    sxx = _filter_valid(x * x, taps) - mu_x * mu_x
    syy = _filter_valid(y * y, taps) - mu_y * mu_y
    sxy = _filter_valid(x * y, taps) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return num / den


def ssim(a: ImageTensor, b: ImageTensor) -> float:
    """Mean SSIM, computed per channel and averaged over channels."""
    _check_pair(a, b)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise InvalidArgument(
            f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {a.shape[:2]}")
    if a == b:
        return 1.0
    x = a.codes.astype(np.float64)
    y = b.codes.astype(np.float64)
    per_channel = [ssim_map(x[..., c], y[..., c], float(a.peak)).mean()
                   for c in range(a.channels)]
    return float(np.mean(per_channel))


def format_value(v):
    """JSON/CSV representation: infinities become the ``"inf"`` sentinel."""
    if isinstance(v, float) and math.isinf(v):
        return INF_SENTINEL if v > 0 else "-" + INF_SENTINEL
    if isinstance(v, list):
        return [format_value(x) for x in v]
    return v


def parse_value(v):
    if v == INF_SENTINEL:
        return math.inf
    if v == "-" + INF_SENTINEL:
        return -math.inf
    if isinstance(v, list):
        return [parse_value(x) for x in v]
    return v


def mean_of(values):
    vals = [float(v) for v in values]
    if not vals:
        return math.nan
    if any(math.isinf(v) for v in vals):
        return sum(vals) / len(vals)
    return math.fsum(vals) / len(vals)


@dataclass
class MetricsReport:
    """Per-image rows plus their arithmetic means.

    Each row is a flat mapping from column name to value.  Columns holding a
    list (the accumulation series) are averaged element-wise.
    """

    method: str
    source_bits: int
    target_bits: int
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add_row(self, image_id, **values):
        self.rows.append({"image": image_id, **values})

    @property
    def columns(self):
        cols = []
        for row in self.rows:
            for k in row:
                if k != "image" and k not in cols:
                    cols.append(k)
        return cols

    def aggregate(self):
        out = {}
        for col in self.columns:
            vals = [row[col] for row in self.rows if col in row]
            if vals and isinstance(vals[0], (list, tuple)):
                out[col] = [mean_of(v) for v in zip(*vals)]
            else:
                out[col] = mean_of(vals)
        return out

    def to_dict(self):
        return {
            "method": self.method,
            "q": self.source_bits,
            "N": self.target_bits,
            "metadata": dict(sorted(self.metadata.items())),
            "images": [{k: format_value(v) for k, v in row.items()} for row in self.rows],
            "mean": {k: format_value(v) for k, v in self.aggregate().items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        report = cls(d["method"], d["q"], d["N"], metadata=d.get("metadata", {}))
        for row in d["images"]:
            row = {k: parse_value(v) for k, v in row.items()}
            report.rows.append(row)
        return report

    def to_csv(self):
        """One line per image plus a final ``mean`` line; series are expanded."""
        header = ["image"]
        for col in self.columns:
            sample = next(r[col] for r in self.rows if col in r)
            if isinstance(sample, (list, tuple)):
                header += [f"{col}_{i + 1}" for i in range(len(sample))]
            else:
                header.append(col)

        def flatten(name, row):
            line = [name]
            for col in self.columns:
                v = row.get(col, "")
                if isinstance(v, (list, tuple)):
                    line += [_csv_cell(x) for x in v]
                else:
                    line.append(_csv_cell(v))
            return line

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in self.rows:
            w.writerow(flatten(row["image"], row))
        w.writerow(flatten("mean", self.aggregate()))
        return buf.getvalue()


def _csv_cell(v):
    v = format_value(v)
    if isinstance(v, float):
        return repr(v)
    return v
