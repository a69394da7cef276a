"""Per-image evaluation with accumulation series and baseline columns."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from ..baselines import METHODS
from ..bitcore import quantize
from ..metrics import MetricsReport, SSIM_SIGMA, SSIM_WINDOW, mse, psnr, ssim
from .bundle import ModelBundle
from .inference import recover


def _evaluate_one(img, bundle, baselines, binarize):
    rrange = bundle.range
    q = rrange.source_bits
    img_q = quantize(img, q)
    if bundle.mode == "oracle":
        bundle.bind(img)
    out, stages = recover(img_q, bundle, binarize=binarize, return_stages=True)
    row = {"psnr": psnr(out, img), "ssim": ssim(out, img), "mse": mse(out, img)}
    if bundle.mode != "single_shot":
        row["accum_psnr"] = [psnr(s, img) for s in stages]
        row["accum_ssim"] = [ssim(s, img) for s in stages]
        # Stage k measured against the ground truth quantized to q + k bits.
        refs = [quantize(img, q + k) if q + k < img.container_bits else img
                for k in range(1, len(stages) + 1)]
        row["accum_psnr_vs_stage"] = [psnr(s, r) for s, r in zip(stages, refs)]
    for name in baselines:
        base = METHODS[name](img_q)
        row[f"{name}_psnr"] = psnr(base, img)
        row[f"{name}_ssim"] = ssim(base, img)
    return row


def evaluate(corpus, bundle: ModelBundle, baselines=("zp", "mig", "br"), ids=None,
             binarize=None, method=None, workers=1) -> MetricsReport:
    """PSNR/SSIM/MSE of ``recover(quantize(O, q))`` against each ``O``.

    Rows come back in corpus order whatever ``workers`` is; oracle bundles
    hold per-image state and are always evaluated serially.
    """
    ids = list(ids) if ids is not None else [f"img_{i:04d}" for i in range(len(corpus))]
    if binarize is None:
        binarize = bundle.binarize
    label = method or {"bitplanewise": "bitplanewise", "single_shot": "single_shot",
                       "oracle": "oracle"}[bundle.mode]
    report = MetricsReport(label, bundle.range.source_bits, bundle.range.target_bits)
    report.metadata.update({
        "inference": "binarized" if binarize else "raw_sigmoid",
        "target": bundle.target,
        "ssim": f"gaussian {SSIM_WINDOW}x{SSIM_WINDOW} sigma={SSIM_SIGMA}, "
                "valid windows, per-channel mean",
        "baselines": list(baselines),
    })
    if bundle.config is not None:
        report.metadata["config_hash"] = bundle.config.config_hash()

    def one(img):
        return _evaluate_one(img, bundle, baselines, binarize)

    if workers > 1 and bundle.mode != "oracle":
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, corpus))
    else:
        rows = [one(img) for img in corpus]
    for image_id, row in zip(ids, rows):
        report.add_row(image_id, **row)
    return report
