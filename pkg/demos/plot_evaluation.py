"""
Accumulation of recovered planes
================================

Evaluate a bundle against the baselines and watch PSNR grow as each plane
is added.  Uses the bundle written by ``plot_training.py`` when present and
the oracle upper bound otherwise.
"""

from pathlib import Path

from bitrecover import RecoveryRange
from bitrecover.dataio import generate_synthetic
from bitrecover.pipeline import ModelBundle, evaluate

held_out = generate_synthetic(8, 64, 8, seed=2)

if Path("toy_bundle/bundle.json").exists():
    bundle = ModelBundle.load("toy_bundle")
else:
    # stand-in networks that return the true planes
    bundle = ModelBundle.oracle(RecoveryRange(4, 8))

report = evaluate(held_out, bundle)
mean = report.aggregate()
print(report.method, report.metadata["inference"])
print(f"recovered {mean['psnr']:.2f} dB   zp {mean['zp_psnr']:.2f}   "
      f"mig {mean['mig_psnr']:.2f}   br {mean['br_psnr']:.2f}")

# one entry per added plane, 5 bits ... 8 bits
for k, (p, s) in enumerate(zip(mean["accum_psnr"], mean["accum_ssim"]), 1):
    print(f"  +{k} planes  psnr={p:.2f}  ssim={s:.4f}")

# raw sigmoid outputs instead of 0/1 planes
if bundle.mode == "bitplanewise":
    raw = evaluate(held_out, bundle, binarize=False).aggregate()
    print(f"raw sigmoid {raw['psnr']:.2f} dB")

Path("report.csv").write_text(report.to_csv())
