"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data or format error, 4 contract
violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import baselines
from .bitcore import RecoveryRange, quantize
from .dataio import (DatasetManifest, generate_synthetic, load_image, load_manifest,
                     save_image, save_manifest)
from .errors import ContractViolation, FormatError, InvalidArgument

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONTRACT = 0, 2, 3, 4

log = logging.getLogger("bitrecover")

# Keys a training config file may carry besides TrainConfig fields.
DATA_KEYS = ("q", "N", "manifest", "split", "synth_count", "synth_size", "synth_seed",
             "depths")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


def _bits(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 1 <= v <= 16:
        raise argparse.ArgumentTypeError(f"bit depth must be in [1, 16], got {v}")
    return v


def build_parser():
    p = _Parser(prog="bitrecover", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("quantize", help="zero the low bits of an image")
    s.add_argument("--bits", type=_bits, required=True, help="bits to keep (q)")
    s.add_argument("input")
    s.add_argument("output")

    s = sub.add_parser("baseline", help="classical de-quantization")
    s.add_argument("--method", choices=sorted(baselines.METHODS), required=True)
    s.add_argument("--from", dest="source_bits", type=_bits, required=True,
                   help="effective depth q of the input")
    s.add_argument("input")
    s.add_argument("output")

    s = sub.add_parser("train", help="train a model bundle")
    s.add_argument("--config", required=True, help="key = value file")
    s.add_argument("--out", required=True, help="bundle directory")

    s = sub.add_parser("recover", help="restore bit depth with a bundle")
    s.add_argument("--bundle", required=True)
    s.add_argument("--raw-sigmoid", action="store_true",
                   help="accumulate raw sigmoid outputs instead of 0/1 planes")
    s.add_argument("input")
    s.add_argument("output")

    s = sub.add_parser("eval", help="evaluate a bundle on a manifest")
    s.add_argument("--bundle", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--report", required=True, help="output path (.json or .csv)")
    s.add_argument("--format", choices=("json", "csv"),
                   help="report format; default from the --report extension")
    s.add_argument("--split", help="only images with this split label")
    s.add_argument("--baselines", default="zp,mig,br",
                   help="comma-separated baseline columns (empty for none)")
    s.add_argument("--raw-sigmoid", action="store_true")
    s.add_argument("--workers", type=int, default=1)

    sub.add_parser("gradcheck", help="finite-difference gradient suite")

    s = sub.add_parser("synth", help="write a synthetic corpus and manifest")
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--size", type=int, required=True)
    s.add_argument("--bits", type=_bits, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--channels", type=int, choices=(1, 3), default=3)
    s.add_argument("--format", choices=("png", "ppm"), default="png")
    s.add_argument("--out-dir", required=True)
    return p


# -- commands ----------------------------------------------------------------

def cmd_quantize(args):
    img = load_image(args.input)
    if args.bits > img.container_bits:
        raise UsageError(f"--bits {args.bits} exceeds the {img.container_bits}-bit input")
    save_image(quantize(img, args.bits), args.output)


def cmd_baseline(args):
    from .pipeline import as_quantized
    img = load_image(args.input)
    if args.source_bits >= img.container_bits:
        raise UsageError(f"--from {args.source_bits} must be below the "
                         f"{img.container_bits}-bit container")
    img_q = as_quantized(img, args.source_bits)
    save_image(baselines.apply_baseline(args.method, img_q), args.output)


def _training_corpus(data, config):
    if "manifest" in data:
        manifest = load_manifest(data["manifest"])
        return manifest.load(data.get("split") or None)
    count = int(data.get("synth_count", 32))
    size = int(data.get("synth_size", 64))
    return generate_synthetic(count, size, int(data["N"]), int(data.get("synth_seed", 0)))


def cmd_train(args):
    from .pipeline import (ModelBundle, TrainConfig, single_shot_train, train_all)
    from .pipeline.config import load_config_file
    raw = load_config_file(args.config)
    data = {k: raw.pop(k) for k in DATA_KEYS if k in raw}
    if "q" not in data or "N" not in data:
        raise UsageError("config must set q and N")
    config = TrainConfig.from_mapping(raw)
    rrange = RecoveryRange(int(data["q"]), int(data["N"]))
    corpus = _training_corpus(data, config)
    if config.mode == "single_shot":
        bundle = ModelBundle(rrange, [single_shot_train(corpus, rrange, config)],
                             config, mode="single_shot")
    else:
        depths = [int(d) for d in data["depths"].split(",")] if "depths" in data else None
        bundle = train_all(corpus, rrange, config, depths=depths)
    bundle.save(args.out)


def cmd_recover(args):
    from .pipeline import ModelBundle, as_quantized, recover
    bundle = ModelBundle.load(args.bundle)
    if bundle.mode == "oracle":
        raise ContractViolation("an oracle bundle needs ground truth; use eval")
    img = load_image(args.input)
    img_q = as_quantized(img, bundle.range.source_bits)
    out = recover(img_q, bundle, binarize=False if args.raw_sigmoid else None)
    save_image(out, args.output)


def cmd_eval(args):
    from .pipeline import ModelBundle, evaluate
    bundle = ModelBundle.load(args.bundle)
    manifest = load_manifest(args.manifest)
    corpus = manifest.load(args.split)
    names = [b for b in args.baselines.split(",") if b]
    for b in names:
        if b not in baselines.METHODS:
            raise UsageError(f"unknown baseline {b!r}")
    report = evaluate(corpus, bundle, baselines=names, ids=manifest.ids(args.split),
                      binarize=False if args.raw_sigmoid else None,
                      workers=args.workers)
    fmt = args.format or ("csv" if args.report.lower().endswith(".csv") else "json")
    text = report.to_csv() if fmt == "csv" else report.to_json()
    Path(args.report).write_text(text)
    agg = report.aggregate()
    print(f"{report.method} q={report.source_bits} N={report.target_bits} "
          f"images={len(report.rows)} psnr={agg['psnr']:.4f} ssim={agg['ssim']:.4f}")


def cmd_gradcheck(args):
    from .netcore.gradcheck import run_suite
    reports = run_suite()
    for r in reports:
        print(r.summary())
    return EXIT_OK if all(r.passed for r in reports) else 1


def cmd_synth(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images = generate_synthetic(args.count, args.size, args.bits, args.seed, args.channels)
    ext = "png" if args.format == "png" or args.channels == 1 else "ppm"
    if args.format == "ppm" and args.channels == 1:
        ext = "pgm"
    paths = []
    for i, img in enumerate(images):
        name = f"synth_{i:04d}.{ext}"
        save_image(img, out / name)
        paths.append(name)
    save_manifest(DatasetManifest(paths, args.bits), out / "manifest.json")


COMMANDS = {
    "quantize": cmd_quantize, "baseline": cmd_baseline, "train": cmd_train,
    "recover": cmd_recover, "eval": cmd_eval, "gradcheck": cmd_gradcheck,
    "synth": cmd_synth,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        code = COMMANDS[args.command](args)
        return EXIT_OK if code is None else code
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (FormatError, InvalidArgument, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


cli = main


if __name__ == "__main__":
    sys.exit(main())
