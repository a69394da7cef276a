"""Ordered collection of per-plane networks and its on-disk directory form.

Directory layout::

    bundle.json          q, N, mode, config, config hash, per-plane entries
    plane_<p>.bitr       one model file per lost plane (bitplane-wise mode)
    single_shot.bitr     the single model (single-shot mode)
    train_plane_<p>.csv  training logs, when available
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..bitcore import ImageTensor, RecoveryRange, plane_bits
from ..errors import FormatError, InvalidArgument
from ..netcore import load_model, save_model
from .config import TrainConfig

BUNDLE_FILE = "bundle.json"
BUNDLE_MODES = ("bitplanewise", "single_shot", "oracle")


class OracleNetwork:
    """Stand-in network that emits the true plane of a bound ground truth.

    Gives the upper bound of the bitplane-wise scheme: with it,
    ``recover(quantize(O, q))`` must return ``O`` exactly.
    """

    def __init__(self, plane_index):
        self.plane_index = plane_index
        self.ground_truth = None

    def bind(self, ground_truth: ImageTensor):
        self.ground_truth = ground_truth
        return self

    def predict(self, x):
        if self.ground_truth is None:
            raise InvalidArgument("oracle network has no ground truth bound")
        bits = plane_bits(self.ground_truth.codes, self.plane_index)
        return bits.transpose(2, 0, 1)[None].astype(np.float32)


@dataclass
class ModelBundle:
    range: RecoveryRange
    networks: list
    config: TrainConfig | None = None
    mode: str = "bitplanewise"
    logs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in BUNDLE_MODES:
            raise InvalidArgument(f"bundle mode must be one of {BUNDLE_MODES}")
        if self.mode == "single_shot":
            if len(self.networks) != 1:
                raise InvalidArgument("a single-shot bundle holds exactly one network")
            return
        if len(self.networks) != self.range.steps:
            raise InvalidArgument(
                f"need {self.range.steps} networks for q={self.range.source_bits} "
                f"-> N={self.range.target_bits}, got {len(self.networks)}")
        for k, net in enumerate(self.networks, 1):
            p = getattr(net, "plane_index", None)
            if p is not None and p != self.range.plane_for_step(k):
                raise InvalidArgument(
                    f"network {k} predicts plane {p}, expected {self.range.plane_for_step(k)}")
            bits = getattr(net, "input_bits", None)
            if bits is not None and bits != self.range.input_bits_for_step(k):
                raise InvalidArgument(
                    f"network {k} expects {bits}-bit input, expected "
                    f"{self.range.input_bits_for_step(k)}")

    @classmethod
    def oracle(cls, rrange: RecoveryRange):
        return cls(rrange, [OracleNetwork(p) for p in rrange.plane_indices], mode="oracle")

    def bind(self, ground_truth):
        for net in self.networks:
            if hasattr(net, "bind"):
                net.bind(ground_truth)
        return self

    @property
    def target(self):
        return self.config.target if self.config is not None else "bitplane"

    @property
    def binarize(self):
        return self.config.binarize_at_inference if self.config is not None else True

    # -- persistence ---------------------------------------------------------

    def manifest(self):
        q, n = self.range.source_bits, self.range.target_bits
        d = {"format": "bitrecover-bundle", "version": 1, "mode": self.mode,
             "q": q, "N": n}
        if self.config is not None:
            d["D"] = self.config.depth
            d["config"] = self.config.to_dict()
            d["config_hash"] = self.config.config_hash()
        if self.mode == "single_shot":
            net = self.networks[0]
            d["models"] = [{"file": "single_shot.bitr", "plane_index": -1,
                            "D": net.depth}]
        elif self.mode == "bitplanewise":
            d["models"] = [{"file": plane_file(net.plane_index),
                            "plane_index": net.plane_index, "D": net.depth}
                           for net in self.networks]
        return d

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = self.manifest()
        for entry, net in zip(manifest.get("models", []), self.networks):
            (directory / entry["file"]).write_bytes(save_model(net))
            log_rows = getattr(net, "training_log", None)
            if log_rows:
                from .training import log_to_csv
                name = "train_single_shot.csv" if entry["plane_index"] < 0 \
                    else f"train_plane_{entry['plane_index']}.csv"
                (directory / name).write_text(log_to_csv(log_rows))
        (directory / BUNDLE_FILE).write_text(json.dumps(manifest, indent=2) + "\n")
        return directory

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        path = directory / BUNDLE_FILE
        try:
            d = json.loads(path.read_text())
            mode, q, n = d["mode"], int(d["q"]), int(d["N"])
        except (OSError, ValueError, KeyError) as exc:
            raise FormatError(f"cannot read {path}: {exc}") from None
        rrange = RecoveryRange(q, n)
        config = TrainConfig.from_mapping(d["config"]) if "config" in d else None
        if mode == "oracle":
            return cls.oracle(rrange)
        nets = []
        for entry in d.get("models", []):
            try:
                nets.append(load_model((directory / entry["file"]).read_bytes()))
            except FormatError as exc:
                raise FormatError(f"{entry['file']}: {exc}") from None
        return cls(rrange, nets, config, mode)


def plane_file(p):
    return f"plane_{p}.bitr"
