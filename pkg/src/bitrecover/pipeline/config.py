"""Training configuration and its flat ``key = value`` file form."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path

from ..errors import InvalidArgument

LOSSES = ("bce", "mse")
TARGETS = ("bitplane", "next_image")
MODES = ("bitplanewise", "single_shot")


@dataclass
class TrainConfig:
    """Hyperparameters for bitplane-wise (or single-shot) training.

    Defaults reproduce the full-scale protocol: 48x48 patches, batch 128,
    Adam (0.9, 0.999) at 1e-3 divided by 5 after epoch 16, 30 epochs.
    ``max_steps`` (0 = unlimited) caps optimizer steps per network.
    """

    depth: int = 4
    patch_size: int = 48
    batch_size: int = 128
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 30
    lr_drop_epoch: int = 16
    lr_drop_factor: float = 5.0
    augment: bool = True
    seed: int = 0
    loss: str = "bce"
    target: str = "bitplane"
    mode: str = "bitplanewise"
    binarize_at_inference: bool = True
    max_steps: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise InvalidArgument(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.target not in TARGETS:
            raise InvalidArgument(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.mode not in MODES:
            raise InvalidArgument(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.target == "next_image" and self.loss != "mse":
            raise InvalidArgument("the next_image target is not binary; use loss = mse")
        if self.epochs < 1:
            raise InvalidArgument("epochs must be >= 1")
        if self.lr <= 0:
            raise InvalidArgument("lr must be positive")
        if self.patch_size < 1 or self.batch_size < 1 or self.depth < 1:
            raise InvalidArgument("patch_size, batch_size and depth must be >= 1")
        if self.lr_drop_factor <= 0:
            raise InvalidArgument("lr_drop_factor must be positive")

    def lr_at(self, epoch):
        """Learning rate for 1-based ``epoch``."""
        if epoch > self.lr_drop_epoch:
            return self.lr / self.lr_drop_factor
        return self.lr

    def to_dict(self):
        return dataclasses.asdict(self)

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, mapping):
        """Build from string (or typed) values, coercing by field type."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in known:
                raise InvalidArgument(f"unknown TrainConfig field {key!r}")
            kwargs[key] = _coerce(known[key].type, raw, key)
        return cls(**kwargs)


def _coerce(type_name, raw, key):
    if not isinstance(raw, str):
        return raw
    kind = type_name if isinstance(type_name, str) else type_name.__name__
    try:
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise InvalidArgument(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw.strip()


def parse_key_values(text):
    """Parse ``key = value`` lines; ``#`` starts a comment, quotes are stripped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        if key in out:
            raise InvalidArgument(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config_file(path):
    return parse_key_values(Path(path).read_text())
