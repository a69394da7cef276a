"""Dataset manifests: a JSON list of image files with a declared depth.

Example::

    {"container_bits": 16,
     "images": [{"path": "img_000.png", "split": "train"}, ...]}

Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import FormatError
from .images import load_image


@dataclass
class DatasetManifest:
    paths: list
    container_bits: int
    splits: list = field(default_factory=list)
    root: Path = Path(".")

    def __post_init__(self):
        self.paths = [Path(p) for p in self.paths]
        if not self.splits:
            self.splits = [None] * len(self.paths)
        if len(self.splits) != len(self.paths):
            raise FormatError("splits and paths differ in length")

    def resolved(self, path):
        return path if path.is_absolute() else self.root / path

    def select(self, split=None):
        return [p for p, s in zip(self.paths, self.splits) if split is None or s == split]

    def load(self, split=None):
        """Decode the selected images, checking each against the declared depth."""
        images = []
        for p in self.select(split):
            img = load_image(self.resolved(p))
            if img.container_bits != self.container_bits:
                raise FormatError(f"{p}: decoded depth {img.container_bits} "
                                  f"!= declared {self.container_bits}")
            images.append(img)
        return images

    def ids(self, split=None):
        return [p.as_posix() for p in self.select(split)]

    def validate(self):
        seen = set()
        for p in self.paths:
            full = self.resolved(p).resolve()
            if full in seen:
                raise FormatError(f"duplicate manifest entry {p}")
            seen.add(full)
            if not full.exists():
                raise FormatError(f"manifest entry {p} does not exist")
        self.load()
        return self

    def to_json(self):
        entries = []
        for p, s in zip(self.paths, self.splits):
            e = {"path": p.as_posix()}
            if s is not None:
                e["split"] = s
            entries.append(e)
        return json.dumps({"container_bits": self.container_bits, "images": entries},
                          indent=2) + "\n"


def load_manifest(path, validate=True) -> DatasetManifest:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
        entries = d["images"]
        bits = int(d["container_bits"])
        paths = [e["path"] if isinstance(e, dict) else e for e in entries]
        splits = [e.get("split") if isinstance(e, dict) else None for e in entries]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"cannot read manifest {path}: {exc}") from None
    m = DatasetManifest(paths, bits, splits, root=path.parent)
    return m.validate() if validate else m


def save_manifest(manifest: DatasetManifest, path):
    Path(path).write_text(manifest.to_json())
