"""Model file container.

Little-endian layout::

    b"BITR"                      magic
    u32 version                  (= 1)
    u32 meta_len, meta bytes:
        u32 D, u32 channels, i32 plane_index, u32 input_bits, u32 N,
        f64 norm, u32 json_len, JSON of the remaining metadata
    u32 tensor_count
    per tensor:
        u32 name_len, name (utf-8), u32 ndim, ndim x u32 dims,
        prod(dims) x f32 values
    u32 crc32 of every preceding byte

Tensors are written in the network's own order (parameters, then running
batch-norm statistics), so saving the same network twice gives the same
bytes.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from ..errors import FormatError
from .network import BitplaneNetwork

MAGIC = b"BITR"
VERSION = 1
MAX_DEPTH = 1024
_FIXED = struct.Struct("<IIiIId")
_CORE_KEYS = ("depth", "channels", "plane_index", "input_bits", "container_bits", "norm")


def save_model(net: BitplaneNetwork) -> bytes:
    meta = net.metadata()
    extras = {k: v for k, v in meta.items() if k not in _CORE_KEYS}
    extras_blob = json.dumps(extras, sort_keys=True, separators=(",", ":")).encode()
    meta_blob = _FIXED.pack(meta["depth"], meta["channels"], meta["plane_index"],
                            meta["input_bits"], meta["container_bits"], meta["norm"])
    meta_blob += struct.pack("<I", len(extras_blob)) + extras_blob

    out = [MAGIC, struct.pack("<II", VERSION, len(meta_blob)), meta_blob]
    state = net.state_dict()
    out.append(struct.pack("<I", len(state)))
    for name, arr in state.items():
        encoded = name.encode("utf-8")
        out.append(struct.pack("<I", len(encoded)) + encoded)
        out.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        out.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    body = b"".join(out)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated while reading {what}", self.pos)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt, what):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size, what))


def load_model(data: bytes) -> BitplaneNetwork:
    r = _Reader(data)
    if bytes(r.take(4, "magic")) != MAGIC:
        raise FormatError("bad magic, not a BITR model file", 0)
    version_at = r.pos
    version, meta_len = r.unpack("<II", "header")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}", version_at)

    meta_at = r.pos
    meta = _Reader(r.take(meta_len, "metadata block"))
    depth, channels, plane_index, input_bits, n_bits, norm = \
        meta.unpack(_FIXED.format, "metadata")
    (json_len,) = meta.unpack("<I", "metadata")
    try:
        extras = json.loads(bytes(meta.take(json_len, "metadata")).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError, FormatError) as exc:
        raise FormatError(f"corrupt metadata: {exc}", meta_at) from None
    if not 1 <= depth <= MAX_DEPTH:
        raise FormatError(f"implausible depth {depth}", meta_at)
    if meta.pos != meta_len:
        raise FormatError("metadata block length mismatch", meta_at + meta.pos)

    try:
        net = BitplaneNetwork(
            depth, channels, plane_index=plane_index, input_bits=input_bits,
            container_bits=n_bits, head=extras.pop("head", "sigmoid"),
            width=extras.pop("width", 64),
            bn_momentum=extras.pop("bn_momentum", 0.9),
            bn_eps=extras.pop("bn_eps", 1e-5),
            extra={k: v for k, v in extras.items() if k != "init"},
        )
    except ValueError as exc:
        raise FormatError(f"invalid metadata: {exc}", meta_at) from None
    if net.norm != norm:
        raise FormatError("normalization constant does not match N", meta_at)

    expected = net.state_dict()
    (count,) = r.unpack("<I", "tensor count")
    if count != len(expected):
        raise FormatError(f"expected {len(expected)} tensors, found {count}", r.pos - 4)
    seen = set()
    for _ in range(count):
        at = r.pos
        (name_len,) = r.unpack("<I", "tensor name length")
        try:
            name = bytes(r.take(name_len, "tensor name")).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("tensor name is not utf-8", at) from None
        if name not in expected or name in seen:
            raise FormatError(f"unexpected or repeated tensor {name!r}", at)
        seen.add(name)
        (ndim,) = r.unpack("<I", "tensor rank")
        if ndim > 8:
            raise FormatError(f"implausible tensor rank {ndim}", r.pos - 4)
        shape = r.unpack(f"<{ndim}I", "tensor shape")
        target = expected[name]
        if tuple(shape) != target.shape:
            raise FormatError(f"{name}: shape {shape} != expected {target.shape}", at)
        raw = r.take(4 * target.size, f"tensor {name}")
        target[...] = np.frombuffer(raw, dtype="<f4").reshape(shape)
    body_end = r.pos
    (crc,) = r.unpack("<I", "checksum")
    if r.pos != len(r.data):
        raise FormatError("trailing bytes after checksum", r.pos)
    if crc != zlib.crc32(r.data[:body_end]):
        raise FormatError("checksum mismatch, file is corrupt", body_end)
    net.load_state_dict(expected)
    net.eval()
    return net
