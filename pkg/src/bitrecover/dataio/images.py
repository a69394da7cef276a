"""Lossless image files: 8/16-bit PNG and binary PGM/PPM (P5/P6).

Container depths other than 8 and 16 are stored left-shifted into a 16-bit
file, with a ``<file>.json`` sidecar recording the shift so that loading
restores the original codes and depth.
"""

from __future__ import annotations

import io
import json
import os
import re
from pathlib import Path

import numpy as np
import png

from ..bitcore import ImageTensor
from ..errors import FormatError, InvalidArgument

PNM_EXTENSIONS = {".pgm", ".ppm", ".pnm"}
PNG_EXTENSIONS = {".png"}
_PNM_TOKEN = re.compile(rb"\s*(?:#[^\n\r]*[\n\r]\s*)*(\S+)")


def sidecar_path(path):
    return Path(str(path) + ".json")


def load_image(path) -> ImageTensor:
    path = Path(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        codes, bits = _decode_png(data)
    elif data[:2] in (b"P5", b"P6"):
        codes, bits = _decode_pnm(data)
    elif data[:1] == b"P" and data[1:2].isdigit():
        raise FormatError(f"PNM variant {data[:2].decode()!r} unsupported; "
                          "only binary P5/P6", 0)
    else:
        raise FormatError(f"{path.name}: unrecognized image format", 0)

    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
        shift = int(meta["shift"])
        n = int(meta["container_bits"])
        if bits != 16 or shift != 16 - n:
            raise FormatError(f"sidecar {side.name} inconsistent with file depth {bits}")
        if np.any(codes & ((1 << shift) - 1)):
            raise FormatError(f"{path.name}: nonzero bits below the recorded shift")
        return ImageTensor(codes >> shift, n)
    return ImageTensor(codes, bits)


def save_image(img: ImageTensor, path):
    """Write ``img`` losslessly; the format follows the file extension."""
    path = Path(path)
    ext = path.suffix.lower()
    n = img.container_bits
    codes = img.codes
    side = sidecar_path(path)
    if n in (8, 16):
        bits = n
        if side.exists():
            side.unlink()
    else:
        bits = 16
        codes = (codes.astype(np.uint32) << (16 - n)).astype(np.uint16)
    if ext in PNG_EXTENSIONS:
        blob = _encode_png(codes, bits)
    elif ext in PNM_EXTENSIONS:
        if ext == ".ppm" and img.channels != 3:
            raise InvalidArgument(".ppm needs a 3-channel image; use .pgm or .pnm")
        if ext == ".pgm" and img.channels != 1:
            raise InvalidArgument(".pgm needs a 1-channel image; use .ppm or .pnm")
        blob = _encode_pnm(codes, bits)
    else:
        raise InvalidArgument(f"unsupported image extension {ext!r}")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)
    if n not in (8, 16):
        side.write_text(json.dumps({"container_bits": n, "shift": 16 - n}) + "\n")


# -- PNM ---------------------------------------------------------------------

def _decode_pnm(data):
    magic = data[:2]
    pos = 2
    fields = []
    for _ in range(3):
        m = _PNM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError("truncated PNM header", pos)
        fields.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise FormatError(f"non-numeric PNM header field in {fields!r}", 2) from None
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("PNM header not followed by whitespace", pos)
    pos += 1
    if maxval not in (255, 65535):
        raise FormatError(f"PNM maxval {maxval} unsupported; need 255 or 65535", 2)
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    count = width * height * channels
    need = count * dtype.itemsize
    if len(data) - pos < need:
        raise FormatError(f"PNM raster truncated: need {need} bytes", len(data))
    codes = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    codes = codes.reshape(height, width, channels).astype(np.uint16)
    return codes, 16 if maxval == 65535 else 8


def _encode_pnm(codes, bits):
    h, w, c = codes.shape
    magic = b"P6" if c == 3 else b"P5"
    maxval = (1 << bits) - 1
    header = magic + f"\n{w} {h}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if bits == 16 else "u1"
    return header + np.ascontiguousarray(codes, dtype=dtype).tobytes()


# -- PNG ---------------------------------------------------------------------

def _decode_png(data):
    try:
        reader = png.Reader(bytes=data)
        width, height, rows, info = reader.read()
        rows = list(rows)
    except png.Error as exc:
        raise FormatError(f"PNG decode failed: {exc}") from None
    bits = info["bitdepth"]
    if info.get("palette"):
        raise FormatError("palette PNG unsupported; need greyscale or RGB")
    if info.get("alpha"):
        raise FormatError("PNG alpha channel unsupported")
    if bits not in (8, 16):
        raise FormatError(f"PNG bit depth {bits} unsupported; need 8 or 16")
    planes = info["planes"]
    codes = np.vstack([np.asarray(r, dtype=np.uint16) for r in rows])
    return codes.reshape(height, width, planes), bits


def _encode_png(codes, bits):
    h, w, c = codes.shape
    writer = png.Writer(w, h, greyscale=(c == 1), bitdepth=bits, compression=9)
    buf = io.BytesIO()
    writer.write(buf, (row.tolist() for row in codes.reshape(h, w * c)))
    return buf.getvalue()
