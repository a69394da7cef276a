import json

import numpy as np
import pytest

from bitrecover import ImageTensor
from bitrecover.dataio import (DatasetManifest, generate_synthetic, load_image,
                               load_manifest, plane_coverage, save_image, save_manifest)
from bitrecover.errors import FormatError

PIL = pytest.importorskip("PIL.Image")


def test_16bit_ppm_is_big_endian(tmp_path):
    path = tmp_path / "one.ppm"
    path.write_bytes(b"P6\n1 1\n65535\n" + bytes([0x12, 0x34, 0, 1, 0xff, 0xfe]))
    img = load_image(path)
    assert img.container_bits == 16
    assert img.codes.ravel().tolist() == [4660, 1, 65534]


def test_pnm_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1 # width height\n255\n\x07\x09")
    assert load_image(path).codes.ravel().tolist() == [7, 9]


@pytest.mark.parametrize("name,bits,channels", [
    ("a.png", 8, 3), ("b.png", 16, 3), ("c.png", 16, 1), ("d.ppm", 8, 3),
    ("e.ppm", 16, 3), ("f.pgm", 16, 1), ("g.pnm", 12, 3), ("h.png", 10, 1), ("i.png", 2, 3),
])
def test_round_trip(tmp_path, rng, name, bits, channels):
    img = ImageTensor(rng.integers(0, 1 << bits, (5, 7, channels)), bits)
    path = tmp_path / name
    save_image(img, path)
    assert load_image(path) == img
    sidecar = tmp_path / (name + ".json")
    assert sidecar.exists() == (bits not in (8, 16))


def test_sidecar_records_shift(tmp_path):
    img = ImageTensor(np.array([[1, 1023]]), 10)
    save_image(img, tmp_path / "x.pgm")
    assert json.loads((tmp_path / "x.pgm.json").read_text()) == {"container_bits": 10,
                                                                  "shift": 6}
    raw = (tmp_path / "x.pgm").read_bytes()
    assert raw.endswith(bytes([0, 64, 0xff, 0xc0]))


def test_png_agrees_with_pillow(tmp_path, rng):
    codes = rng.integers(0, 256, (9, 11, 3)).astype(np.uint8)
    PIL.fromarray(codes, "RGB").save(tmp_path / "ref.png")
    assert np.array_equal(load_image(tmp_path / "ref.png").codes, codes)

    save_image(ImageTensor(codes, 8), tmp_path / "ours.png")
    assert np.array_equal(np.asarray(PIL.open(tmp_path / "ours.png")), codes)

    grey = rng.integers(0, 1 << 16, (6, 4)).astype(np.uint16)
    save_image(ImageTensor(grey, 16), tmp_path / "g16.png")
    assert np.array_equal(np.asarray(PIL.open(tmp_path / "g16.png")).astype(np.uint16), grey)


@pytest.mark.parametrize("blob,what", [
    (b"P3\n1 1\n255\n1 2 3\n", "P3"),
    (b"P5\n1 1\n1023\n\x00\x00", "maxval"),
    (b"P6\n4 4\n255\n\x00\x00", "truncated"),
    (b"GIF89a....", "unrecognized"),
    (b"P5\n1 x\n255\n\x00", "non-numeric"),
])
def test_format_errors(tmp_path, blob, what):
    path = tmp_path / "bad.img"
    path.write_bytes(blob)
    with pytest.raises(FormatError, match=what):
        load_image(path)


def test_png_alpha_and_palette_rejected(tmp_path):
    PIL.new("RGBA", (3, 3)).save(tmp_path / "a.png")
    PIL.new("P", (3, 3)).save(tmp_path / "p.png")
    with pytest.raises(FormatError, match="alpha"):
        load_image(tmp_path / "a.png")
    with pytest.raises(FormatError, match="palette"):
        load_image(tmp_path / "p.png")


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        load_image(tmp_path / "nope.png")


# -- synthetic ---------------------------------------------------------------

def test_synthetic_deterministic():
    a = generate_synthetic(4, 16, 12, seed=7)
    b = generate_synthetic(4, 16, 12, seed=7)
    c = generate_synthetic(4, 16, 12, seed=8)
    assert a == b and a != c
    assert all(img.container_bits == 12 and img.shape == (16, 16, 3) for img in a)


def test_synthetic_covers_every_plane():
    corpus = generate_synthetic(8, 64, 16, seed=0)
    assert plane_coverage(corpus, 16).all()


def test_synthetic_mean_near_mid_range():
    for bits in (8, 16):
        corpus = generate_synthetic(12, 48, bits, seed=3)
        mid = ((1 << bits) - 1) / 2
        mean = np.mean([img.codes.mean() for img in corpus])
        assert abs(mean - mid) < 0.2 * mid


def test_synthetic_grey():
    (img,) = generate_synthetic(1, 20, 8, channels=1)
    assert img.channels == 1


# -- manifest ----------------------------------------------------------------

def test_manifest_round_trip(tmp_path):
    imgs = generate_synthetic(3, 12, 16, seed=1)
    names = []
    for i, img in enumerate(imgs):
        save_image(img, tmp_path / f"{i}.png")
        names.append(f"{i}.png")
    save_manifest(DatasetManifest(names, 16, ["train", "train", "test"]),
                  tmp_path / "m.json")
    m = load_manifest(tmp_path / "m.json")
    assert m.ids("test") == ["2.png"]
    assert m.load() == imgs
    assert m.load("train") == imgs[:2]


def test_manifest_errors(tmp_path):
    save_image(generate_synthetic(1, 8, 8)[0], tmp_path / "a.png")
    (tmp_path / "dup.json").write_text(json.dumps(
        {"container_bits": 8, "images": ["a.png", "./a.png"]}))
    (tmp_path / "missing.json").write_text(json.dumps(
        {"container_bits": 8, "images": ["a.png", "b.png"]}))
    (tmp_path / "depth.json").write_text(json.dumps(
        {"container_bits": 16, "images": ["a.png"]}))
    (tmp_path / "junk.json").write_text("{not json")
    for name in ("dup", "missing", "depth", "junk"):
        with pytest.raises(FormatError):
            load_manifest(tmp_path / f"{name}.json")
