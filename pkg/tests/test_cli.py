import hashlib
import json

import numpy as np
import pytest

from bitrecover import ImageTensor, RecoveryRange
from bitrecover.cli import main
from bitrecover.dataio import load_image, save_image
from bitrecover.pipeline import ModelBundle

TOY_CONFIG = """\
# tiny bundle for CLI tests
q = 6
N = 8
synth_count = 4
synth_size = 32
depth = 1
patch_size = 16
batch_size = 4
epochs = 1
max_steps = 2
"""


def digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(directory.iterdir()) if p.is_file()}


@pytest.fixture
def corpus(tmp_path):
    out = tmp_path / "corpus"
    assert main(["synth", "--count", "3", "--size", "24", "--bits", "8", "--seed", "4",
                 "--format", "ppm", "--out-dir", str(out)]) == 0
    return out


def test_synth_writes_images_and_manifest(corpus):
    manifest = json.loads((corpus / "manifest.json").read_text())
    assert manifest["container_bits"] == 8
    assert [e["path"] for e in manifest["images"]] == [
        "synth_0000.ppm", "synth_0001.ppm", "synth_0002.ppm"]
    assert load_image(corpus / "synth_0000.ppm").shape == (24, 24, 3)


def test_synth_grey_sixteen_bit(tmp_path):
    assert main(["synth", "--count", "1", "--size", "16", "--bits", "16", "--channels", "1",
                 "--out-dir", str(tmp_path)]) == 0
    assert load_image(tmp_path / "synth_0000.png").container_bits == 16


def test_quantize_then_zero_pad_is_identity(corpus, tmp_path):
    before = digest(corpus)
    a, b, c = corpus / "synth_0000.ppm", tmp_path / "b.ppm", tmp_path / "c.ppm"
    assert main(["quantize", "--bits", "4", str(a), str(b)]) == 0
    assert main(["baseline", "--method", "zp", "--from", "4", str(b), str(c)]) == 0
    assert np.array_equal(load_image(b).codes, load_image(c).codes)
    assert not np.any(load_image(b).codes & 0xF)
    for method in ("mig", "br"):
        out = tmp_path / f"{method}.png"
        assert main(["baseline", "--method", method, "--from", "4", str(b), str(out)]) == 0
        assert np.array_equal(load_image(out).codes >> 4, load_image(b).codes >> 4)
    assert digest(corpus) == before


def test_baseline_on_unquantized_input_is_contract_violation(corpus, tmp_path, capsys):
    code = main(["baseline", "--method", "br", "--from", "4",
                 str(corpus / "synth_0000.ppm"), str(tmp_path / "x.ppm")])
    assert code == 4
    assert "contract violation" in capsys.readouterr().err


def test_train_recover_eval(corpus, tmp_path):
    cfg = tmp_path / "toy.cfg"
    cfg.write_text(TOY_CONFIG)
    bundle = tmp_path / "bundle"
    assert main(["train", "--config", str(cfg), "--out", str(bundle)]) == 0
    assert {"bundle.json", "plane_1.bitr", "plane_0.bitr"} <= set(digest(bundle))

    before = digest(corpus)
    q6 = tmp_path / "q6.ppm"
    out = tmp_path / "restored.ppm"
    assert main(["quantize", "--bits", "6", str(corpus / "synth_0001.ppm"), str(q6)]) == 0
    assert main(["recover", "--bundle", str(bundle), str(q6), str(out)]) == 0
    restored, q = load_image(out), load_image(q6)
    assert np.all(restored.codes >= q.codes) and np.all((restored.codes >> 2) == (q.codes >> 2))
    assert main(["recover", "--raw-sigmoid", "--bundle", str(bundle), str(q6),
                 str(tmp_path / "raw.ppm")]) == 0

    rj, rc = tmp_path / "r.json", tmp_path / "r.csv"
    manifest = str(corpus / "manifest.json")
    assert main(["eval", "--bundle", str(bundle), "--manifest", manifest,
                 "--report", str(rj)]) == 0
    assert main(["eval", "--bundle", str(bundle), "--manifest", manifest,
                 "--report", str(rc)]) == 0
    report = json.loads(rj.read_text())
    assert len(report["images"]) == 3
    for key in ("accum_psnr", "zp_psnr", "mig_psnr", "br_ssim"):
        assert key in report["mean"]
    header = rc.read_text().splitlines()[0].split(",")
    assert "accum_psnr_2" in header and "zp_psnr" in header
    assert digest(corpus) == before


def test_eval_oracle_reports_inf(corpus, tmp_path):
    ModelBundle.oracle(RecoveryRange(5, 8)).save(tmp_path / "oracle")
    report = tmp_path / "o.json"
    assert main(["eval", "--bundle", str(tmp_path / "oracle"), "--manifest",
                 str(corpus / "manifest.json"), "--report", str(report),
                 "--baselines", ""]) == 0
    d = json.loads(report.read_text())
    assert {row["psnr"] for row in d["images"]} == {"inf"}
    assert d["mean"]["psnr"] == "inf"


def test_gradcheck_exit_zero(capsys):
    assert main(["gradcheck"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 7 and all(line.startswith("PASS") for line in lines)


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["quantize", "--bits", "4", "a.png"],
    ["quantize", "--bits", "99", "a.png", "b.png"], ["synth", "--count", "2", "--nope"],
    ["baseline", "--method", "nearest", "--from", "4", "a", "b"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert "usage:" in capsys.readouterr().err


def test_data_errors(tmp_path):
    bad = tmp_path / "bad.ppm"
    bad.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    assert main(["quantize", "--bits", "4", str(bad), str(tmp_path / "o.ppm")]) == 3
    assert main(["quantize", "--bits", "4", str(tmp_path / "missing.png"),
                 str(tmp_path / "o.png")]) == 3
    assert main(["recover", "--bundle", str(tmp_path), str(bad), str(tmp_path / "o")]) == 3


def test_quantize_bits_above_container(tmp_path):
    save_image(ImageTensor(np.zeros((4, 4, 3)), 8), tmp_path / "a.png")
    assert main(["quantize", "--bits", "12", str(tmp_path / "a.png"),
                 str(tmp_path / "b.png")]) == 2


def test_train_config_errors(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("N = 8\ndepth = 1\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 2
    cfg.write_text("q = 4\nN = 8\nloss = hinge\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 3
