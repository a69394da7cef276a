"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed together when the
module finishes (``pytest tests/test_acceptance.py``) or when this file is
run directly (``python3 tests/test_acceptance.py``).
"""

import contextlib
import math
import time

import numpy as np
import pytest

from bitrecover import (ImageTensor, RecoveryRange, apply_bitplane,
                        compose_bitplanes, extract_bitplane, mse, psnr, quantize,
                        residual, ssim)
from bitrecover.baselines import METHODS, bit_replicate, ideal_gain
from bitrecover.dataio import generate_synthetic
from bitrecover.errors import FormatError
from bitrecover.netcore import load_model, run_suite, save_model
from bitrecover.netcore.gradcheck import LAYER_TOLERANCE, NETWORK_TOLERANCE
from bitrecover.pipeline import (ModelBundle, TrainConfig, epoch_means, evaluate, recover,
                                 train_all)

# Desk-scale stand-in for the full training protocol (see README).
TOY_CONFIG = TrainConfig(depth=1, patch_size=32, batch_size=16, epochs=8, lr_drop_epoch=4,
                         seed=0)
TOY_RANGE = RecoveryRange(4, 8)

RESULTS = {}
TITLES = {
    1: "exhaustive bit algebra",
    2: "baseline identities",
    3: "gradient suite",
    4: "oracle reconstruction",
    5: "toy training",
    6: "accumulation monotonicity",
    7: "metric oracles",
    8: "determinism",
    9: "serialization",
}


class Outcome:
    def __init__(self):
        self.notes = []

    def check(self, ok, note):
        self.notes.append(("" if ok else "NOT ") + note)
        return ok


@contextlib.contextmanager
def criterion(number):
    out = Outcome()
    try:
        yield out
    except BaseException as exc:
        RESULTS[number] = (False, "; ".join(out.notes + [f"{type(exc).__name__}: {exc}"]))
        raise
    failed = [n for n in out.notes if n.startswith("NOT ")]
    RESULTS[number] = (not failed, "; ".join(out.notes))
    assert not failed, "; ".join(failed)


def summary_lines():
    lines = []
    for number, title in TITLES.items():
        if number not in RESULTS:
            lines.append(f"criterion {number} ({title}): NOT RUN")
            continue
        ok, detail = RESULTS[number]
        lines.append(f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'} | {detail}")
    return lines


@pytest.fixture(scope="module", autouse=True)
def report_lines(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    lines = summary_lines()
    if reporter is None:
        print("\n".join(lines))
        return
    reporter.write_line("")
    for line in lines:
        reporter.write_line(line)


# -- 1 -----------------------------------------------------------------------

def test_criterion_1_bit_algebra():
    with criterion(1) as c:
        start = time.perf_counter()
        ok_q = ok_closure = ok_planes = True
        for n in range(2, 17):
            codes = np.arange(1 << n, dtype=np.uint32)
            o = ImageTensor(codes.reshape(1, -1), n)
            planes = [extract_bitplane(o, p) for p in range(n)]
            ok_planes &= compose_bitplanes(planes, n) == o
            for q in range(1, n):
                iq = quantize(o, q)
                mask = ~np.uint32((1 << (n - q)) - 1) & np.uint32((1 << n) - 1)
                ok_q &= np.array_equal(iq.codes.ravel(), codes & mask)
                r = residual(o, iq)
                total = iq.codes.astype(np.uint32) + r.codes
                ok_closure &= np.array_equal(total.ravel(), codes)
                low = compose_bitplanes(planes[:n - q], n)
                ok_planes &= np.array_equal(low.codes, r.codes)
                cur = iq
                for p in range(n - q - 1, -1, -1):
                    cur = apply_bitplane(cur, planes[p])
                ok_planes &= np.array_equal(cur.codes, o.codes)
        elapsed = time.perf_counter() - start
        c.check(ok_q, "quantize matches bit mask for all (N, q, code)")
        c.check(ok_closure, "I_q + R == O exactly")
        c.check(ok_planes, "plane decomposition, residual and sequential apply are exact")
        c.check(elapsed < 10, f"runtime {elapsed:.2f}s < 10s")


# -- 2 -----------------------------------------------------------------------

def _all_lbd(q, n):
    return ImageTensor((np.arange(1 << q, dtype=np.uint32) << (n - q)).reshape(1, -1),
                       n, q, "quantized")


def test_criterion_2_baselines():
    with criterion(2) as c:
        br = bit_replicate(ImageTensor(np.array([[0b1011 << 4]]), 8, 4, "quantized"))
        c.check(br.codes.item() == 187, f"BR(0b1011, 4->8) = {br.codes.item()}")
        c.check(all(ideal_gain(_all_lbd(q, 2 * q)) == bit_replicate(_all_lbd(q, 2 * q))
                    for q in range(1, 9)), "MIG == BR for every code when N == 2q")
        top_ok = True
        for n in range(2, 17):
            for q in range(1, n):
                img = _all_lbd(q, n)
                for fn in METHODS.values():
                    top_ok &= np.array_equal(fn(img).codes >> (n - q), img.codes >> (n - q))
        c.check(top_ok, "zp/mig/br keep the top q bits for every (N, q, code)")


# -- 3 -----------------------------------------------------------------------

def test_criterion_3_gradients():
    with criterion(3) as c:
        start = time.perf_counter()
        reports = run_suite()
        elapsed = time.perf_counter() - start
        layers = [r for r in reports if r.component != "network"]
        (net,) = [r for r in reports if r.component == "network"]
        worst = max(r.max_error for r in layers)
        c.check(len(layers) == 6 and worst < LAYER_TOLERANCE == 1e-6,
                f"layer max rel err {worst:.1e} < 1e-6 ({', '.join(r.component for r in layers)})")
        c.check(net.max_error < NETWORK_TOLERANCE == 1e-4,
                f"D=1 network max rel err {net.max_error:.1e} < 1e-4")
        c.check(elapsed < 120, f"runtime {elapsed:.1f}s < 120s")


# -- 4 -----------------------------------------------------------------------

def test_criterion_4_oracle_reconstruction():
    with criterion(4) as c:
        corpus = generate_synthetic(100, 24, 16, seed=11)
        failures = 0
        for q in range(3, 16):
            bundle = ModelBundle.oracle(RecoveryRange(q, 16))
            for o in corpus:
                failures += recover(quantize(o, q), bundle.bind(o)) != o
        c.check(failures == 0, f"{100 * 13 - failures}/{100 * 13} exact (100 images x q=3..15)")


# -- 5, 6 --------------------------------------------------------------------

@pytest.fixture(scope="module")
def toy():
    train = generate_synthetic(32, 64, 8, seed=1)
    held_out = generate_synthetic(8, 64, 8, seed=2)
    start = time.perf_counter()
    bundle = train_all(train, TOY_RANGE, TOY_CONFIG)
    elapsed = time.perf_counter() - start
    report = evaluate(held_out, bundle)
    return bundle, report, elapsed


def test_criterion_5_toy_training(toy):
    with criterion(5) as c:
        bundle, report, elapsed = toy
        c.check(elapsed <= 300, f"training {elapsed:.0f}s <= 300s")
        for net in bundle.networks:
            means = epoch_means(net.training_log)
            worst = max(b - a for a, b in zip(means, means[1:]))
            c.check(worst < 0, f"plane {net.plane_index} epoch BCE strictly decreasing "
                               f"(largest step {worst:+.1e})")
        agg = report.aggregate()
        c.check(agg["psnr"] >= agg["zp_psnr"] + 1,
                f"PSNR {agg['psnr']:.2f} >= ZP {agg['zp_psnr']:.2f} + 1 dB")
        c.check(agg["psnr"] >= agg["mig_psnr"], f"PSNR {agg['psnr']:.2f} >= MIG "
                                                f"{agg['mig_psnr']:.2f}")


def test_criterion_6_accumulation(toy):
    with criterion(6) as c:
        strict = True
        for q, n in [(3, 8), (4, 8), (4, 16), (10, 16)]:
            corpus = generate_synthetic(6, 32, n, seed=5)
            rep = evaluate(corpus, ModelBundle.oracle(RecoveryRange(q, n)), baselines=())
            for row in rep.rows:
                s = row["accum_psnr"]
                strict &= all(b > a for a, b in zip(s, s[1:])) and s[-1] == math.inf
        c.check(strict, "ground-truth planes: per-stage PSNR strictly increasing")
        series = toy[1].aggregate()["accum_psnr"]
        drop = max(a - b for a, b in zip(series, series[1:]))
        c.check(drop <= 0.1, "toy bundle series " + ", ".join(f"{v:.2f}" for v in series)
                + f" (largest drop {max(drop, 0):.3f} dB <= 0.1)")


# -- 7 -----------------------------------------------------------------------

def _loop_metrics(a, b, peak):
    h, w, ch = a.shape
    total = 0.0
    for i in range(h):
        for j in range(w):
            for k in range(ch):
                total += (float(a[i, j, k]) - float(b[i, j, k])) ** 2
    err = total / a.size
    g = np.exp(-((np.arange(11) - 5.0) ** 2) / (2 * 1.5 ** 2))
    g /= g.sum()
    win = np.outer(g, g)
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    per = []
    for k in range(ch):
        vals = []
        for i in range(h - 10):
            for j in range(w - 10):
                x = a[i:i + 11, j:j + 11, k].astype(float)
                y = b[i:i + 11, j:j + 11, k].astype(float)
                mx, my = (win * x).sum(), (win * y).sum()
                sx = (win * (x - mx) ** 2).sum()
                sy = (win * (y - my) ** 2).sum()
                sxy = (win * (x - mx) * (y - my)).sum()
                vals.append((2 * mx * my + c1) * (2 * sxy + c2)
                            / ((mx * mx + my * my + c1) * (sx + sy + c2)))
        per.append(sum(vals) / len(vals))
    return err, 10 * math.log10(peak * peak / err), sum(per) / len(per)


def test_criterion_7_metrics():
    with criterion(7) as c:
        rng = np.random.default_rng(7)
        worst = 0.0
        for i in range(20):
            n = (8, 16)[i % 2]
            a = rng.integers(0, 1 << n, (32, 32, 3))
            b = np.clip(a + rng.integers(-(1 << (n - 3)), 1 << (n - 3), a.shape), 0,
                        (1 << n) - 1)
            ia, ib = ImageTensor(a, n), ImageTensor(b, n)
            ref = _loop_metrics(a, b, (1 << n) - 1)
            got = (mse(ia, ib), psnr(ia, ib), ssim(ia, ib))
            worst = max(worst, *(abs(g - r) / max(abs(r), 1e-12) for g, r in zip(got, ref)))
        c.check(worst < 1e-6, f"20 random 32x32 pairs, max rel err {worst:.1e} < 1e-6")
        x = ImageTensor(np.full((32, 32, 3), 40), 8)
        y = ImageTensor(np.full((32, 32, 3), 56), 8)
        diff = abs(psnr(x, y) - 20 * math.log10(255 / 16))
        c.check(diff < 1e-9, f"constant-16 error PSNR {psnr(x, y):.6f} dB (diff {diff:.0e})")


# -- 8 -----------------------------------------------------------------------

def test_criterion_8_determinism(tmp_path):
    with criterion(8) as c:
        train = generate_synthetic(8, 32, 8, seed=3)
        held_out = generate_synthetic(3, 32, 8, seed=4)
        cfg = TrainConfig(depth=1, patch_size=16, batch_size=8, epochs=3, seed=9)
        files, reports = [], []
        for run in ("a", "b"):
            bundle = train_all(train, RecoveryRange(5, 8), cfg)
            bundle.save(tmp_path / run)
            files.append({p.name: p.read_bytes() for p in sorted((tmp_path / run).iterdir())})
            rep = evaluate(held_out, ModelBundle.load(tmp_path / run))
            reports.append((rep.to_json(), rep.to_csv()))
        c.check(files[0] == files[1], f"{len(files[0])} bundle files bit-identical")
        c.check(reports[0] == reports[1], "JSON and CSV reports byte-identical")


# -- 9 -----------------------------------------------------------------------

def test_criterion_9_serialization(toy):
    with criterion(9) as c:
        bundle = toy[0]
        same = all(save_model(load_model(save_model(n))) == save_model(n)
                   for n in bundle.networks)
        c.check(same, "save -> load -> save byte-identical for every trained plane model")
        blob = save_model(bundle.networks[0])
        rng = np.random.default_rng(9)
        corrupt = [blob[:n] for n in (0, 7, 100, len(blob) - 1)]
        corrupt.append(b"JUNK" + blob[4:])
        for pos in rng.integers(0, len(blob), 50):
            bad = bytearray(blob)
            bad[pos] ^= 1 << int(rng.integers(8))
            corrupt.append(bytes(bad))
        rejected = 0
        for data in corrupt:
            try:
                load_model(data)
            except FormatError:
                rejected += 1
        c.check(rejected == len(corrupt),
                f"{rejected}/{len(corrupt)} truncated or corrupted files rejected")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
