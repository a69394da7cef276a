"""Independent per-bitplane training and the single-shot residual baseline."""

from __future__ import annotations

import contextlib
import csv
import io
import logging

import numpy as np

from ..bitcore import ImageTensor, RecoveryRange
from ..errors import InvalidArgument
from ..netcore import AdamState, BitplaneNetwork, adam_step
from ..netcore.losses import LOSSES
from .bundle import ModelBundle
from .config import TrainConfig
from .data import apply_augmentation, batch_arrays, patch_stack

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "step", "lr", "loss")


@contextlib.contextmanager
def single_threaded(enabled=True):
    """Restrict BLAS to one thread so results do not depend on scheduling."""
    if not enabled:
        yield
        return
    from threadpoolctl import threadpool_limits
    with threadpool_limits(limits=1):
        yield


def _check_corpus(corpus, n_bits):
    if not corpus:
        raise InvalidArgument("training corpus is empty")
    for i, img in enumerate(corpus):
        if not isinstance(img, ImageTensor) or img.role != "full":
            raise InvalidArgument(f"corpus[{i}] is not a full-depth ImageTensor")
        if img.container_bits != n_bits:
            raise InvalidArgument(f"corpus[{i}] is {img.container_bits}-bit, need {n_bits}")
    channels = {img.channels for img in corpus}
    if len(channels) != 1:
        raise InvalidArgument(f"corpus mixes channel counts {sorted(channels)}")
    return channels.pop()


def _network_rng(config, rrange, key):
    return np.random.default_rng(
        np.random.SeedSequence([config.seed, rrange.source_bits, rrange.target_bits, key]))


def fit(net, patches, config: TrainConfig, rng, make_batch, loss_name):
    """Minibatch Adam over ``patches`` for ``config.epochs`` epochs.

    Each epoch visits the patches in a fresh random order; the last
    incomplete batch is dropped.  Returns the log rows
    ``{"epoch", "step", "lr", "loss"}``, one per optimizer step.
    """
    n_patches = len(patches)
    per_epoch = n_patches // config.batch_size
    if per_epoch == 0:
        raise InvalidArgument(
            f"{n_patches} patches cannot fill one batch of {config.batch_size}")
    loss_fn = LOSSES[loss_name]
    params = [a for _, a in net.named_parameters()]
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                      eps=config.adam_eps)
    rows = []
    step = 0
    net.train()
    for epoch in range(1, config.epochs + 1):
        state.lr = config.lr_at(epoch)
        order = rng.permutation(n_patches)
        for b in range(per_epoch):
            idx = order[b * config.batch_size:(b + 1) * config.batch_size]
            codes = patches[idx]
            if config.augment:
                flips = rng.random((len(idx), 3)) < 0.5
                codes = np.stack([apply_augmentation(c, *f) for c, f in zip(codes, flips)])
            x, y = make_batch(codes)
            out = net.forward(x)
            loss, grad = loss_fn(out, y)
            net.backward(grad)
            adam_step(params, [g for _, g in net.named_grads()], state)
            step += 1
            rows.append({"epoch": epoch, "step": step, "lr": state.lr, "loss": loss})
            if config.max_steps and step >= config.max_steps:
                break
        if config.max_steps and step >= config.max_steps:
            break
        log.debug("epoch %d mean loss %.6f", epoch,
                  np.mean([r["loss"] for r in rows if r["epoch"] == epoch]))
    net.eval()
    return rows


def train_bitplane_network(corpus, k, rrange: RecoveryRange, config: TrainConfig,
                           depth=None) -> BitplaneNetwork:
    """Train the network for step ``k``: predict plane ``N-(q+k)`` of the ground
    truth from the ground truth quantized to ``q+k-1`` bits.

    The per-step log is attached as ``net.training_log``.
    """
    channels = _check_corpus(corpus, rrange.target_bits)
    p = rrange.plane_for_step(k)
    in_bits = rrange.input_bits_for_step(k)
    depth = depth or config.depth
    rng = _network_rng(config, rrange, k)
    net = BitplaneNetwork(
        depth, channels, plane_index=p, input_bits=in_bits,
        container_bits=rrange.target_bits, rng=rng,
        extra={"loss": config.loss, "target": config.target})
    patches = patch_stack(corpus, config.patch_size)
    n = rrange.target_bits

    def make_batch(codes):
        return batch_arrays(codes, n, in_bits, p, config.target)

    with single_threaded(config.deterministic):
        net.training_log = fit(net, patches, config, rng, make_batch, config.loss)
    return net


def train_all(corpus, rrange: RecoveryRange, config: TrainConfig, depths=None) -> ModelBundle:
    """One independently trained network per lost plane, most significant first.

    ``depths`` optionally gives a per-plane D (length ``N - q``).
    """
    if config.mode != "bitplanewise":
        raise InvalidArgument("train_all needs mode = bitplanewise")
    _check_corpus(corpus, rrange.target_bits)
    if depths is not None and len(depths) != rrange.steps:
        raise InvalidArgument(f"need {rrange.steps} per-plane depths, got {len(depths)}")
    nets = []
    for k in range(1, rrange.steps + 1):
        d = depths[k - 1] if depths is not None else None
        log.info("training plane %d (%d/%d)", rrange.plane_for_step(k), k, rrange.steps)
        nets.append(train_bitplane_network(corpus, k, rrange, config, depth=d))
    return ModelBundle(rrange, nets, config)


def single_shot_train(corpus, rrange: RecoveryRange, config: TrainConfig) -> BitplaneNetwork:
    """One network with ``(N-q)*D`` residual blocks and no sigmoid, trained with
    MSE to predict the normalized residual ``R / (2**N - 1)`` from ``I_q``."""
    channels = _check_corpus(corpus, rrange.target_bits)
    rng = _network_rng(config, rrange, 0)
    q, n = rrange.source_bits, rrange.target_bits
    net = BitplaneNetwork(
        rrange.steps * config.depth, channels, plane_index=-1, input_bits=q,
        container_bits=n, head="linear", rng=rng,
        extra={"loss": "mse", "target": "residual"})
    patches = patch_stack(corpus, config.patch_size)

    def make_batch(codes):
        return batch_arrays(codes, n, q, -1, "residual")

    with single_threaded(config.deterministic):
        net.training_log = fit(net, patches, config, rng, make_batch, "mse")
    return net


def epoch_means(rows):
    """Mean loss per epoch, in epoch order."""
    epochs = sorted({r["epoch"] for r in rows})
    return [float(np.mean([r["loss"] for r in rows if r["epoch"] == e])) for e in epochs]


def log_to_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=LOG_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({"epoch": r["epoch"], "step": r["step"],
                    "lr": repr(float(r["lr"])), "loss": repr(float(r["loss"]))})
    return buf.getvalue()
