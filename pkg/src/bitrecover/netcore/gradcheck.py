"""Central finite-difference checks of every analytic gradient.

Each component is exercised in double precision on a small random problem.
A scalar objective is formed (the loss itself for losses, ``sum(out * r)``
with a fixed random ``r`` for layers), every input and parameter entry is
perturbed by ``+-h`` and the numeric derivative is compared with the
analytic one.  The error of an entry is ``|a - n| / max(|a|, |n|, floor)``;
the floor keeps entries whose true gradient is essentially zero from
turning rounding noise into huge relative errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument
from .layers import BatchNorm2d, Conv2d, ReLU, Sigmoid
from .losses import bce_loss, mse_loss
from .network import BitplaneNetwork

STEP = 1e-5
FLOOR = 1e-8
LAYER_TOLERANCE = 1e-6
NETWORK_TOLERANCE = 1e-4


@dataclass
class GradCheckReport:
    component: str
    tolerance: float
    errors: dict = field(default_factory=dict)
    checked: dict = field(default_factory=dict)

    @property
    def max_error(self):
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self):
        return self.max_error < self.tolerance

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        groups = ", ".join(f"{k}={v:.2e}" for k, v in self.errors.items())
        return f"{status} {self.component:<10} max={self.max_error:.2e} " \
               f"tol={self.tolerance:.0e} [{groups}]"


def relative_error(analytic, numeric, floor=FLOOR):
    a = np.abs(analytic)
    n = np.abs(numeric)
    return np.abs(analytic - numeric) / np.maximum(np.maximum(a, n), floor)


def numeric_gradient(objective, arr, indices, h=STEP):
    """Central differences of ``objective()`` w.r.t. ``arr`` at ``indices``."""
    out = np.empty(len(indices))
    for k, idx in enumerate(indices):
        old = arr[idx]
        arr[idx] = old + h
        fp = objective()
        arr[idx] = old - h
        fm = objective()
        arr[idx] = old
        out[k] = (fp - fm) / (2 * h)
    return out


def _indices(arr, limit, rng):
    total = arr.size
    flat = np.arange(total) if limit is None or total <= limit \
        else np.sort(rng.choice(total, size=limit, replace=False))
    return [np.unravel_index(i, arr.shape) for i in flat]


def compare(objective, arrays, analytic, *, h=STEP, floor=FLOOR, limit=None, rng=None):
    """Max relative error per named array.

    ``arrays`` maps names to arrays that ``objective`` reads; ``analytic``
    maps the same names to their analytic gradients.  ``limit`` caps the
    number of entries checked per array (sampled with ``rng``).
    """
    rng = rng or np.random.default_rng(0)
    errors, counts = {}, {}
    for name, arr in arrays.items():
        idx = _indices(arr, limit, rng)
        num = numeric_gradient(objective, arr, idx, h)
        ana = np.array([analytic[name][i] for i in idx])
        errors[name] = float(relative_error(ana, num, floor).max())
        counts[name] = len(idx)
    return errors, counts


def _layer_problem(layer, x, rng):
    proj = rng.standard_normal(layer.forward(x).shape)

    def objective():
        return float(np.sum(layer.forward(x) * proj))

    layer.forward(x)
    grad_x = layer.backward(proj)
    arrays = {"input": x, **{k: v for k, v in layer.params.items()}}
    analytic = {"input": grad_x, **{k: layer.grads[k] for k in layer.params}}
    return objective, arrays, analytic


def _away_from_zero(x, margin=0.05):
    return np.where(np.abs(x) < margin, x + np.sign(x + 1e-12) * 2 * margin, x)


def grad_check(component, input_shape=None, tolerance=None, seed=0,
               h=STEP, floor=FLOOR, limit=None) -> GradCheckReport:
    """Finite-difference check of one component.

    ``component`` is one of ``conv``, ``batchnorm``, ``relu``, ``sigmoid``,
    ``bce``, ``mse`` or ``network`` (a D=1 network followed by BCE).
    """
    rng = np.random.default_rng(seed)
    f64 = np.float64
    if component == "conv":
        shape = input_shape or (2, 2, 5, 5)
        layer = Conv2d(shape[1], 3, rng, f64)
        layer.params["bias"][:] = rng.standard_normal(3)
        problem = _layer_problem(layer, rng.standard_normal(shape), rng)
    elif component == "batchnorm":
        shape = input_shape or (4, 3, 4, 4)
        layer = BatchNorm2d(shape[1], dtype=f64)
        layer.params["gamma"][:] = rng.uniform(0.5, 1.5, shape[1])
        layer.params["beta"][:] = rng.standard_normal(shape[1])
        x = rng.standard_normal(shape) * 2 + 0.5
        problem = _layer_problem(layer, x, rng)
    elif component == "relu":
        shape = input_shape or (2, 3, 4, 4)
        problem = _layer_problem(ReLU(), _away_from_zero(rng.standard_normal(shape)), rng)
    elif component == "sigmoid":
        shape = input_shape or (2, 3, 4, 4)
        problem = _layer_problem(Sigmoid(), rng.standard_normal(shape) * 2, rng)
    elif component in ("bce", "mse"):
        shape = input_shape or (2, 3, 4, 4)
        pred = rng.uniform(0.05, 0.95, shape)
        if component == "bce":
            target = (rng.random(shape) < 0.5).astype(f64)
            fn = bce_loss
        else:
            target = rng.random(shape)
            fn = mse_loss
        _, grad = fn(pred, target)
        problem = (lambda: fn(pred, target)[0], {"pred": pred}, {"pred": grad})
    elif component == "network":
        shape = input_shape or (2, 3, 8, 8)
        net = BitplaneNetwork(1, shape[1], rng=rng, dtype=f64)
        for name, arr in net.named_parameters():
            if name.endswith(("bias", "beta")):
                arr[:] = 0.1 * rng.standard_normal(arr.shape)
        x = rng.random(shape)
        target = (rng.random(shape) < 0.5).astype(f64)
        saved = {k: v.copy() for k, v in net.named_buffers()}

        def objective():
            return bce_loss(net.forward(x), target)[0]

        _, g = bce_loss(net.forward(x), target)
        grad_x = net.backward(g)
        arrays = {"input": x, **dict(net.named_parameters())}
        analytic = {"input": grad_x, **dict(net.named_grads())}
        if limit is None:
            limit = 16
        problem = (objective, arrays, analytic)
    else:
        raise InvalidArgument(f"unknown component {component!r}")

    if tolerance is None:
        tolerance = NETWORK_TOLERANCE if component == "network" else LAYER_TOLERANCE
    objective, arrays, analytic = problem
    errors, counts = compare(objective, arrays, analytic, h=h, floor=floor,
                             limit=limit, rng=rng)
    if component == "network":
        for name, arr in net.named_buffers():
            arr[...] = saved[name]
    return GradCheckReport(component, tolerance, errors, counts)


SUITE = ("conv", "batchnorm", "relu", "sigmoid", "bce", "mse", "network")


def run_suite(seed=0):
    return [grad_check(c, seed=seed) for c in SUITE]
