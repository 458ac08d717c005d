"""Central finite-difference verification of every analytic gradient.

Each check compares a hand-derived backward pass against (f(x+h) - f(x-h))
/ 2h elementwise on small random tensors, reporting the worst relative
error. Inputs are drawn away from ReLU/hinge kinks so the difference
quotient is valid. The suite is deterministic for a fixed seed and doubles
as the `gradcheck` CLI subcommand.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .layers import (
    conv2d_backward,
    conv2d_forward,
    fc_backward,
    fc_forward,
    maxpool2x2_backward,
    maxpool2x2_forward,
    relu_backward,
    relu_forward,
)
from .siamese import SiameseModel, contrastive_loss, core_backward, core_forward

DEFAULT_H = 1e-5
DEFAULT_TOLERANCE = 1e-4


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_rel_error: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_rel_error < self.tolerance


def numerical_gradient(f: Callable[[], float], x: np.ndarray, h: float = DEFAULT_H) -> np.ndarray:
    """Central differences of f with respect to x, perturbing x in place."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        ix = it.multi_index
        orig = x[ix]
        x[ix] = orig + h
        fp = f()
        x[ix] = orig - h
        fm = f()
        x[ix] = orig
        grad[ix] = (fp - fm) / (2.0 * h)
        it.iternext()
    return grad


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    """Worst elementwise |a-b| / (|a| + |b|).

    The denominator is floored at 1e-5: with h = 1e-5 and unit-scale
    functions, central differences carry ~1e-11 roundoff noise, so
    exactly-zero gradients (dead ReLU paths) would otherwise report that
    noise as a huge relative error. Differences above ~1e-9 still register.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.abs(a) + np.abs(b), 1e-5)
    return float(np.max(np.abs(a - b) / denom))


def _away_from_zero(rng: np.random.Generator, shape, low=0.1, high=1.0) -> np.ndarray:
    """Random values with |x| >= low, avoiding ReLU kinks under +-h."""
    return rng.uniform(low, high, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def _check_conv(rng: np.random.Generator, tol: float) -> list[CheckResult]:
    results = []
    for name, xshape, wshape, pad, stride in [
        ("conv2d pad1", (2, 2, 6, 6), (3, 2, 3, 3), 1, 1),
        ("conv2d stride2", (1, 2, 7, 7), (2, 2, 3, 3), 0, 2),
    ]:
        x = rng.standard_normal(xshape)
        w = rng.standard_normal(wshape)
        b = rng.standard_normal(wshape[0])
        r = rng.standard_normal(conv2d_forward(x, w, b, pad, stride).shape)

        def f() -> float:
            return float((conv2d_forward(x, w, b, pad, stride) * r).sum())

        dx, dw, db = conv2d_backward(r, x, w, pad=pad, stride=stride)
        err = max(
            rel_error(dx, numerical_gradient(f, x)),
            rel_error(dw, numerical_gradient(f, w)),
            rel_error(db, numerical_gradient(f, b)),
        )
        results.append(CheckResult(name, err, tol))
    return results


def _check_maxpool(rng: np.random.Generator, tol: float) -> CheckResult:
    x = rng.standard_normal((2, 3, 6, 6))
    out, arg = maxpool2x2_forward(x)
    r = rng.standard_normal(out.shape)

    def f() -> float:
        return float((maxpool2x2_forward(x)[0] * r).sum())

    dx = maxpool2x2_backward(r, arg)
    return CheckResult("maxpool2x2", rel_error(dx, numerical_gradient(f, x)), tol)


def _check_fc(rng: np.random.Generator, tol: float) -> CheckResult:
    x = rng.standard_normal((3, 7))
    w = rng.standard_normal((5, 7))
    b = rng.standard_normal(5)
    r = rng.standard_normal((3, 5))

    def f() -> float:
        return float((fc_forward(x, w, b) * r).sum())

    dx, dw, db = fc_backward(r, x, w)
    err = max(
        rel_error(dx, numerical_gradient(f, x)),
        rel_error(dw, numerical_gradient(f, w)),
        rel_error(db, numerical_gradient(f, b)),
    )
    return CheckResult("fc", err, tol)


def _check_relu(rng: np.random.Generator, tol: float) -> CheckResult:
    x = _away_from_zero(rng, (4, 8))
    r = rng.standard_normal(x.shape)

    def f() -> float:
        return float((relu_forward(x) * r).sum())

    dx = relu_backward(r, x)
    return CheckResult("relu", rel_error(dx, numerical_gradient(f, x)), tol)


def _check_contrastive(rng: np.random.Generator, tol: float) -> CheckResult:
    worst = 0.0
    margin = 1.0
    # Stay away from the hinge kink at d == margin.
    for d0 in (0.2, 0.7, 1.4, 2.5):
        for label in (0, 1):
            d = np.array([d0])

            def f() -> float:
                return contrastive_loss(float(d[0]), label, margin)[0]

            analytic = contrastive_loss(d0, label, margin)[1]
            worst = max(worst, rel_error(np.array([analytic]), numerical_gradient(f, d)))
    return CheckResult("contrastive loss", worst, tol)


def tiny_architecture() -> list[dict]:
    """Scaled-down core (8x8 input) with the same layer kinds as production."""
    return [
        {"op": "conv", "in": 1, "out": 2, "k": 3, "pad": 1, "stride": 1},
        {"op": "relu"},
        {"op": "pool"},
        {"op": "conv", "in": 2, "out": 3, "k": 3, "pad": 1, "stride": 1},
        {"op": "relu"},
        {"op": "pool"},
        {"op": "conv", "in": 3, "out": 4, "k": 3, "pad": 1, "stride": 1},
        {"op": "relu"},
        {"op": "pool"},
        {"op": "flatten"},
        {"op": "fc", "in": 4, "out": 6},
        {"op": "relu"},
        {"op": "fc", "in": 6, "out": 5},
    ]


def _siamese_loss_and_grads(
    model: SiameseModel, xa: np.ndarray, xb: np.ndarray, label: int
) -> tuple[float, list[np.ndarray]]:
    ea, ca = core_forward(model, xa)
    eb, cb = core_forward(model, xb)
    diff = (ea - eb)[0]
    d = float(np.sqrt(np.dot(diff, diff)))
    loss, dloss_dd = contrastive_loss(d, label, model.margin)
    dea = (dloss_dd * diff / d)[None] if d > 0 else np.zeros_like(ea)
    ga = core_backward(model, dea, ca)
    gb = core_backward(model, -dea, cb)
    return loss, [a + b for a, b in zip(ga, gb)]


def _check_siamese_end_to_end(rng: np.random.Generator, tol: float) -> CheckResult:
    model = SiameseModel.initialize(rng, layers=tiny_architecture(), input_shape=(1, 8, 8))
    xa = rng.uniform(0.0, 1.0, size=(1, 1, 8, 8))
    xb = rng.uniform(0.0, 1.0, size=(1, 1, 8, 8))
    ea, _ = core_forward(model, xa)
    eb, _ = core_forward(model, xb)
    d0 = float(np.linalg.norm(ea - eb))

    worst = 0.0
    # Active hinge for the dissimilar label, plain quadratic for similar.
    for label, margin in ((1, 1.0), (0, 2.0 * d0)):
        model.margin = margin

        def f() -> float:
            return _siamese_loss_and_grads(model, xa, xb, label)[0]

        _, grads = _siamese_loss_and_grads(model, xa, xb, label)
        for p, g in zip(model.params, grads):
            worst = max(worst, rel_error(g, numerical_gradient(f, p)))
    return CheckResult("siamese end-to-end", worst, tol)


def run_suite(seed: int = 1234, tolerance: float = DEFAULT_TOLERANCE) -> list[CheckResult]:
    """All gradient checks; every CheckResult.ok must hold."""
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []
    results.extend(_check_conv(rng, tolerance))
    results.append(_check_maxpool(rng, tolerance))
    results.append(_check_fc(rng, tolerance))
    results.append(_check_relu(rng, tolerance))
    results.append(_check_contrastive(rng, tolerance))
    results.append(_check_siamese_end_to_end(rng, tolerance))
    return results
