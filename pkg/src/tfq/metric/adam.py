"""Adam optimizer with bias-corrected moment estimates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import DimensionError


@dataclass
class AdamState:
    """Per-parameter first/second moments and the shared step counter."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    alpha: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], **hyper) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **hyper,
        )


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> tuple[list[np.ndarray], AdamState]:
    """One update in place: theta -= alpha * m_hat / (sqrt(v_hat) + eps)."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionError(
            f"adam: {len(params)} params, {len(grads)} grads, {len(state.m)} moments"
        )
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    mc = 1.0 - b1**state.t
    vc = 1.0 - b2**state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise DimensionError(
                f"adam: param {i} shape {p.shape} != grad shape {g.shape}"
            )
        m, v = state.m[i], state.v[i]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        # theta -= alpha * (m / mc) / (sqrt(v / vc) + eps), allocation-lean
        denom = np.sqrt(v / vc)
        denom += state.eps
        p -= (state.alpha / mc) * m / denom
    return params, state
