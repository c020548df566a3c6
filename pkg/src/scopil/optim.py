"""Adaptive-moment gradient descent for Mlp parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nets import GradientBundle, Mlp


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_weights: list[np.ndarray] = field(default_factory=list)
    v_weights: list[np.ndarray] = field(default_factory=list)
    m_biases: list[np.ndarray] = field(default_factory=list)
    v_biases: list[np.ndarray] = field(default_factory=list)


def init_adam(params: Mlp, lr: float) -> AdamState:
    return AdamState(
        lr=lr,
        m_weights=[np.zeros_like(w) for w in params.weights],
        v_weights=[np.zeros_like(w) for w in params.weights],
        m_biases=[np.zeros_like(b) for b in params.biases],
        v_biases=[np.zeros_like(b) for b in params.biases],
    )


def opt_step(params: Mlp, grads: GradientBundle, opt: AdamState) -> Mlp:
    """One bias-corrected adaptive-moment update, in place. Returns params."""
    if not grads.is_finite():
        raise FloatingPointError("non-finite gradient passed to opt_step")
    opt.step += 1
    dtype = params.dtype
    b1 = dtype.type(opt.beta1)
    b2 = dtype.type(opt.beta2)
    bc1 = dtype.type(1.0 - opt.beta1**opt.step)
    bc2 = dtype.type(1.0 - opt.beta2**opt.step)
    lr = dtype.type(opt.lr)
    eps = dtype.type(opt.eps)

    for arrs, g_arrs, m_arrs, v_arrs in (
        (params.weights, grads.weights, opt.m_weights, opt.v_weights),
        (params.biases, grads.biases, opt.m_biases, opt.v_biases),
    ):
        for p, g, m, v in zip(arrs, g_arrs, m_arrs, v_arrs):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params
