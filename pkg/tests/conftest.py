from __future__ import annotations

import numpy as np
import pytest

from scopil.env import EnvConfig, load_preset
from scopil.nets import Mlp, assign_flat, flatten_params


@pytest.fixture
def simple_cfg() -> EnvConfig:
    return load_preset("simple")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def fd_gradient(loss_fn, params: Mlp, h: float = 1e-4) -> np.ndarray:
    """Central finite differences of a scalar loss over all parameters.
    Restores the parameters afterwards."""
    base = flatten_params(params)
    grad = np.zeros_like(base)
    for i in range(base.size):
        vec = base.copy()
        vec[i] += h
        assign_flat(params, vec)
        up = loss_fn()
        vec[i] -= 2 * h
        assign_flat(params, vec)
        down = loss_fn()
        grad[i] = (up - down) / (2 * h)
    assign_flat(params, base)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / denom)
