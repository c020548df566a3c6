"""JSON checkpoints for the full trainer state: network parameters, optimizer
moments, both multipliers, and the step counter. Round-trips losslessly at
stored precision."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nets import Mlp
from .optim import AdamState
from .sac import SacNets

_NET_KEYS = ("policy", "q1", "q2", "target_q1", "target_q2")


def _weight_shapes(sizes: list[int]) -> list[tuple[int, int]]:
    return [(o, i) for i, o in zip(sizes[:-1], sizes[1:])]


def _mlp_to_json(params: Mlp) -> dict:
    # weight matrices stored flat per layer, row major
    return {
        "weights": [w.ravel().tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }


def _mlp_from_json(d: dict, sizes: list[int], activation: str, dtype) -> Mlp:
    return Mlp(
        weights=[
            np.array(w, dtype=dtype).reshape(shape)
            for w, shape in zip(d["weights"], _weight_shapes(sizes))
        ],
        biases=[np.array(b, dtype=dtype) for b in d["biases"]],
        activation=activation,
    )


def _adam_to_json(opt: AdamState) -> dict:
    return {
        "lr": opt.lr,
        "beta1": opt.beta1,
        "beta2": opt.beta2,
        "eps": opt.eps,
        "step": opt.step,
        "m_weights": [m.ravel().tolist() for m in opt.m_weights],
        "v_weights": [v.ravel().tolist() for v in opt.v_weights],
        "m_biases": [m.tolist() for m in opt.m_biases],
        "v_biases": [v.tolist() for v in opt.v_biases],
    }


def _adam_from_json(d: dict, sizes: list[int], dtype) -> AdamState:
    shapes = _weight_shapes(sizes)
    return AdamState(
        lr=d["lr"],
        beta1=d["beta1"],
        beta2=d["beta2"],
        eps=d["eps"],
        step=d["step"],
        m_weights=[np.array(m, dtype=dtype).reshape(s) for m, s in zip(d["m_weights"], shapes)],
        v_weights=[np.array(v, dtype=dtype).reshape(s) for v, s in zip(d["v_weights"], shapes)],
        m_biases=[np.array(m, dtype=dtype) for m in d["m_biases"]],
        v_biases=[np.array(v, dtype=dtype) for v in d["v_biases"]],
    )


@dataclass
class Checkpoint:
    nets: SacNets
    opts: dict[str, AdamState]  # keys: policy, q1, q2
    lam: float
    step: int
    meta: dict


def save_checkpoint(
    path: str | Path,
    nets: SacNets,
    opts: dict[str, AdamState],
    lam: float,
    step: int,
    meta: dict | None = None,
) -> None:
    record = {
        "arch": {
            "sizes": nets.policy.sizes,
            "activation": nets.policy.activation,
            "target_entropy": nets.target_entropy,
        },
        "params": {key: _mlp_to_json(getattr(nets, key)) for key in _NET_KEYS},
        "opt": {key: _adam_to_json(opt) for key, opt in opts.items()},
        "alpha": nets.alpha,
        "lambda": lam,
        "step": step,
        "meta": meta or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record))


def load_checkpoint(path: str | Path, dtype=np.float32) -> Checkpoint:
    record = json.loads(Path(path).read_text())
    sizes = record["arch"]["sizes"]
    activation = record["arch"]["activation"]
    params = {
        key: _mlp_from_json(record["params"][key], sizes, activation, dtype)
        for key in _NET_KEYS
    }
    nets = SacNets(
        **params,
        alpha=record["alpha"],
        target_entropy=record["arch"]["target_entropy"],
    )
    opts = {key: _adam_from_json(d, sizes, dtype) for key, d in record["opt"].items()}
    return Checkpoint(
        nets=nets, opts=opts, lam=record["lambda"], step=record["step"], meta=record["meta"]
    )


def load_policy(path: str | Path, dtype=np.float32) -> Mlp:
    """Just the policy network, for evaluation."""
    return load_checkpoint(path, dtype=dtype).nets.policy
