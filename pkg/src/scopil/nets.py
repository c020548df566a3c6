"""Dense-network numerical core: forward pass, exact reverse-mode gradients,
and a numerically stable log-softmax.

Networks are small fully-connected stacks (rectifier hidden layers, linear
output). Parameters live in plain numpy arrays so the same code runs in
float32 for training and float64 for gradient verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Mlp:
    """Parameters of a dense network.

    weights[i] has shape (out_i, in_i); biases[i] has shape (out_i,).
    The hidden activation applies to every layer except the last.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    def copy(self) -> "Mlp":
        return Mlp(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
        )

    def astype(self, dtype) -> "Mlp":
        return Mlp(
            weights=[w.astype(dtype) for w in self.weights],
            biases=[b.astype(dtype) for b in self.biases],
            activation=self.activation,
        )


@dataclass
class GradientBundle:
    """Per-parameter partials of a scalar loss, shape-congruent with an Mlp."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def add_(self, other: "GradientBundle") -> "GradientBundle":
        for w, ow in zip(self.weights, other.weights):
            w += ow
        for b, ob in zip(self.biases, other.biases):
            b += ob
        return self

    def scale_(self, factor: float) -> "GradientBundle":
        for w in self.weights:
            w *= factor
        for b in self.biases:
            b *= factor
        return self

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )


def init_mlp(sizes: list[int], rng: np.random.Generator, activation: str = "relu",
             dtype=np.float32) -> Mlp:
    """Fan-in scaled uniform initialization: U(-1/sqrt(n_in), 1/sqrt(n_in))."""
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)).astype(dtype))
        biases.append(rng.uniform(-bound, bound, size=(n_out,)).astype(dtype))
    return Mlp(weights=weights, biases=biases, activation=activation)


def zeros_like_bundle(params: Mlp) -> GradientBundle:
    return GradientBundle(
        weights=[np.zeros_like(w) for w in params.weights],
        biases=[np.zeros_like(b) for b in params.biases],
    )


def _check_input(params: Mlp, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=params.dtype)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.weights[0].shape[1]:
        raise ValueError(
            f"input shape {x.shape} incompatible with first layer "
            f"(expects {params.weights[0].shape[1]} features)"
        )
    return x if not squeeze else x  # caller handles squeeze via forward()


def forward(params: Mlp, x: np.ndarray) -> np.ndarray:
    """Evaluate the network. Accepts (batch, n_in) or a single (n_in,) vector."""
    squeeze = np.asarray(x).ndim == 1
    out = _forward_cached(params, x)[0]
    return out[0] if squeeze else out


def _forward_cached(params: Mlp, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass keeping post-activation inputs of every layer for backprop."""
    if params.activation != "relu":
        raise ValueError(f"unsupported activation: {params.activation}")
    a = _check_input(params, x)
    if a.ndim == 1:
        a = a[None, :]
    acts = [a]
    n_layers = len(params.weights)
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        a = np.maximum(z, 0) if i < n_layers - 1 else z
        acts.append(a)
    return a, acts


def backward(params: Mlp, x: np.ndarray, loss_tail: np.ndarray) -> GradientBundle:
    """Exact reverse-mode gradients for loss = mean_i l_i(net(x_i)).

    loss_tail[i] holds dl_i/d(output_i), without the 1/batch factor; the
    mean over the batch is taken here.
    """
    out, acts = _forward_cached(params, x)
    tail = np.asarray(loss_tail, dtype=params.dtype)
    if tail.ndim == 1:
        tail = tail[None, :]
    if tail.shape != out.shape:
        raise ValueError(f"loss_tail shape {tail.shape} != output shape {out.shape}")
    batch = out.shape[0]
    inv_b = np.asarray(1.0 / batch, dtype=params.dtype)

    grads = zeros_like_bundle(params)
    delta = tail
    for i in range(len(params.weights) - 1, -1, -1):
        grads.weights[i] = (delta.T @ acts[i]) * inv_b
        grads.biases[i] = delta.sum(axis=0) * inv_b
        if i > 0:
            # acts[i] is the post-relu output of layer i-1; relu' = 1 where it is > 0
            delta = (delta @ params.weights[i]) * (acts[i] > 0)
    return grads


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Stable log-softmax along the last axis (max-subtracted)."""
    z = np.asarray(logits)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def flatten_params(params: Mlp) -> np.ndarray:
    """All parameters as one float64 vector (layer order: W0, b0, W1, b1, ...)."""
    parts = []
    for w, b in zip(params.weights, params.biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts).astype(np.float64)


def assign_flat(params: Mlp, vec: np.ndarray) -> None:
    """Write a flat vector (as produced by flatten_params) back into params."""
    i = 0
    for w, b in zip(params.weights, params.biases):
        w[...] = vec[i : i + w.size].reshape(w.shape).astype(params.dtype)
        i += w.size
        b[...] = vec[i : i + b.size].astype(params.dtype)
        i += b.size
    if i != vec.size:
        raise ValueError(f"flat vector length {vec.size} != parameter count {i}")


def flatten_bundle(grads: GradientBundle) -> np.ndarray:
    parts = []
    for w, b in zip(grads.weights, grads.biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts).astype(np.float64)
