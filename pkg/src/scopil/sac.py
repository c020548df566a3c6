"""Discrete soft actor-critic building blocks: twin critics with soft value
targets, exact categorical entropy, entropy-coefficient adaptation, soft
target updates, and a uniform replay buffer."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import N_ACTIONS, STATE_DIM
from .nets import GradientBundle, Mlp, backward, forward, init_mlp, log_softmax


@dataclass
class SacNets:
    """Policy, twin critics, their targets, and the entropy coefficient.

    alpha is adapted in log space (multiplicative steps), so it stays
    strictly positive through any update sequence.
    """

    policy: Mlp
    q1: Mlp
    q2: Mlp
    target_q1: Mlp
    target_q2: Mlp
    alpha: float
    target_entropy: float


def build_nets(
    rng: np.random.Generator,
    state_dim: int = STATE_DIM,
    n_actions: int = N_ACTIONS,
    hidden_sizes: tuple[int, ...] = (32, 32),
    alpha0: float = 1.0,
    dtype=np.float32,
) -> SacNets:
    sizes = [state_dim, *hidden_sizes, n_actions]
    q1 = init_mlp(sizes, rng, dtype=dtype)
    q2 = init_mlp(sizes, rng, dtype=dtype)
    if alpha0 <= 0:
        raise ValueError("alpha0 must be positive")
    return SacNets(
        policy=init_mlp(sizes, rng, dtype=dtype),
        q1=q1,
        q2=q2,
        target_q1=q1.copy(),
        target_q2=q2.copy(),
        alpha=alpha0,
        target_entropy=0.4 * math.log(n_actions),
    )


def policy_probs(policy: Mlp, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Action probabilities and log-probabilities, (batch, n_actions) each."""
    logp = log_softmax(forward(policy, states))
    return np.exp(logp), logp


def entropy(probs: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """Exact categorical entropy per state, -sum_a p log p."""
    return -(probs * logp).sum(axis=-1)


def soft_value(nets: SacNets, states: np.ndarray) -> np.ndarray:
    """pi(s)^T min(targetQ1(s), targetQ2(s)) + alpha * H(pi(.|s)) per state."""
    probs, logp = policy_probs(nets.policy, states)
    qmin = np.minimum(forward(nets.target_q1, states), forward(nets.target_q2, states))
    if probs.ndim == 1:
        return float((probs * qmin).sum() + nets.alpha * entropy(probs, logp))
    return (probs * qmin).sum(axis=1) + nets.alpha * entropy(probs, logp)


def q_targets(
    nets: SacNets,
    rewards: np.ndarray,
    next_states: np.ndarray,
    dones: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Bootstrapped targets y = r + gamma * (1 - done) * softvalue(s').
    Computed from target networks and treated as constants downstream."""
    return rewards + gamma * (1.0 - dones) * soft_value(nets, next_states)


def q_loss_and_grads(
    q_net: Mlp, states: np.ndarray, actions: np.ndarray, targets: np.ndarray
) -> tuple[float, GradientBundle]:
    """0.5 * mean (Q(s)[a] - y)^2 and its gradients for one critic."""
    if len(states) == 0:
        raise ValueError("empty batch")
    q = forward(q_net, states)
    idx = np.arange(len(actions))
    diff = q[idx, actions] - targets.astype(q.dtype)
    loss = float(0.5 * np.mean(diff**2))
    tail = np.zeros_like(q)
    tail[idx, actions] = diff
    return loss, backward(q_net, states, tail)


def alpha_update(nets: SacNets, states: np.ndarray, kappa: float) -> float:
    """Ascent on the coefficient objective mean[alpha * (targetH - H(pi(.|s)))],
    stepping log(alpha) by kappa * mean(targetH - H). Returns the new alpha."""
    probs, logp = policy_probs(nets.policy, states)
    gap = nets.target_entropy - float(np.mean(entropy(probs, logp)))
    nets.alpha *= math.exp(kappa * gap)
    return nets.alpha


def target_update(nets: SacNets, eps: float) -> None:
    """Soft update target <- eps * online + (1 - eps) * target, elementwise."""
    for online, target in ((nets.q1, nets.target_q1), (nets.q2, nets.target_q2)):
        e = online.dtype.type(eps)
        for w, tw in zip(online.weights, target.weights):
            tw *= 1 - e
            tw += e * w
        for b, tb in zip(online.biases, target.biases):
            tb *= 1 - e
            tb += e * b


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


class ReplayBuffer:
    """Fixed-capacity ring store with uniform seeded sampling."""

    def __init__(
        self,
        capacity: int,
        state_dim: int = STATE_DIM,
        seed: int | np.random.Generator | None = None,
    ):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim), dtype=np.float32)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float32)
        self.next_states = np.zeros((capacity, state_dim), dtype=np.float32)
        self.dones = np.zeros(capacity, dtype=np.float32)
        self.size = 0
        self._cursor = 0
        self._rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return self.size

    def add(self, state, action: int, reward: float, next_state, done: bool) -> None:
        i = self._cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = 1.0 if done else 0.0
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int) -> Batch:
        if n < 1:
            raise ValueError("batch size must be positive")
        if self.size < n:
            raise ValueError(f"buffer holds {self.size} transitions, need {n}")
        idx = self._rng.integers(0, self.size, size=n)
        return Batch(
            states=self.states[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            next_states=self.next_states[idx],
            dones=self.dones[idx],
        )
