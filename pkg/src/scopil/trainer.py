"""Constrained imitation trainer: the soft actor-critic objective combined
with a multiplier-weighted pull toward expert demonstrations, alternating
truncated ascent/descent over policy, critics, and both multipliers.

Per gradient step the update order is fixed: critics, then policy, then the
entropy coefficient, then the demonstration multiplier, then the target
networks. Ablation switches disable multiplier adaptation and/or the entropy
share inside the demonstration term.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .demos import DemoSet
from .env import MarbleMaze, DoneKind, denormalize_reward
from .nets import GradientBundle, Mlp, backward, forward
from .optim import AdamState, init_adam, opt_step
from .sac import (
    ReplayBuffer,
    SacNets,
    alpha_update,
    build_nets,
    entropy,
    policy_probs,
    q_loss_and_grads,
    q_targets,
    target_update,
)

log = logging.getLogger("scopil.trainer")

ABLATIONS = ("full", "fixed_lambda", "no_entropy_in_constraint", "both")


class TrainingDiverged(RuntimeError):
    """Raised when a loss or multiplier goes non-finite; a diagnostic
    checkpoint is written before raising."""


@dataclass
class TrainerConfig:
    setting: str = "simple"
    total_steps: int = 1_000_000
    batch_size: int = 256
    demo_batch_size: int = 256
    buffer_capacity: int = 1_000_000
    lr: float = 0.0003  # network learning rate (policy and critics)
    alpha_lr: float = 0.002  # entropy-coefficient step
    gamma: float = 0.99
    target_update_eps: float = 0.005
    lambda0: float = 1.05
    lambda_lr: float | None = None  # defaults to lr
    lambda_clamp: tuple[float, float] = (1e-6, 1e3)
    delta: float = 0.0  # demonstration-distance budget
    alpha0: float = 1.0
    hidden_sizes: tuple[int, ...] = (32, 32)
    grad_steps_per_env_step: int = 1
    ablation: str = "full"
    sac_only: bool = False  # plain actor-critic: no demos, no multiplier term
    seed: int = 0
    checkpoint_every: int = 10_000

    def __post_init__(self):
        self.hidden_sizes = tuple(self.hidden_sizes)
        self.lambda_clamp = tuple(self.lambda_clamp)
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}")
        for name in ("lr", "alpha_lr", "gamma", "target_update_eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")

    @property
    def effective_lambda_lr(self) -> float:
        return self.lr if self.lambda_lr is None else self.lambda_lr

    @property
    def include_constraint_entropy(self) -> bool:
        return self.ablation not in ("no_entropy_in_constraint", "both")

    @property
    def adapt_lambda(self) -> bool:
        return self.ablation not in ("fixed_lambda", "both")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        d["lambda_clamp"] = list(self.lambda_clamp)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainerConfig":
        return cls(**d)


def constraint_term(
    policy: Mlp,
    alpha: float,
    demo_states: np.ndarray,
    demo_actions: np.ndarray,
    delta: float = 0.0,
    include_entropy: bool = True,
) -> float:
    """mean[-log pi(a|s)] - alpha * mean[H(pi(.|s))] - delta over demo pairs.

    The log-likelihood term is the divergence from the demonstrated policy
    under the deterministic-expert assumption; the entropy share is dropped
    when include_entropy is False."""
    if len(demo_states) == 0:
        raise ValueError("empty demo batch")
    probs, logp = policy_probs(policy, demo_states)
    nll = -float(np.mean(logp[np.arange(len(demo_actions)), demo_actions]))
    term = nll - delta
    if include_entropy:
        term -= alpha * float(np.mean(entropy(probs, logp)))
    return term


def _sac_policy_tail(
    nets: SacNets, states: np.ndarray
) -> tuple[np.ndarray, float, float]:
    """Per-sample d/d(logits) of -(alpha H + pi^T min Q) plus the batch means
    of the objective pieces (for the loss value)."""
    probs, logp = policy_probs(nets.policy, states)
    qmin = np.minimum(forward(nets.q1, states), forward(nets.q2, states))
    h = entropy(probs, logp)
    pq = (probs * qmin).sum(axis=1)
    alpha = probs.dtype.type(nets.alpha)
    # d(alpha H + p.q)/dz_j = p_j [ (q_j - p.q) - alpha (logp_j + H) ]
    tail = probs * (alpha * (logp + h[:, None]) - qmin + pq[:, None])
    sac_term = float(np.mean(nets.alpha * h + pq))
    return tail, sac_term, float(np.mean(h))


def _constraint_tail(
    nets: SacNets, demo_states: np.ndarray, demo_actions: np.ndarray, include_entropy: bool
) -> tuple[np.ndarray, float, float]:
    """Per-sample d/d(logits) of [-log pi(a|s) - alpha H] plus batch means of
    the demo negative log-likelihood and entropy."""
    probs, logp = policy_probs(nets.policy, demo_states)
    idx = np.arange(len(demo_actions))
    tail = probs.copy()
    tail[idx, demo_actions] -= 1.0  # d(-logp_a)/dz = p - onehot(a)
    h = entropy(probs, logp)
    if include_entropy:
        alpha = probs.dtype.type(nets.alpha)
        tail += alpha * probs * (logp + h[:, None])
    nll = -float(np.mean(logp[idx, demo_actions]))
    return tail, nll, float(np.mean(h))


def lagrangian_loss_and_grads(
    nets: SacNets,
    lam: float,
    replay_states: np.ndarray,
    demo_states: np.ndarray | None,
    demo_actions: np.ndarray | None,
    delta: float = 0.0,
    include_entropy: bool = True,
) -> tuple[float, GradientBundle]:
    """Policy loss -E_B[alpha H + pi^T min Q] + lambda * constraint term, with
    exact gradients for the policy parameters only (critics, alpha, and
    lambda are constants in this pass). Demo inputs of None drop the
    multiplier term entirely (the plain actor-critic configuration)."""
    if len(replay_states) == 0:
        raise ValueError("empty replay batch")
    sac_tail, sac_term, _ = _sac_policy_tail(nets, replay_states)
    grads = backward(nets.policy, replay_states, sac_tail)
    loss = -sac_term
    if demo_states is not None:
        if demo_actions is None or len(demo_states) == 0:
            raise ValueError("empty demo batch")
        demo_tail, nll, demo_h = _constraint_tail(nets, demo_states, demo_actions, include_entropy)
        lam_t = demo_tail.dtype.type(lam)
        grads.add_(backward(nets.policy, demo_states, lam_t * demo_tail))
        term = nll - delta - (nets.alpha * demo_h if include_entropy else 0.0)
        loss += lam * term
    return loss, grads


def lambda_update(
    lam: float,
    term: float,
    lr: float,
    clamp: tuple[float, float],
) -> float:
    """Linear ascent on g(lambda) = lambda * constraint_term, then clamp."""
    lo, hi = clamp
    return min(max(lam + lr * term, lo), hi)


@dataclass
class TrainerState:
    config: TrainerConfig
    nets: SacNets
    opts: dict[str, AdamState]
    lam: float
    buffer: ReplayBuffer
    demos: DemoSet | None
    demo_states: np.ndarray | None
    demo_actions: np.ndarray | None
    rng_action: np.random.Generator
    rng_demo: np.random.Generator
    rng_env: np.random.Generator
    step: int = 0
    episode: int = 0
    grad_steps: int = 0


def init_trainer_state(config: TrainerConfig, demos: DemoSet | None) -> TrainerState:
    if config.sac_only:
        demos = None
    elif demos is None or len(demos.records) == 0:
        raise ValueError("training needs a nonempty demonstration set (or sac_only)")
    seq = np.random.SeedSequence(config.seed)
    rng_init, rng_action, rng_replay, rng_demo, rng_env = (
        np.random.default_rng(s) for s in seq.spawn(5)
    )
    nets = build_nets(rng_init, hidden_sizes=config.hidden_sizes, alpha0=config.alpha0)
    opts = {
        "policy": init_adam(nets.policy, config.lr),
        "q1": init_adam(nets.q1, config.lr),
        "q2": init_adam(nets.q2, config.lr),
    }
    buffer = ReplayBuffer(config.buffer_capacity, seed=rng_replay)
    demo_states = demo_actions = None
    if demos is not None:
        demo_states, demo_actions = demos.arrays()
    return TrainerState(
        config=config,
        nets=nets,
        opts=opts,
        lam=config.lambda0,
        buffer=buffer,
        demos=demos,
        demo_states=demo_states,
        demo_actions=demo_actions,
        rng_action=rng_action,
        rng_demo=rng_demo,
        rng_env=rng_env,
    )


def select_action(
    nets: SacNets, state: np.ndarray, rng: np.random.Generator, greedy: bool = False
) -> tuple[int, float]:
    """Sample (or argmax) an action; returns (action, policy entropy at s)."""
    probs, logp = policy_probs(nets.policy, state.astype(np.float32))
    h = float(-(probs * logp).sum())
    if greedy:
        return int(np.argmax(probs)), h
    p = probs.astype(np.float64)
    p /= p.sum()
    return int(rng.choice(len(p), p=p)), h


def demo_nll(nets: SacNets, demo_states: np.ndarray, demo_actions: np.ndarray) -> float:
    """Mean -log pi(a|s) over a full demonstration set."""
    _, logp = policy_probs(nets.policy, demo_states)
    return -float(np.mean(logp[np.arange(len(demo_actions)), demo_actions]))


def gradient_step(state: TrainerState) -> dict:
    """One full update in the fixed order: critics, policy, entropy
    coefficient, demonstration multiplier, target networks."""
    cfg = state.config
    nets = state.nets
    batch = state.buffer.sample(cfg.batch_size)

    # critics
    y = q_targets(nets, batch.rewards, batch.next_states, batch.dones, cfg.gamma)
    q1_loss, q1_grads = q_loss_and_grads(nets.q1, batch.states, batch.actions, y)
    q2_loss, q2_grads = q_loss_and_grads(nets.q2, batch.states, batch.actions, y)
    if not (math.isfinite(q1_loss) and math.isfinite(q2_loss)):
        raise TrainingDiverged(
            f"non-finite critic loss at grad step {state.grad_steps}: "
            f"q1={q1_loss} q2={q2_loss}"
        )
    opt_step(nets.q1, q1_grads, state.opts["q1"])
    opt_step(nets.q2, q2_grads, state.opts["q2"])

    # policy against the freshly updated critics
    if state.demo_states is not None:
        idx = state.rng_demo.integers(0, len(state.demo_actions), size=cfg.demo_batch_size)
        d_states, d_actions = state.demo_states[idx], state.demo_actions[idx]
    else:
        d_states = d_actions = None
    loss, grads = lagrangian_loss_and_grads(
        nets,
        state.lam,
        batch.states,
        d_states,
        d_actions,
        delta=cfg.delta,
        include_entropy=cfg.include_constraint_entropy,
    )
    opt_step(nets.policy, grads, state.opts["policy"])

    # entropy coefficient, on the replay batch under the updated policy
    alpha_update(nets, batch.states, cfg.alpha_lr)

    # demonstration multiplier, on the demo batch under the updated policy
    term = float("nan")
    if d_states is not None:
        term = constraint_term(
            nets.policy,
            nets.alpha,
            d_states,
            d_actions,
            delta=cfg.delta,
            include_entropy=cfg.include_constraint_entropy,
        )
        if cfg.adapt_lambda:
            state.lam = lambda_update(
                state.lam, term, cfg.effective_lambda_lr, cfg.lambda_clamp
            )

    target_update(nets, cfg.target_update_eps)
    state.grad_steps += 1

    if not (math.isfinite(loss) and math.isfinite(nets.alpha) and math.isfinite(state.lam)):
        raise TrainingDiverged(
            f"non-finite update at grad step {state.grad_steps}: "
            f"loss={loss} alpha={nets.alpha} lambda={state.lam}"
        )
    return {
        "loss": loss,
        "q1_loss": q1_loss,
        "q2_loss": q2_loss,
        "constraint_term": term,
        "alpha": nets.alpha,
        "lambda": state.lam,
    }


METRIC_COLUMNS = (
    "step",
    "episode",
    "reward",
    "H_viol",
    "V_viol",
    "C_viol",
    "F_all",
    "demo_nll",
    "alpha",
    "lambda",
    "entropy",
)


@dataclass
class TrainResult:
    out_dir: Path
    metrics_path: Path
    checkpoint_paths: list[Path]
    final_checkpoint: Path
    steps: int
    episodes: int
    state: TrainerState = field(repr=False)


def train(
    config: TrainerConfig,
    env: MarbleMaze,
    demos: DemoSet | None,
    out_dir: str | Path,
) -> TrainResult:
    """Run the full training loop and persist checkpoints plus a per-episode
    metrics stream (CSV)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_dir = out_dir / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)

    if demos is not None and not config.sac_only and demos.setting != env.config.setting:
        log.warning(
            "demo set tagged %r but environment preset is %r",
            demos.setting,
            env.config.setting,
        )

    state = init_trainer_state(config, demos)
    labels = [c.label for c in env.config.constraints]
    count_active = env.config.violation_count_mode == "active"

    checkpoints: list[Path] = []

    def write_ckpt(tag: str | None = None) -> Path:
        name = tag if tag is not None else f"ckpt_{state.step:09d}.json"
        path = ckpt_dir / name
        meta = {
            "setting": env.config.setting,
            "episode": state.episode,
            "ablation": config.ablation,
            "sac_only": config.sac_only,
        }
        if state.demo_states is not None:
            meta["demo_nll"] = demo_nll(state.nets, state.demo_states, state.demo_actions)
        save_checkpoint(path, state.nets, state.opts, state.lam, state.step, meta)
        return path

    checkpoints.append(write_ckpt())
    next_ckpt = config.checkpoint_every

    metrics_path = out_dir / "metrics.csv"
    with metrics_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)

        while state.step < config.total_steps:
            spawn_seed = int(state.rng_env.integers(0, 2**63 - 1))
            obs = env.reset(seed=spawn_seed)
            # at the spawn, entry events and active flags coincide
            ep_events = [int(v) for v in env.violation_active]
            ep_reward_raw = 0.0
            ep_entropy = 0.0
            ep_steps = 0

            while env.done is DoneKind.RUNNING and state.step < config.total_steps:
                action, h = select_action(state.nets, obs, state.rng_action)
                res = env.step(action)
                state.buffer.add(
                    obs, action, res.reward, res.state, res.done is not DoneKind.RUNNING
                )
                obs = res.state
                flags = res.violation_active if count_active else res.violation_events
                ep_events = [e + int(v) for e, v in zip(ep_events, flags)]
                ep_reward_raw += denormalize_reward(res.reward, env.config)
                ep_entropy += h
                ep_steps += 1
                state.step += 1

            try:
                for _ in range(ep_steps * config.grad_steps_per_env_step):
                    if len(state.buffer) >= config.batch_size:
                        gradient_step(state)
            except (TrainingDiverged, FloatingPointError) as exc:
                write_ckpt("ckpt_diagnostic.json")
                raise TrainingDiverged(str(exc)) from exc

            state.episode += 1
            total_events = sum(ep_events)
            by_label = {lbl: 0 for lbl in ("H", "V", "C")}
            for lbl, n in zip(labels, ep_events):
                by_label[lbl] += n
            nll = (
                demo_nll(state.nets, state.demo_states, state.demo_actions)
                if state.demo_states is not None
                else float("nan")
            )
            writer.writerow(
                [
                    state.step,
                    state.episode,
                    f"{ep_reward_raw:.6f}",
                    by_label["H"],
                    by_label["V"],
                    by_label["C"],
                    f"{total_events / max(ep_steps, 1):.6f}",
                    f"{nll:.6f}",
                    f"{state.nets.alpha:.8g}",
                    f"{state.lam:.8g}",
                    f"{ep_entropy / max(ep_steps, 1):.6f}",
                ]
            )
            if state.step >= next_ckpt:
                checkpoints.append(write_ckpt())
                next_ckpt += config.checkpoint_every

    final = write_ckpt("ckpt_final.json")
    checkpoints.append(final)
    return TrainResult(
        out_dir=out_dir,
        metrics_path=metrics_path,
        checkpoint_paths=checkpoints,
        final_checkpoint=final,
        steps=state.step,
        episodes=state.episode,
        state=state,
    )
