"""Deterministic tilting-board simulator with constraint instrumentation.

The ball is a point mass on a board that tilts independently around two axes.
Commands add a fixed increment to the board's angular velocity per physics
substep; a zero command lets the angular velocity decay. Ball acceleration
follows the small-angle model accel = -gravity_gain * angle per axis, with
linear friction and restitution walls.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .config import N_ACTIONS, STATE_DIM, ConstraintSpec, EnvConfig

# action id -> (command_x, command_y), each command in {-1, 0, +1}
_DECODE = tuple((cx, cy) for cx in (0, 1, -1) for cy in (0, -1, 1))


def decode_action(action: int) -> tuple[int, int]:
    if not 0 <= action < N_ACTIONS:
        raise ValueError(f"action id must be in 0..{N_ACTIONS - 1}, got {action}")
    return _DECODE[action]


def encode_action(cx: int, cy: int) -> int:
    try:
        return _DECODE.index((cx, cy))
    except ValueError:
        raise ValueError(f"commands must be in {{-1,0,1}}, got ({cx}, {cy})") from None


class DoneKind(str, enum.Enum):
    RUNNING = "running"
    GOAL = "goal"
    TIMEOUT = "timeout"


class EpisodeFinishedError(RuntimeError):
    """Raised when step() is called after the episode ended."""


@dataclass(slots=True)
class RawState:
    """Un-normalized simulator state in board units."""

    bx: float
    by: float
    vx: float
    vy: float
    rx: float
    ry: float
    rvx: float
    rvy: float
    t: int = 0

    def vector(self) -> np.ndarray:
        return np.array(
            [self.bx, self.by, self.vx, self.vy, self.rx, self.ry, self.rvx, self.rvy],
            dtype=np.float64,
        )


@dataclass(slots=True)
class StepResult:
    state: np.ndarray  # normalized 8-vector
    raw: RawState
    reward: float  # normalized, in [-1, 0]
    done: DoneKind
    violation_events: tuple[bool, ...]
    violation_active: tuple[bool, ...]


def _axis_substep(
    pos: float, vel: float, angle: float, omega: float, cmd: int, cfg: EnvConfig
) -> tuple[float, float, float, float]:
    dt = cfg.substep_dt
    if cmd == 0:
        omega *= cfg.omega_decay
    else:
        omega += cmd * cfg.tilt_increment
    omega = min(max(omega, -cfg.max_omega), cfg.max_omega)
    angle = min(max(angle + omega * dt, -cfg.max_tilt), cfg.max_tilt)
    accel = -cfg.gravity_gain * angle
    vel = (vel + accel * dt) * (1.0 - cfg.friction * dt)
    pos += vel * dt
    he = cfg.board_half_extent
    if pos < -he:
        pos = -he
        if vel < 0:
            vel = -vel * cfg.restitution
    elif pos > he:
        pos = he
        if vel > 0:
            vel = -vel * cfg.restitution
    return pos, vel, angle, omega


def physics_substep(raw: RawState, commands: tuple[int, int], cfg: EnvConfig) -> RawState:
    """Advance the physics by one substep; pure, does not touch the counter."""
    cx, cy = commands
    bx, vx, rx, rvx = _axis_substep(raw.bx, raw.vx, raw.rx, raw.rvx, cx, cfg)
    by, vy, ry, rvy = _axis_substep(raw.by, raw.vy, raw.ry, raw.rvy, cy, cfg)
    return replace(raw, bx=bx, by=by, vx=vx, vy=vy, rx=rx, ry=ry, rvx=rvx, rvy=rvy)


def raw_reward(raw: RawState, done: DoneKind, cfg: EnvConfig) -> float:
    if done is DoneKind.GOAL:
        return cfg.reward_max
    if done is DoneKind.TIMEOUT:
        return cfg.reward_min
    hx, hy = cfg.hole_center
    return -math.hypot(raw.bx - hx, raw.by - hy) / cfg.max_distance


def normalize_reward(value: float, cfg: EnvConfig) -> float:
    return (value - cfg.reward_max) / (cfg.reward_max - cfg.reward_min)


def denormalize_reward(value: float, cfg: EnvConfig) -> float:
    return value * (cfg.reward_max - cfg.reward_min) + cfg.reward_max


def compute_reward(raw: RawState, done: DoneKind, cfg: EnvConfig) -> float:
    """Normalized reward in [-1, 0]: goal -> 0, timeout -> -1, otherwise the
    distance penalty mapped through the same min-max normalization."""
    return normalize_reward(raw_reward(raw, done, cfg), cfg)


def normalize_state(raw: RawState, cfg: EnvConfig) -> np.ndarray:
    """Per-dimension min-max map onto [-1, 1], clamped against numerics."""
    vec = raw.vector()
    out = np.empty(STATE_DIM, dtype=np.float64)
    for i, (lo, hi) in enumerate(cfg.bounds()):
        out[i] = 2.0 * (vec[i] - lo) / (hi - lo) - 1.0
    np.clip(out, -1.0, 1.0, out=out)
    return out


def denormalize_state(state: np.ndarray, cfg: EnvConfig, t: int = 0) -> RawState:
    vals = []
    for i, (lo, hi) in enumerate(cfg.bounds()):
        vals.append(lo + (float(state[i]) + 1.0) * 0.5 * (hi - lo))
    return RawState(*vals, t=t)


def detect_violations(
    ball: tuple[float, float], constraints: tuple[ConstraintSpec, ...]
) -> tuple[bool, ...]:
    x, y = ball
    return tuple(c.violates(x, y) for c in constraints)


class MarbleMaze:
    """Single-episode environment instance. Not thread safe; run independent
    instances for parallel rollouts."""

    def __init__(self, config: EnvConfig):
        config.validate()
        self.config = config
        self.raw: RawState | None = None
        self.done: DoneKind = DoneKind.RUNNING
        self.violation_active: tuple[bool, ...] = ()
        self.initial_violation_events: tuple[bool, ...] = ()
        self._started = False

    @property
    def n_constraints(self) -> int:
        return len(self.config.constraints)

    def reset(
        self,
        seed: int | None = None,
        ball_position: tuple[float, float] | None = None,
    ) -> np.ndarray:
        """Start a new episode. The spawn is sampled uniformly in the start
        region by a generator seeded with `seed`; `ball_position` overrides
        the sample (used to replay recorded starts)."""
        if ball_position is None:
            rng = np.random.default_rng(seed)
            x0, y0, x1, y1 = self.config.start_region
            bx = float(rng.uniform(x0, x1))
            by = float(rng.uniform(y0, y1))
        else:
            bx, by = float(ball_position[0]), float(ball_position[1])
        self.raw = RawState(bx=bx, by=by, vx=0.0, vy=0.0, rx=0.0, ry=0.0, rvx=0.0, rvy=0.0, t=0)
        self.done = DoneKind.RUNNING
        self.violation_active = detect_violations((bx, by), self.config.constraints)
        # the spawn is compared against "not active": a violating spawn counts once
        self.initial_violation_events = self.violation_active
        self._started = True
        return normalize_state(self.raw, self.config)

    def step(self, action: int) -> StepResult:
        if not self._started:
            raise EpisodeFinishedError("reset() must be called before step()")
        if self.done is not DoneKind.RUNNING:
            raise EpisodeFinishedError(f"episode already finished ({self.done.value})")
        cfg = self.config
        commands = decode_action(action)
        raw = self.raw
        captured = False
        hx, hy = cfg.hole_center
        for _ in range(cfg.substeps_per_action):
            raw = physics_substep(raw, commands, cfg)
            if math.hypot(raw.bx - hx, raw.by - hy) < cfg.hole_capture_radius:
                captured = True  # the hole captures the ball mid-step
                break
        raw = replace(raw, t=raw.t + 1)

        if captured:
            done = DoneKind.GOAL
        elif raw.t >= cfg.max_steps:
            done = DoneKind.TIMEOUT
        else:
            done = DoneKind.RUNNING
        reward = compute_reward(raw, done, cfg)

        active = detect_violations((raw.bx, raw.by), cfg.constraints)
        events = tuple(a and not p for a, p in zip(active, self.violation_active))

        self.raw = raw
        self.done = done
        self.violation_active = active
        return StepResult(
            state=normalize_state(raw, cfg),
            raw=raw,
            reward=reward,
            done=done,
            violation_events=events,
            violation_active=active,
        )
