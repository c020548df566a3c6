"""Scripted expert: plans a polyline from spawn to hole that detours around
circle constraints and stays clear of line constraints, then follows it with
a greedy one-step-lookahead controller. Episodes that miss the goal are
discarded and resampled."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .demos import DemoRecord, DemoSet
from .env import DoneKind, EnvConfig, MarbleMaze, RawState, decode_action, physics_substep

# planner margins (board units): test inflates circles by MARGIN_TEST to flag
# a segment as blocked; detour points sit MARGIN_OUT outside the circle.
MARGIN_TEST = 10.0
MARGIN_OUT = 18.0
LINE_MARGIN = 12.0
WAYPOINT_RADIUS = 24.0
LOOKAHEAD = 0.35  # seconds of velocity lookahead in the controller score


def _closest_approach(
    p: np.ndarray, q: np.ndarray, center: np.ndarray
) -> tuple[float, np.ndarray]:
    d = q - p
    denom = float(d @ d)
    if denom == 0.0:
        return 0.0, p.copy()
    t = float(np.clip(((center - p) @ d) / denom, 0.0, 1.0))
    return t, p + t * d


def _clamp_safe(point: np.ndarray, cfg: EnvConfig) -> np.ndarray:
    """Keep a waypoint on the board and off the violating side of every line."""
    he = cfg.board_half_extent - 8.0
    x = float(np.clip(point[0], -he, he))
    y = float(np.clip(point[1], -he, he))
    for c in cfg.constraints:
        if c.kind == "hline":
            y = max(y, c.level + LINE_MARGIN) if c.side == "below" else min(y, c.level - LINE_MARGIN)
        elif c.kind == "vline":
            x = max(x, c.level + LINE_MARGIN) if c.side == "left" else min(x, c.level - LINE_MARGIN)
    return np.array([x, y])


def plan_waypoints(
    cfg: EnvConfig,
    spawn: tuple[float, float],
    forced_side: str | None = None,
) -> list[tuple[float, float]]:
    """Polyline spawn -> hole detouring around every blocking circle.

    forced_side ("left"/"right") pins the detour side of the first blocking
    circle; otherwise each detour takes the side nearer the incoming path.
    """
    circles = [c for c in cfg.constraints if c.kind == "circle"]
    first_hit = {"used": False}

    def route(p: np.ndarray, q: np.ndarray, depth: int) -> list[np.ndarray]:
        if depth > 12:
            return [q]
        blocking = None
        best_t = math.inf
        for c in circles:
            center = np.array(c.center)
            t, m = _closest_approach(p, q, center)
            if float(np.hypot(*(m - center))) < c.radius + MARGIN_TEST and t < best_t:
                blocking, best_t, approach = c, t, m
        if blocking is None:
            return [q]
        center = np.array(blocking.center)
        u = approach - center
        norm = float(np.hypot(*u))
        if norm < 1e-9:
            d = q - p
            u = np.array([-d[1], d[0]])
            norm = float(np.hypot(*u))
            if norm < 1e-9:
                u, norm = np.array([1.0, 0.0]), 1.0
        u = u / norm
        if forced_side is not None and not first_hit["used"]:
            first_hit["used"] = True
            want = -1.0 if forced_side == "left" else 1.0
            if u[0] * want < 0:
                u = -u
            elif u[0] == 0.0:
                u = np.array([want, 0.0])
        detour = _clamp_safe(center + (blocking.radius + MARGIN_OUT) * u, cfg)
        return route(p, detour, depth + 1) + route(detour, q, depth + 1)

    p = np.array(spawn, dtype=float)
    goal = np.array(cfg.hole_center, dtype=float)
    points = route(p, goal, 0)
    return [(float(w[0]), float(w[1])) for w in points]


def _greedy_action(raw: RawState, waypoint: tuple[float, float], cfg: EnvConfig) -> int:
    """Pick the action whose simulated next step lands the lookahead point
    (position + LOOKAHEAD * velocity) closest to the waypoint."""
    wx, wy = waypoint
    best_action = 0
    best_score = math.inf
    for action in range(9):
        commands = decode_action(action)
        sim = raw
        for _ in range(cfg.substeps_per_action):
            sim = physics_substep(sim, commands, cfg)
        px = sim.bx + LOOKAHEAD * sim.vx
        py = sim.by + LOOKAHEAD * sim.vy
        score = (px - wx) ** 2 + (py - wy) ** 2
        if score < best_score:
            best_score = score
            best_action = action
    return best_action


@dataclass
class ExpertEpisode:
    records: list[DemoRecord]
    done: DoneKind
    seed: int
    side: str | None
    trajectory: list[tuple[float, float]]


def run_episode(
    env: MarbleMaze, seed: int, side: str | None, ep_index: int = 0
) -> ExpertEpisode:
    cfg = env.config
    state = env.reset(seed=seed)
    plan = plan_waypoints(cfg, (env.raw.bx, env.raw.by), forced_side=side)
    wp_i = 0
    records: list[DemoRecord] = []
    trajectory = [(env.raw.bx, env.raw.by)]
    viol_before = env.violation_active
    t = 0
    while env.done is DoneKind.RUNNING:
        while (
            wp_i < len(plan) - 1
            and math.hypot(env.raw.bx - plan[wp_i][0], env.raw.by - plan[wp_i][1])
            < WAYPOINT_RADIUS
        ):
            wp_i += 1
        action = _greedy_action(env.raw, plan[wp_i], cfg)
        pre = env.raw
        res = env.step(action)
        records.append(
            DemoRecord(
                ep=ep_index,
                t=t,
                state=[float(v) for v in state],
                action=action,
                reward=float(res.reward),
                bx=pre.bx,
                by=pre.by,
                viol=list(viol_before),
            )
        )
        state = res.state
        viol_before = res.violation_active
        trajectory.append((res.raw.bx, res.raw.by))
        t += 1
    return ExpertEpisode(
        records=records, done=env.done, seed=seed, side=side, trajectory=trajectory
    )


def scripted_expert(cfg: EnvConfig, n_games: int, seed: int = 0) -> DemoSet:
    """Generate n_games goal-reaching demonstrations. On the "two-modes"
    setting the detour side of the first circle alternates per episode;
    elsewhere each detour takes the side nearer the incoming path."""
    if n_games < 1:
        raise ValueError("n_games must be positive")
    env = MarbleMaze(cfg)
    alternate = cfg.setting == "two-modes"
    rng = np.random.default_rng(seed)
    records: list[DemoRecord] = []
    episode_seeds: list[int] = []
    sides: list[str] = []
    done_games = 0
    attempts = 0
    max_attempts = 10 * n_games
    while done_games < n_games:
        if attempts >= max_attempts:
            raise RuntimeError(
                f"scripted expert produced {done_games}/{n_games} games in {attempts} attempts"
            )
        attempts += 1
        ep_seed = int(rng.integers(0, 2**63 - 1))
        side = ("left" if done_games % 2 == 0 else "right") if alternate else None
        episode = run_episode(env, ep_seed, side, ep_index=done_games)
        if episode.done is not DoneKind.GOAL:
            continue
        records.extend(episode.records)
        episode_seeds.append(ep_seed)
        sides.append(side if side is not None else _observed_side(episode.trajectory, cfg))
        done_games += 1
    return DemoSet(
        records=records,
        setting=cfg.setting,
        provenance="scripted",
        seed=seed,
        constraints_digest=cfg.constraints_digest(),
        episode_seeds=episode_seeds,
        detour_sides=sides,
    )


def _observed_side(trajectory: list[tuple[float, float]], cfg: EnvConfig) -> str:
    """Label which side of the first circle the trajectory passed."""
    circles = [c for c in cfg.constraints if c.kind == "circle"]
    if not circles:
        return "none"
    cx, cy = circles[0].center
    best = min(trajectory, key=lambda p: (p[0] - cx) ** 2 + (p[1] - cy) ** 2)
    return "left" if best[0] < cx else "right"
