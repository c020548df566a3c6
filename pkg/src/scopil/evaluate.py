"""Evaluation protocol: n-game rollouts with per-constraint violation counts
and frequencies, trajectory capture, macro averaging, mode-coverage analysis,
and CSV/JSON export."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint
from .demos import DemoSet
from .env import (
    ConstraintSpec,
    DoneKind,
    EnvConfig,
    MarbleMaze,
    N_ACTIONS,
    STATE_DIM,
    denormalize_reward,
)
from .nets import Mlp
from .sac import policy_probs

LABELS = ("H", "V", "C")


@dataclass
class GameRow:
    experiment: int
    game: int
    reward: float  # de-normalized episode return
    counts: dict[str, int]  # violations per constraint label
    steps: int
    length: float
    done: str

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def freq(self, label: str | None = None) -> float:
        n = self.total if label is None else self.counts.get(label, 0)
        return n / self.steps if self.steps else 0.0


@dataclass
class Trajectory:
    experiment: int
    game: int
    positions: list[tuple[float, float]]  # steps + 1 points, spawn first
    viol_active: list[tuple[bool, ...]]  # parallel to positions


@dataclass
class ModeCoverage:
    left_share: float
    right_share: float
    n_left: int
    n_right: int
    n_unclassified: int


@dataclass
class EvalReport:
    setting: str
    n_games: int
    seeds: tuple[int, ...]
    games: list[GameRow]
    trajectories: list[Trajectory] = field(repr=False, default_factory=list)
    summary: dict[str, tuple[float, float]] = field(default_factory=dict)
    mode_coverage: ModeCoverage | None = None


METRICS = ("Rwd", "H", "V", "C", "Viol", "F_H", "F_V", "F_C", "F_all", "Length", "Steps")


def _game_metrics(row: GameRow) -> dict[str, float]:
    return {
        "Rwd": row.reward,
        "H": row.counts.get("H", 0),
        "V": row.counts.get("V", 0),
        "C": row.counts.get("C", 0),
        "Viol": row.total,
        "F_H": row.freq("H"),
        "F_V": row.freq("V"),
        "F_C": row.freq("C"),
        "F_all": row.freq(),
        "Length": row.length,
        "Steps": row.steps,
    }


def summarize(games: list[GameRow], seeds: tuple[int, ...]) -> dict[str, tuple[float, float]]:
    """Macro averaging: mean within each experiment first, then across
    experiments. With one experiment the spread is across games."""
    summary: dict[str, tuple[float, float]] = {}
    by_exp: dict[int, list[GameRow]] = {}
    for g in games:
        by_exp.setdefault(g.experiment, []).append(g)
    for metric in METRICS:
        per_exp = [
            float(np.mean([_game_metrics(g)[metric] for g in rows]))
            for rows in by_exp.values()
        ]
        if len(per_exp) > 1:
            summary[metric] = (float(np.mean(per_exp)), float(np.std(per_exp)))
        else:
            vals = [_game_metrics(g)[metric] for g in games]
            summary[metric] = (float(np.mean(vals)), float(np.std(vals)))
    return summary


def greedy_action(policy: Mlp, state: np.ndarray) -> int:
    probs, _ = policy_probs(policy, state.astype(np.float32))
    return int(np.argmax(probs))


def sampled_action(policy: Mlp, state: np.ndarray, rng: np.random.Generator) -> int:
    probs, _ = policy_probs(policy, state.astype(np.float32))
    p = probs.astype(np.float64)
    p /= p.sum()
    return int(rng.choice(len(p), p=p))


def _check_arch(policy: Mlp) -> None:
    sizes = policy.sizes
    if sizes[0] != STATE_DIM or sizes[-1] != N_ACTIONS:
        raise ValueError(
            f"policy maps {sizes[0]} -> {sizes[-1]}, environment needs "
            f"{STATE_DIM} -> {N_ACTIONS}"
        )


def rollout_game(
    policy: Mlp,
    env: MarbleMaze,
    experiment: int,
    game: int,
    spawn_seed: int | None = None,
    ball_position: tuple[float, float] | None = None,
    greedy: bool = True,
    rng: np.random.Generator | None = None,
) -> tuple[GameRow, Trajectory]:
    cfg = env.config
    labels = [c.label for c in cfg.constraints]
    count_active = cfg.violation_count_mode == "active"
    obs = env.reset(seed=spawn_seed, ball_position=ball_position)
    counts = {lbl: 0 for lbl in LABELS}
    for lbl, v in zip(labels, env.violation_active):
        counts[lbl] += int(v)
    positions = [(env.raw.bx, env.raw.by)]
    viols = [env.violation_active]
    reward = 0.0
    length = 0.0
    steps = 0
    while env.done is DoneKind.RUNNING:
        action = (
            greedy_action(policy, obs) if greedy else sampled_action(policy, obs, rng)
        )
        res = env.step(action)
        obs = res.state
        flags = res.violation_active if count_active else res.violation_events
        for lbl, v in zip(labels, flags):
            counts[lbl] += int(v)
        prev = positions[-1]
        positions.append((res.raw.bx, res.raw.by))
        viols.append(res.violation_active)
        length += math.hypot(res.raw.bx - prev[0], res.raw.by - prev[1])
        reward += denormalize_reward(res.reward, cfg)
        steps += 1
    row = GameRow(
        experiment=experiment,
        game=game,
        reward=reward,
        counts=counts,
        steps=steps,
        length=length,
        done=env.done.value,
    )
    return row, Trajectory(experiment, game, positions, viols)


def evaluate(
    policy: Mlp,
    cfg: EnvConfig,
    n_games: int = 40,
    seeds: tuple[int, ...] = (0,),
    demos: DemoSet | None = None,
    greedy: bool = True,
) -> EvalReport:
    """Roll out n_games per seed. When a demonstration set is supplied, games
    start from the demonstrated episodes' initial ball positions (cycled);
    otherwise spawns are seeded random. Greedy action selection by default;
    greedy=False samples from the policy."""
    _check_arch(policy)
    env = MarbleMaze(cfg)
    starts: list[tuple[float, float]] | None = None
    if demos is not None:
        starts = [(ep[0].bx, ep[0].by) for ep in demos.episodes()]
        if not starts:
            raise ValueError("empty demonstration set")
    games: list[GameRow] = []
    trajectories: list[Trajectory] = []
    for exp_i, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        for g in range(n_games):
            if starts is not None:
                row, traj = rollout_game(
                    policy,
                    env,
                    exp_i,
                    g,
                    ball_position=starts[g % len(starts)],
                    greedy=greedy,
                    rng=rng,
                )
            else:
                row, traj = rollout_game(
                    policy,
                    env,
                    exp_i,
                    g,
                    spawn_seed=int(np.random.default_rng((seed, g)).integers(2**63 - 1)),
                    greedy=greedy,
                    rng=rng,
                )
            games.append(row)
            trajectories.append(traj)
    report = EvalReport(
        setting=cfg.setting,
        n_games=n_games,
        seeds=tuple(seeds),
        games=games,
        trajectories=trajectories,
        summary=summarize(games, tuple(seeds)),
    )
    circles = [c for c in cfg.constraints if c.kind == "circle"]
    if circles:
        report.mode_coverage = mode_coverage(trajectories, circles[0])
    return report


def evaluate_checkpoint(
    path: str | Path,
    cfg: EnvConfig,
    n_games: int = 40,
    seeds: tuple[int, ...] = (0,),
    demos: DemoSet | None = None,
    greedy: bool = True,
) -> EvalReport:
    policy = load_checkpoint(path).nets.policy
    return evaluate(policy, cfg, n_games=n_games, seeds=seeds, demos=demos, greedy=greedy)


def mode_coverage(
    trajectories: list[Trajectory] | list[list[tuple[float, float]]],
    circle: ConstraintSpec,
) -> ModeCoverage:
    """Classify each trajectory by the side of the circle center it passes on
    (sign of x - center_x at the closest approach within the circle's y-band).
    Trajectories that never enter the y-band stay unclassified."""
    if circle.kind != "circle":
        raise ValueError("mode coverage needs a circle constraint")
    cx, cy = circle.center
    n_left = n_right = n_unclassified = 0
    for traj in trajectories:
        points = traj.positions if isinstance(traj, Trajectory) else traj
        in_band = [(x, y) for x, y in points if abs(y - cy) <= circle.radius]
        if not in_band:
            n_unclassified += 1
            continue
        x, _ = min(in_band, key=lambda p: (p[0] - cx) ** 2 + (p[1] - cy) ** 2)
        if x < cx:
            n_left += 1
        elif x > cx:
            n_right += 1
        else:
            n_unclassified += 1
    classified = n_left + n_right
    return ModeCoverage(
        left_share=n_left / classified if classified else 0.0,
        right_share=n_right / classified if classified else 0.0,
        n_left=n_left,
        n_right=n_right,
        n_unclassified=n_unclassified,
    )


_REPORT_COLUMNS = ("kind", "experiment", "game", *METRICS, "done")


def export(report: EvalReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.csv (game rows + summary rows), trajectories.csv, and
    summary.json; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.csv"
    with report_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_REPORT_COLUMNS)
        for g in report.games:
            m = _game_metrics(g)
            writer.writerow(
                ["game", g.experiment, g.game, *[f"{m[k]:.6g}" for k in METRICS], g.done]
            )
        for kind, idx in (("mean", 0), ("std", 1)):
            writer.writerow(
                ["summary_" + kind, "", ""]
                + [f"{report.summary[k][idx]:.6g}" for k in METRICS]
                + [""]
            )

    traj_path = out_dir / "trajectories.csv"
    n_constraints = (
        len(report.trajectories[0].viol_active[0]) if report.trajectories else 0
    )
    with traj_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["experiment", "ep", "t", "bx", "by"]
            + [f"viol_{i}" for i in range(n_constraints)]
        )
        for traj in report.trajectories:
            for t, ((bx, by), flags) in enumerate(zip(traj.positions, traj.viol_active)):
                writer.writerow(
                    [traj.experiment, traj.game, t, f"{bx:.6f}", f"{by:.6f}"]
                    + [int(v) for v in flags]
                )

    summary_path = out_dir / "summary.json"
    payload = {
        "setting": report.setting,
        "n_games": report.n_games,
        "seeds": list(report.seeds),
        "metrics": {k: {"mean": m, "std": s} for k, (m, s) in report.summary.items()},
    }
    if report.mode_coverage is not None:
        mc = report.mode_coverage
        payload["mode_coverage"] = {
            "left_share": mc.left_share,
            "right_share": mc.right_share,
            "n_left": mc.n_left,
            "n_right": mc.n_right,
            "n_unclassified": mc.n_unclassified,
        }
    summary_path.write_text(json.dumps(payload, indent=2))
    return {"report": report_path, "trajectories": traj_path, "summary": summary_path}
