"""Demonstration persistence, validation, sampling, and summary statistics.

File format: JSONL. The first line is a header
    {"setting": ..., "provenance": ..., "seed": ..., "constraints_digest": ...}
and every following line is one record
    {"ep": int, "t": int, "s": [8 floats], "a": int, "r": float,
     "bx": float, "by": float, "viol": [bools]}

Records store the normalized state the agent saw before the action, the
action taken, the normalized reward received, plus the raw ball position and
the active violation flags of that state (what metrics and rendering need).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import N_ACTIONS, STATE_DIM, EnvConfig, denormalize_reward, load_preset

HEADER_FIELDS = ("setting", "provenance", "seed", "constraints_digest")
RECORD_FIELDS = ("ep", "t", "s", "a", "r", "bx", "by", "viol")


class DemoValidationError(ValueError):
    """Carries every offending line: [(line_number, message), ...]."""

    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        lines = "; ".join(f"line {n}: {msg}" for n, msg in problems)
        super().__init__(f"invalid demonstration file ({len(problems)} problem(s)): {lines}")


@dataclass
class DemoRecord:
    ep: int
    t: int
    state: list[float]  # 8 normalized components
    action: int
    reward: float
    bx: float
    by: float
    viol: list[bool]

    def to_json(self) -> str:
        return json.dumps(
            {
                "ep": self.ep,
                "t": self.t,
                "s": self.state,
                "a": self.action,
                "r": self.reward,
                "bx": self.bx,
                "by": self.by,
                "viol": self.viol,
            }
        )


@dataclass
class DemoSet:
    records: list[DemoRecord]
    setting: str
    provenance: str
    seed: int | None
    constraints_digest: str
    # populated by the scripted generator only; not serialized
    episode_seeds: list[int] | None = None
    detour_sides: list[str] | None = None
    _arrays: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def episodes(self) -> list[list[DemoRecord]]:
        """Records grouped per episode, in file order."""
        out: list[list[DemoRecord]] = []
        current_ep = None
        for r in self.records:
            if r.ep != current_ep:
                out.append([])
                current_ep = r.ep
            out[-1].append(r)
        return out

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(states (N,8) float32, actions (N,) int64), cached."""
        if self._arrays is None:
            states = np.array([r.state for r in self.records], dtype=np.float32)
            actions = np.array([r.action for r in self.records], dtype=np.int64)
            self._arrays = (states, actions)
        return self._arrays


def _validate_record(obj: dict, n_viol: int | None) -> tuple[DemoRecord | None, str | None]:
    for key in RECORD_FIELDS:
        if key not in obj:
            return None, f"missing field {key!r}"
    if not isinstance(obj["ep"], int) or obj["ep"] < 0:
        return None, f"ep must be a nonnegative integer, got {obj['ep']!r}"
    if not isinstance(obj["t"], int) or obj["t"] < 0:
        return None, f"t must be a nonnegative integer, got {obj['t']!r}"
    s = obj["s"]
    if not isinstance(s, list) or len(s) != STATE_DIM:
        return None, f"s must be a list of {STATE_DIM} floats"
    for i, v in enumerate(s):
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            return None, f"s[{i}] is not a finite number"
        if not -1.0 <= v <= 1.0:
            return None, f"s[{i}]={v} outside [-1, 1]"
    a = obj["a"]
    if not isinstance(a, int) or not 0 <= a < N_ACTIONS:
        return None, f"action id {a!r} outside 0..{N_ACTIONS - 1}"
    r = obj["r"]
    if not isinstance(r, (int, float)) or not -1.0 <= r <= 0.0:
        return None, f"reward {r!r} outside [-1, 0]"
    for key in ("bx", "by"):
        if not isinstance(obj[key], (int, float)) or not math.isfinite(obj[key]):
            return None, f"{key} is not a finite number"
    viol = obj["viol"]
    if not isinstance(viol, list) or not all(isinstance(v, bool) for v in viol):
        return None, "viol must be a list of booleans"
    if n_viol is not None and len(viol) != n_viol:
        return None, f"viol has {len(viol)} flags, earlier records have {n_viol}"
    return (
        DemoRecord(
            ep=obj["ep"],
            t=obj["t"],
            state=[float(v) for v in s],
            action=a,
            reward=float(r),
            bx=float(obj["bx"]),
            by=float(obj["by"]),
            viol=viol,
        ),
        None,
    )


def validate_records(records: list[DemoRecord]) -> list[tuple[int, str]]:
    """Sequence-level checks (episode contiguity, timestep order); positions
    are 0-based record indexes."""
    problems: list[tuple[int, str]] = []
    seen_eps: set[int] = set()
    prev_ep = None
    prev_t = None
    for i, r in enumerate(records):
        if r.ep != prev_ep:
            if r.ep in seen_eps:
                problems.append((i, f"episode {r.ep} is not contiguous"))
            seen_eps.add(r.ep)
            if r.t != 0:
                problems.append((i, f"episode {r.ep} starts at t={r.t}, expected 0"))
            prev_ep, prev_t = r.ep, r.t
            continue
        if r.t <= prev_t:
            problems.append((i, f"t not increasing within episode {r.ep} ({prev_t} -> {r.t})"))
        prev_t = r.t
    return problems


def load(path: str | Path) -> DemoSet:
    """Load and fully validate a demonstration file; failures list every
    offending line by its 1-based line number."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise DemoValidationError([(1, "empty file, expected a header line")])
    problems: list[tuple[int, str]] = []

    try:
        header = json.loads(lines[0])
        if not isinstance(header, dict):
            raise TypeError
    except (json.JSONDecodeError, TypeError):
        raise DemoValidationError([(1, "header line is not a JSON object")]) from None
    for key in HEADER_FIELDS:
        if key not in header:
            problems.append((1, f"header missing field {key!r}"))

    records: list[DemoRecord] = []
    line_of_record: list[int] = []
    n_viol: int | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append((lineno, f"malformed JSON ({exc.msg})"))
            continue
        if not isinstance(obj, dict):
            problems.append((lineno, "record is not a JSON object"))
            continue
        record, err = _validate_record(obj, n_viol)
        if err is not None:
            problems.append((lineno, err))
            continue
        if n_viol is None:
            n_viol = len(record.viol)
        records.append(record)
        line_of_record.append(lineno)

    for idx, msg in validate_records(records):
        problems.append((line_of_record[idx], msg))
    if problems:
        raise DemoValidationError(sorted(problems))
    return DemoSet(
        records=records,
        setting=header.get("setting", ""),
        provenance=header.get("provenance", ""),
        seed=header.get("seed"),
        constraints_digest=header.get("constraints_digest", ""),
    )


def save(demos: DemoSet, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "setting": demos.setting,
        "provenance": demos.provenance,
        "seed": demos.seed,
        "constraints_digest": demos.constraints_digest,
    }
    with path.open("w") as fh:
        fh.write(json.dumps(header) + "\n")
        for r in demos.records:
            fh.write(r.to_json() + "\n")


def sample_batch(
    demos: DemoSet, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """n (state, action) pairs drawn uniformly with replacement."""
    if n < 1:
        raise ValueError("batch size must be positive")
    if not demos.records:
        raise ValueError("empty demonstration set")
    states, actions = demos.arrays()
    idx = rng.integers(0, len(actions), size=n)
    return states[idx], actions[idx]


@dataclass
class DemoStats:
    n_pairs: int
    n_episodes: int
    reward_mean: float
    reward_std: float
    length_mean: float
    length_std: float
    steps_mean: float
    steps_std: float

    def table(self) -> str:
        rows = [
            ("state-action pairs", f"{self.n_pairs}"),
            ("episodes", f"{self.n_episodes}"),
            ("reward", f"{self.reward_mean:.2f} +/- {self.reward_std:.2f}"),
            ("length", f"{self.length_mean:.2f} +/- {self.length_std:.2f}"),
            ("steps", f"{self.steps_mean:.2f} +/- {self.steps_std:.2f}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def stats(demos: DemoSet, cfg: EnvConfig | None = None) -> DemoStats:
    """Per-episode aggregates: de-normalized reward sum, spatial trajectory
    length over the recorded ball positions, and record counts."""
    if not demos.records:
        raise ValueError("empty demonstration set")
    if cfg is None:
        try:
            cfg = load_preset(demos.setting)
        except FileNotFoundError:
            cfg = EnvConfig(setting=demos.setting or "simple", constraints=())
    rewards, lengths, steps = [], [], []
    for ep in demos.episodes():
        rewards.append(sum(denormalize_reward(r.reward, cfg) for r in ep))
        length = 0.0
        for a, b in zip(ep[:-1], ep[1:]):
            length += math.hypot(b.bx - a.bx, b.by - a.by)
        lengths.append(length)
        steps.append(len(ep))
    return DemoStats(
        n_pairs=len(demos.records),
        n_episodes=len(rewards),
        reward_mean=float(np.mean(rewards)),
        reward_std=float(np.std(rewards)),
        length_mean=float(np.mean(lengths)),
        length_std=float(np.std(lengths)),
        steps_mean=float(np.mean(steps)),
        steps_std=float(np.std(steps)),
    )
