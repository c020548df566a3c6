from .config import N_ACTIONS, PRESET_NAMES, STATE_DIM, ConstraintSpec, EnvConfig, load_preset
from .maze import (
    DoneKind,
    EpisodeFinishedError,
    MarbleMaze,
    RawState,
    StepResult,
    compute_reward,
    decode_action,
    denormalize_reward,
    denormalize_state,
    detect_violations,
    encode_action,
    normalize_reward,
    normalize_state,
    physics_substep,
    raw_reward,
)

__all__ = [
    "N_ACTIONS",
    "PRESET_NAMES",
    "STATE_DIM",
    "ConstraintSpec",
    "EnvConfig",
    "load_preset",
    "DoneKind",
    "EpisodeFinishedError",
    "MarbleMaze",
    "RawState",
    "StepResult",
    "compute_reward",
    "decode_action",
    "denormalize_reward",
    "denormalize_state",
    "detect_violations",
    "encode_action",
    "normalize_reward",
    "normalize_state",
    "physics_substep",
    "raw_reward",
]
