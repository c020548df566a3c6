"""Environment configuration: board geometry, physics constants, constraint
specs, normalization bounds, and the bundled setting presets."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

PRESET_NAMES = ("simple", "multi", "two-modes")

# state vector layout: [b_x, b_y, v_x, v_y, r_x, r_y, rv_x, rv_y]
STATE_DIM = 8
N_ACTIONS = 9


@dataclass(frozen=True)
class ConstraintSpec:
    """Geometric violation region: a half-plane bounded by an axis-aligned
    line, or the interior of a circle.

    kind "hline": violating strictly below/above y = level (side below/above).
    kind "vline": violating strictly left/right of x = level (side left/right).
    kind "circle": violating strictly inside the disk (center, radius).
    """

    kind: str
    label: str
    level: float | None = None
    side: str | None = None
    center: tuple[float, float] | None = None
    radius: float | None = None

    _LABEL_FOR_KIND = {"hline": "H", "vline": "V", "circle": "C"}
    _SIDES_FOR_KIND = {"hline": ("below", "above"), "vline": ("left", "right")}

    def __post_init__(self):
        if self.kind not in self._LABEL_FOR_KIND:
            raise ValueError(f"unknown constraint kind: {self.kind!r}")
        if self.label != self._LABEL_FOR_KIND[self.kind]:
            raise ValueError(f"label {self.label!r} inconsistent with kind {self.kind!r}")
        if self.kind == "circle":
            if self.center is None or self.radius is None:
                raise ValueError("circle constraint needs center and radius")
            if self.radius <= 0:
                raise ValueError("circle radius must be positive")
            object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        else:
            if self.level is None or self.side is None:
                raise ValueError(f"{self.kind} constraint needs level and side")
            if self.side not in self._SIDES_FOR_KIND[self.kind]:
                raise ValueError(f"bad side {self.side!r} for {self.kind}")

    def violates(self, x: float, y: float) -> bool:
        """Strict inequalities: a ball exactly on the boundary does not violate."""
        if self.kind == "hline":
            return y < self.level if self.side == "below" else y > self.level
        if self.kind == "vline":
            return x < self.level if self.side == "left" else x > self.level
        cx, cy = self.center
        return (x - cx) ** 2 + (y - cy) ** 2 < self.radius**2

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "label": self.label}
        if self.kind == "circle":
            d["center"] = list(self.center)
            d["radius"] = self.radius
        else:
            d["level"] = self.level
            d["side"] = self.side
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintSpec":
        center = tuple(d["center"]) if "center" in d else None
        return cls(
            kind=d["kind"],
            label=d["label"],
            level=d.get("level"),
            side=d.get("side"),
            center=center,
            radius=d.get("radius"),
        )


@dataclass
class EnvConfig:
    """Everything the simulator needs; all units are board units and seconds."""

    setting: str = "simple"
    board_half_extent: float = 150.0
    hole_center: tuple[float, float] = (0.0, 110.0)
    hole_capture_radius: float = 20.0
    gravity_gain: float = 800.0  # ball acceleration per radian of tilt
    friction: float = 2.0  # 1/time
    restitution: float = 0.5
    tilt_increment: float = 0.5  # added to board angular velocity per substep command
    omega_decay: float = 0.5  # angular velocity decay per substep when command is zero
    max_tilt: float = 0.25
    max_omega: float = 2.0
    substep_dt: float = 0.02
    substeps_per_action: int = 5
    max_steps: int = 200
    v_max: float = 150.0  # velocity normalization bound
    reward_min: float = -5.0
    reward_max: float = 10.0
    constraints: tuple[ConstraintSpec, ...] = ()
    start_region: tuple[float, float, float, float] = (-110.0, -125.0, 110.0, -95.0)
    norm_bounds: tuple[tuple[float, float], ...] | None = None
    violation_count_mode: str = "entry"  # "entry": new violations; "active": per-step

    def __post_init__(self):
        self.hole_center = (float(self.hole_center[0]), float(self.hole_center[1]))
        self.start_region = tuple(float(v) for v in self.start_region)
        self.constraints = tuple(
            c if isinstance(c, ConstraintSpec) else ConstraintSpec.from_dict(c)
            for c in self.constraints
        )
        if self.norm_bounds is not None:
            self.norm_bounds = tuple((float(lo), float(hi)) for lo, hi in self.norm_bounds)
        self.validate()

    def bounds(self) -> tuple[tuple[float, float], ...]:
        """Per-dimension (min, max) normalization bounds; defaults follow the
        physical limits when not set explicitly."""
        if self.norm_bounds is not None:
            return self.norm_bounds
        he = self.board_half_extent
        return (
            (-he, he),
            (-he, he),
            (-self.v_max, self.v_max),
            (-self.v_max, self.v_max),
            (-self.max_tilt, self.max_tilt),
            (-self.max_tilt, self.max_tilt),
            (-self.max_omega, self.max_omega),
            (-self.max_omega, self.max_omega),
        )

    @property
    def max_distance(self) -> float:
        """Board diagonal, the largest possible ball-to-hole distance."""
        return 2.0 * self.board_half_extent * math.sqrt(2.0)

    def validate(self) -> None:
        he = self.board_half_extent
        if he <= 0:
            raise ValueError("board_half_extent must be positive")
        if self.substep_dt <= 0:
            raise ValueError("substep_dt must be positive")
        if self.substeps_per_action < 1:
            raise ValueError("substeps_per_action must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError("restitution must lie in [0, 1]")
        if not 0.0 <= self.omega_decay <= 1.0:
            raise ValueError("omega_decay must lie in [0, 1]")
        if self.reward_min >= self.reward_max:
            raise ValueError("reward_min must be below reward_max")
        bounds = self.norm_bounds
        if bounds is not None:
            if len(bounds) != STATE_DIM:
                raise ValueError(f"norm_bounds needs {STATE_DIM} pairs")
            if any(lo >= hi for lo, hi in bounds):
                raise ValueError("every norm_bounds pair needs min < max")
        hx, hy = self.hole_center
        if abs(hx) > he or abs(hy) > he:
            raise ValueError("hole center must lie on the board")
        if self.hole_capture_radius <= 0:
            raise ValueError("hole_capture_radius must be positive")
        x0, y0, x1, y1 = self.start_region
        if not (x0 < x1 and y0 < y1):
            raise ValueError("start_region must be a nonempty rectangle (x0,y0,x1,y1)")
        if min(x0, y0) < -he or max(x1, y1) > he:
            raise ValueError("start_region must lie on the board")
        # spawns inside the capture disk would end episodes before the first action
        nearest_x = min(max(hx, x0), x1)
        nearest_y = min(max(hy, y0), y1)
        if math.hypot(nearest_x - hx, nearest_y - hy) < self.hole_capture_radius:
            raise ValueError("start_region overlaps the hole capture disk")
        for c in self.constraints:
            if c.kind == "circle":
                cx, cy = c.center
                if abs(cx) + c.radius > he or abs(cy) + c.radius > he:
                    raise ValueError(f"circle constraint {c} exceeds the board")
            elif abs(c.level) > he:
                raise ValueError(f"line constraint {c} lies off the board")
        if self.violation_count_mode not in ("entry", "active"):
            raise ValueError("violation_count_mode must be 'entry' or 'active'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hole_center"] = list(self.hole_center)
        d["start_region"] = list(self.start_region)
        d["constraints"] = [c.to_dict() for c in self.constraints]
        if self.norm_bounds is not None:
            d["norm_bounds"] = [list(p) for p in self.norm_bounds]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        d = dict(d)
        if "constraints" in d:
            d["constraints"] = tuple(ConstraintSpec.from_dict(c) for c in d["constraints"])
        if d.get("norm_bounds") is not None:
            d["norm_bounds"] = tuple(tuple(p) for p in d["norm_bounds"])
        if "hole_center" in d:
            d["hole_center"] = tuple(d["hole_center"])
        if "start_region" in d:
            d["start_region"] = tuple(d["start_region"])
        return cls(**d)

    def constraints_digest(self) -> str:
        import hashlib

        blob = json.dumps([c.to_dict() for c in self.constraints], sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_preset(name_or_path: str | Path) -> EnvConfig:
    """Load a bundled preset by name ("simple", "multi", "two-modes") or any
    JSON config file by path."""
    name = str(name_or_path)
    if name in PRESET_NAMES:
        text = resources.files("scopil.env").joinpath(f"presets/{name}.json").read_text()
    else:
        path = Path(name_or_path)
        if not path.exists():
            raise FileNotFoundError(
                f"no preset named {name!r} (known: {', '.join(PRESET_NAMES)}) and no such file"
            )
        text = path.read_text()
    return EnvConfig.from_dict(json.loads(text))
