"""World configuration: task catalog, safety zones, and the process goal.

The configuration is a YAML file of nested sections; every field below has a
built-in default modeling a desk-scale collaborative workcell, so a partial
file only overrides what it names.  The default catalog has eight task types:
the human handles white and blue boxes, the robot handles orange and blue
boxes, and the blue boxes live in a shared region whose safety zones slow the
robot down whenever the human works there.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import yaml

from .errors import ConfigError
from .model import ActionKind, AgentId, TaskSpec
from .planner import PlanningDomain, TaskInstance

ZONES = ("red", "orange", "free")

DEFAULT_CONFIG: dict = {
    "seed": 1,
    "objects": {"white": 6, "orange": 6, "blue": 6},
    "zones": {
        "speed_factors": {"red": 0.0, "orange": 0.5, "free": 1.0},
    },
    "regions": {
        "human_table": {"red": 0.0, "orange": 0.0, "free": 1.0},
        "human_release": {"red": 0.0, "orange": 0.0, "free": 1.0},
        "robot_table": {"red": 0.0, "orange": 0.0, "free": 1.0},
        "robot_release": {"red": 0.0, "orange": 0.0, "free": 1.0},
        "shared": {"red": 0.3, "orange": 0.5, "free": 0.2},
    },
    "tasks": {
        "pick_white": {
            "agent": "human",
            "action": "pick",
            "region": "human_table",
            "base_duration": 8.0,
            "cv": 0.1,
            "description": "human picks a white box from the work table",
        },
        "place_white": {
            "agent": "human",
            "action": "place",
            "region": "human_release",
            "base_duration": 6.0,
            "cv": 0.1,
            "description": "human places a white box in the human release area",
        },
        "pick_blue_h": {
            "agent": "human",
            "action": "pick",
            "region": "shared",
            "base_duration": 8.0,
            "cv": 0.1,
            "description": "human picks a blue box from the shared area",
        },
        "place_blue_h": {
            "agent": "human",
            "action": "place",
            "region": "shared",
            "base_duration": 6.0,
            "cv": 0.1,
            "description": "human places a blue box near the shared area",
        },
        "pick_orange": {
            "agent": "robot",
            "action": "pick",
            "region": "robot_table",
            "base_duration": 8.0,
            "cv": 0.1,
            "description": "robot picks an orange box from the work table",
        },
        "place_orange": {
            "agent": "robot",
            "action": "place",
            "region": "robot_release",
            "base_duration": 6.0,
            "cv": 0.1,
            "description": "robot places an orange box in the robot release area",
        },
        "pick_blue_r": {
            "agent": "robot",
            "action": "pick",
            "region": "shared",
            "base_duration": 8.0,
            "cv": 0.1,
            "description": "robot picks a blue box from the shared area",
        },
        "place_blue_r": {
            "agent": "robot",
            "action": "place",
            "region": "robot_release",
            "base_duration": 6.0,
            "cv": 0.1,
            "description": "robot places a blue box in the robot release area",
        },
    },
    "process": [
        {"pick": "pick_orange", "place": "place_orange", "count": 4, "color": "orange"},
        {"pick": "pick_white", "place": "place_white", "count": 4, "color": "white"},
        {"pick": "pick_blue_r", "place": "place_blue_r", "count": 2, "color": "blue"},
        {"pick": "pick_blue_h", "place": "place_blue_h", "count": 2, "color": "blue"},
    ],
}


@dataclass(frozen=True)
class ZoneExposureProfile:
    """Fraction of a human task spent in each safety zone, in red-orange-free order."""

    red: float = 0.0
    orange: float = 0.0
    free: float = 1.0

    def __post_init__(self) -> None:
        for zone, frac in (("red", self.red), ("orange", self.orange), ("free", self.free)):
            if frac < 0.0:
                raise ConfigError(f"zone fraction {zone} must be non-negative, got {frac}")
        if abs(self.red + self.orange + self.free - 1.0) > 1e-9:
            raise ConfigError(
                f"zone fractions must sum to 1, got {self.red + self.orange + self.free}"
            )


@dataclass(frozen=True)
class TaskConfig:
    """A catalog entry: the symbolic task plus its simulation parameters."""

    spec: TaskSpec
    base_duration: float
    cv: float

    def __post_init__(self) -> None:
        if self.base_duration <= 0.0:
            raise ConfigError(f"task {self.spec.id!r}: base duration must be positive")
        if self.cv < 0.0:
            raise ConfigError(f"task {self.spec.id!r}: cv must be non-negative")


@dataclass(frozen=True)
class ProcessStep:
    """A batch of identical pick/place pairs over one object color."""

    pick: str
    place: str
    count: int
    color: str


@dataclass(frozen=True)
class WorldConfig:
    """Validated workcell description used by the simulator and the planner."""

    tasks: Mapping[str, TaskConfig]
    regions: Mapping[str, ZoneExposureProfile]
    speed_factors: Mapping[str, float]
    objects: Mapping[str, int]
    process: tuple[ProcessStep, ...]
    seed: int

    def profile(self, task_id: str) -> ZoneExposureProfile:
        """Zone exposure of a task, from its region; unknown regions count as free."""
        region = self.tasks[task_id].spec.region
        return self.regions.get(region, ZoneExposureProfile())


def _deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _parse_task(task_id: str, raw: dict) -> TaskConfig:
    try:
        agents = raw["agent"]
        action = raw["action"]
        region = raw["region"]
        base = float(raw["base_duration"])
        cv = float(raw.get("cv", 0.0))
    except KeyError as exc:
        raise ConfigError(f"task {task_id!r} is missing field {exc.args[0]!r}") from None
    if isinstance(agents, str):
        agents = [agents]
    try:
        eligible = frozenset(AgentId(a) for a in agents)
        kind = ActionKind(action)
    except ValueError as exc:
        raise ConfigError(f"task {task_id!r}: {exc}") from None
    spec = TaskSpec(
        id=task_id,
        action=kind,
        eligible_agents=eligible,
        region=str(region),
        description=str(raw.get("description", "")),
    )
    return TaskConfig(spec=spec, base_duration=base, cv=cv)


def _validate(raw: dict) -> WorldConfig:
    factors = {str(k): float(v) for k, v in raw["zones"]["speed_factors"].items()}
    for zone in ZONES:
        if zone not in factors:
            raise ConfigError(f"zones.speed_factors is missing zone {zone!r}")
        if not 0.0 <= factors[zone] <= 1.0:
            raise ConfigError(f"speed factor for {zone!r} must be in [0, 1]")
    if factors["red"] != 0.0:
        raise ConfigError("the red zone must stop the robot (speed factor 0)")
    if factors["free"] != 1.0:
        raise ConfigError("the free zone must leave the robot at nominal speed (factor 1)")

    regions = {
        name: ZoneExposureProfile(
            red=float(prof.get("red", 0.0)),
            orange=float(prof.get("orange", 0.0)),
            free=float(prof.get("free", 0.0)),
        )
        for name, prof in raw["regions"].items()
    }
    tasks = {task_id: _parse_task(task_id, spec) for task_id, spec in raw["tasks"].items()}
    objects = {str(k): int(v) for k, v in raw["objects"].items()}

    steps = []
    used: dict[str, int] = {}
    for entry in raw["process"]:
        step = ProcessStep(
            pick=str(entry["pick"]),
            place=str(entry["place"]),
            count=int(entry["count"]),
            color=str(entry["color"]),
        )
        if step.count < 0:
            raise ConfigError(f"process step for {step.pick!r} has negative count")
        for task_id in (step.pick, step.place):
            if task_id not in tasks:
                raise ConfigError(f"process references unknown task {task_id!r}")
        used[step.color] = used.get(step.color, 0) + step.count
        steps.append(step)
    for color, n in used.items():
        if n > objects.get(color, 0):
            raise ConfigError(
                f"process needs {n} {color} objects but only {objects.get(color, 0)} exist"
            )

    return WorldConfig(
        tasks=tasks,
        regions=regions,
        speed_factors=factors,
        objects=objects,
        process=tuple(steps),
        seed=int(raw["seed"]),
    )


def make_world_config(overrides: Mapping | None = None) -> WorldConfig:
    """Build a configuration from the defaults plus in-memory overrides."""
    raw = copy.deepcopy(DEFAULT_CONFIG)
    if overrides:
        raw = _deep_merge(raw, dict(overrides))
    try:
        return _validate(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid world config: {exc}") from exc


def load_world_config(path: str | Path | None = None) -> WorldConfig:
    """Load a world configuration, merging a YAML file over the defaults."""
    overrides = None
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        loaded = yaml.safe_load(text)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a mapping of sections")
        overrides = loaded
    return make_world_config(overrides)


def build_domain(config: WorldConfig) -> PlanningDomain:
    """Expand the process goal into task instances with pick-before-place pairs."""
    instances = []
    precedence = []
    for step in config.process:
        pick_spec = config.tasks[step.pick].spec
        place_spec = config.tasks[step.place].spec
        for k in range(1, step.count + 1):
            pick_uid = f"{step.pick}#{k}"
            place_uid = f"{step.place}#{k}"
            instances.append(TaskInstance(pick_uid, step.pick, pick_spec.eligible_agents))
            instances.append(TaskInstance(place_uid, step.place, place_spec.eligible_agents))
            precedence.append((pick_uid, place_uid))
    return PlanningDomain(instances=tuple(instances), precedence=tuple(precedence))
