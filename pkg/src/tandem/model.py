"""Domain types and the plan-duration cost model for two-agent collaborative plans.

A plan assigns symbolic tasks to a human and a robot and schedules them on
per-agent timelines.  Each task has a nominal (expected) duration; whenever the
counterpart agent works concurrently, the nominal duration is scaled by a
per-task-pair synergy coefficient weighted by the fraction of overlap.  The
fraction of a task with no concurrent counterpart work keeps coefficient 1, so
a fully decoupled plan costs exactly the sum of nominal durations.

The empty time interval is represented as ``None``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import MissingDuration, ZeroDurationTask

# Absolute tolerance for time comparisons, in seconds.
TIME_EPS = 1e-9


class AgentId(str, Enum):
    HUMAN = "human"
    ROBOT = "robot"

    @property
    def counterpart(self) -> "AgentId":
        return AgentId.ROBOT if self is AgentId.HUMAN else AgentId.HUMAN


class ActionKind(str, Enum):
    PICK = "pick"
    PLACE = "place"
    GOTO = "goto"


@dataclass(frozen=True)
class TimeInterval:
    """Closed interval [start, end] in non-negative seconds; end >= start."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if self.start < 0.0:
            raise ValueError(f"interval start must be non-negative, got {self.start}")
        if self.end < self.start:
            raise ValueError(f"interval end {self.end} precedes start {self.start}")

    @property
    def duration(self) -> float:
        return self.end - self.start


def interval_duration(t: TimeInterval | None) -> float:
    """Length of an interval in seconds; the empty interval (None) has length 0."""
    return 0.0 if t is None else t.end - t.start


def interval_intersection(
    a: TimeInterval | None, b: TimeInterval | None
) -> TimeInterval | None:
    """Intersection of two intervals, or None when they do not meet.

    Touching intervals ([0, 5] and [5, 8]) intersect in the zero-length
    interval [5, 5].
    """
    if a is None or b is None:
        return None
    start = max(a.start, b.start)
    end = min(a.end, b.end)
    if end < start:
        return None
    return TimeInterval(start, end)


def overlap_ratio(own: TimeInterval, other: TimeInterval | None) -> float:
    """Fraction of `own` during which `other` is also running.

    Always in [0, 1].  Raises ZeroDurationTask when `own` has zero length,
    which signals a degenerate measured task rather than producing NaN.
    """
    own_len = interval_duration(own)
    if own_len <= 0.0:
        raise ZeroDurationTask(f"task interval {own} has zero duration")
    return interval_duration(interval_intersection(own, other)) / own_len


@dataclass(frozen=True)
class TaskSpec:
    """Symbolic task definition: what the action is and who may perform it."""

    id: str
    action: ActionKind
    eligible_agents: frozenset[AgentId]
    region: str
    description: str = ""

    def __post_init__(self) -> None:
        if not self.eligible_agents:
            raise ValueError(f"task {self.id!r} has no eligible agents")


# A plan's task -> agent map.  Keys are task ids unique within the plan.
Assignment = Mapping[str, AgentId]


@dataclass(frozen=True)
class ScheduledTask:
    """A task placed on an agent timeline."""

    task_id: str
    agent: AgentId
    interval: TimeInterval


@dataclass(frozen=True)
class PlanSchedule:
    """Per-agent timelines of scheduled tasks.

    Tasks of the same agent must not overlap (touching endpoints are fine)
    and are kept sorted by start time.
    """

    human: tuple[ScheduledTask, ...] = ()
    robot: tuple[ScheduledTask, ...] = ()

    def __post_init__(self) -> None:
        for agent, lane in ((AgentId.HUMAN, self.human), (AgentId.ROBOT, self.robot)):
            prev = None
            for task in lane:
                if task.agent is not agent:
                    raise ValueError(
                        f"task {task.task_id!r} for {task.agent.value} placed on "
                        f"the {agent.value} timeline"
                    )
                if prev is not None:
                    if task.interval.start < prev.interval.start:
                        raise ValueError(f"{agent.value} timeline is not sorted by start")
                    if task.interval.start < prev.interval.end - TIME_EPS:
                        raise ValueError(
                            f"tasks {prev.task_id!r} and {task.task_id!r} overlap "
                            f"on the {agent.value} timeline"
                        )
                prev = task

    @classmethod
    def from_tasks(cls, tasks: Iterable[ScheduledTask]) -> "PlanSchedule":
        lanes: dict[AgentId, list[ScheduledTask]] = {AgentId.HUMAN: [], AgentId.ROBOT: []}
        for task in tasks:
            lanes[task.agent].append(task)
        for lane in lanes.values():
            lane.sort(key=lambda t: (t.interval.start, t.interval.end))
        return cls(human=tuple(lanes[AgentId.HUMAN]), robot=tuple(lanes[AgentId.ROBOT]))

    def for_agent(self, agent: AgentId) -> tuple[ScheduledTask, ...]:
        return self.human if agent is AgentId.HUMAN else self.robot

    @property
    def horizon(self) -> float:
        ends = [t.interval.end for t in self.human + self.robot]
        return max(ends) if ends else 0.0


@dataclass(frozen=True)
class SynergyEntry:
    """One coefficient of the synergy matrix with its estimation metadata."""

    coefficient: float = 1.0
    std_error: float = 0.0
    sample_count: int = 0

    def __post_init__(self) -> None:
        if self.coefficient <= 0.0:
            raise ValueError(f"synergy coefficient must be positive, got {self.coefficient}")
        if self.std_error < 0.0:
            raise ValueError(f"std error must be non-negative, got {self.std_error}")
        if self.sample_count < 0:
            raise ValueError(f"sample count must be non-negative, got {self.sample_count}")


NEUTRAL_SYNERGY = SynergyEntry()


@dataclass(frozen=True)
class SynergyMatrix:
    """Per-agent coefficients keyed by (own task id, counterpart task id).

    Unobserved pairs default to the neutral entry (coefficient 1.0,
    sample_count 0), so an empty matrix models fully decoupled agents.
    """

    entries: Mapping[AgentId, Mapping[tuple[str, str], SynergyEntry]] = field(
        default_factory=dict
    )

    def get(self, agent: AgentId, own_task: str, counterpart_task: str) -> SynergyEntry:
        return self.entries.get(agent, {}).get((own_task, counterpart_task), NEUTRAL_SYNERGY)

    @classmethod
    def neutral(cls) -> "SynergyMatrix":
        return cls()


@dataclass(frozen=True)
class DurationStats:
    """Mean and spread of a task's measured durations for one agent."""

    task_id: str
    agent: AgentId
    mean: float
    std: float
    count: int

    def __post_init__(self) -> None:
        if self.mean <= 0.0:
            raise ValueError(f"mean duration must be positive, got {self.mean}")
        if self.std < 0.0:
            raise ValueError(f"std must be non-negative, got {self.std}")
        if self.count < 1:
            raise ValueError(f"count must be at least 1, got {self.count}")
        if self.count == 1 and self.std != 0.0:
            raise ValueError("a single sample has zero standard deviation")


# Lookup table for duration statistics, keyed by (task id, agent).
StatsMap = Mapping[tuple[str, AgentId], DurationStats]


def stats_table(stats: Iterable[DurationStats]) -> dict[tuple[str, AgentId], DurationStats]:
    return {(s.task_id, s.agent): s for s in stats}


def nominal_agent_plan_duration(
    assignment: Assignment, stats: StatsMap, agent: AgentId
) -> float:
    """Sum of expected durations over the tasks assigned to `agent`."""
    total = 0.0
    for task_id, assigned in assignment.items():
        if assigned is not agent:
            continue
        key = (task_id, agent)
        if key not in stats:
            raise MissingDuration(task_id, agent)
        total += stats[key].mean
    return total


def synergy_agent_plan_duration(
    schedule: PlanSchedule,
    stats: StatsMap,
    synergy: SynergyMatrix,
    agent: AgentId,
) -> float:
    """Plan duration for `agent` with synergy-scaled task durations.

    Each scheduled task contributes mean * (sum_j s_ij * delta_ij + residual)
    where delta_ij is the overlap ratio against counterpart task j and the
    residual fraction (no concurrent counterpart work) carries coefficient 1.
    """
    counterpart = schedule.for_agent(agent.counterpart)
    total = 0.0
    for task in schedule.for_agent(agent):
        key = (task.task_id, agent)
        if key not in stats:
            raise MissingDuration(task.task_id, agent)
        coupled = 0.0
        covered = 0.0
        for other in counterpart:
            delta = overlap_ratio(task.interval, other.interval)
            if delta == 0.0:
                continue
            entry = synergy.get(agent, task.task_id, other.task_id)
            coupled += entry.coefficient * delta
            covered += delta
        total += stats[key].mean * (1.0 + (coupled - covered))
    return total


def plan_cost(d_human: float, d_robot: float) -> float:
    """Makespan of a plan: the slower agent's plan duration."""
    return max(d_human, d_robot)
