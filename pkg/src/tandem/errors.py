"""Exception hierarchy shared by all tandem modules."""

from __future__ import annotations


class TandemError(Exception):
    """Base class for every error raised by this package."""


class ZeroDurationTask(TandemError):
    """A measured task interval has zero length where a positive one is required."""


class MissingDuration(TandemError):
    """No duration statistics exist for a (task, agent) pair."""

    def __init__(self, task_id: str, agent: object | None = None):
        self.task_id = task_id
        self.agent = agent
        where = f" for agent {agent}" if agent is not None else ""
        super().__init__(f"no duration statistics for task {task_id!r}{where}")


class EmptySampleSet(TandemError):
    """An operation that needs at least one sample received none."""


class NonPositiveSample(TandemError):
    """A duration sample was zero or negative."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"sample {index} is not positive: {value}")


class NoSamples(TandemError):
    """No executions of a task were found in the supplied traces."""

    def __init__(self, task_id: str):
        self.task_id = task_id
        super().__init__(f"no executions of task {task_id!r} in the trace set")


class EmptyProblem(TandemError):
    """A regression problem with zero rows cannot be solved."""


class InvalidProgram(TandemError):
    """An agent program violates eligibility, ordering, or deadlocks."""


class InfeasibleDomain(TandemError):
    """The planning domain admits no valid plan."""


class NonConvergence(TandemError):
    """The coupled-duration fixed point did not settle within the iteration cap."""


class SchemaViolation(TandemError):
    """A document does not match its collection schema."""

    def __init__(self, collection: str, field: str, reason: str):
        self.collection = collection
        self.field = field
        super().__init__(f"{collection}: field {field!r} {reason}")


class UnknownCollection(TandemError):
    """The named collection does not exist."""


class UnknownPlan(TandemError):
    """No execution records exist for the requested plan id."""

    def __init__(self, plan_id: str):
        self.plan_id = plan_id
        super().__init__(f"no task results for plan {plan_id!r}")


class IoFailure(TandemError):
    """A store read or write failed at the filesystem level."""


class EmptyStore(TandemError):
    """The store holds no execution records to estimate from."""


class MissingEstimates(TandemError):
    """Duration or synergy estimates are required but absent from the store."""


class ConfigError(TandemError):
    """The world configuration file is missing, malformed, or inconsistent."""
