"""Estimation of task duration statistics and synergy coefficients from traces.

For every task type executed by an agent, the measured durations of its past
executions form the samples of a least-squares regression: the regressors are
the overlap fractions against each of the other agent's task types (scaled by
the task's expected duration) and the response is the measured duration minus
the idle term, i.e. the part of the task window with no concurrent counterpart
work valued at the nominal rate.  Solving the normal equations per task yields
one row of the synergy matrix; a coefficient above 1 marks a pair of tasks
that slow each other down when run concurrently.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyProblem,
    EmptySampleSet,
    MissingDuration,
    NonPositiveSample,
    NoSamples,
)
from .model import (
    AgentId,
    StatsMap,
    SynergyEntry,
    SynergyMatrix,
    TimeInterval,
    TIME_EPS,
    interval_duration,
    overlap_ratio,
)

logger = logging.getLogger(__name__)

# Condition-number threshold above which the normal equations are damped.
ILL_CONDITIONED = 1e10

# Smallest coefficient admitted into a synergy matrix; estimates below this
# floor (possible under heavy noise) are clamped to keep the matrix positive.
COEFFICIENT_FLOOR = 1e-6


@dataclass(frozen=True)
class ExecutionRecord:
    """One measured execution of a task within a plan run."""

    plan_id: str
    task_id: str
    agent: AgentId
    interval: TimeInterval | None
    success: bool = True

    def __post_init__(self) -> None:
        if self.success and self.interval is None:
            raise ValueError(
                f"successful record of {self.task_id!r} must carry a measured interval"
            )


@dataclass(frozen=True)
class ExecutionTrace:
    """All execution records of one plan run, both agents.

    Records of the same agent must not overlap; idle segments are the gaps
    between an agent's consecutive task intervals.
    """

    plan_id: str
    records: tuple[ExecutionRecord, ...]

    def __post_init__(self) -> None:
        for agent in AgentId:
            lane = self.for_agent(agent)
            for prev, cur in zip(lane, lane[1:]):
                if cur.interval.start < prev.interval.end - TIME_EPS:
                    raise ValueError(
                        f"records of {agent.value} overlap in plan {self.plan_id!r}: "
                        f"{prev.task_id!r} and {cur.task_id!r}"
                    )

    def for_agent(self, agent: AgentId) -> tuple[ExecutionRecord, ...]:
        """Successful records of one agent, sorted by start time."""
        lane = [r for r in self.records if r.agent is agent and r.success]
        lane.sort(key=lambda r: (r.interval.start, r.interval.end))
        return tuple(lane)

    def idle_segments(self, agent: AgentId) -> tuple[TimeInterval, ...]:
        """Gaps between the agent's consecutive task intervals."""
        lane = self.for_agent(agent)
        gaps = []
        for prev, cur in zip(lane, lane[1:]):
            if cur.interval.start - prev.interval.end > TIME_EPS:
                gaps.append(TimeInterval(prev.interval.end, cur.interval.start))
        return tuple(gaps)


@dataclass(frozen=True)
class RegressionProblem:
    """Per-task regression: response and design matrix over counterpart types.

    Row k corresponds to the k-th execution of the own task (traces scanned in
    order, records in trace order).  Column j corresponds to
    ``column_labels[j]``; its entries are the expected own duration times the
    overlap fraction against all instances of that counterpart type.
    """

    own_task_id: str
    own_agent: AgentId
    response: np.ndarray
    design: np.ndarray
    column_labels: tuple[str, ...]

    @property
    def n_samples(self) -> int:
        return self.design.shape[0]


@dataclass(frozen=True)
class OutlierReport:
    """Which sample indices survived an outlier filter, and why."""

    kept: tuple[int, ...]
    removed: tuple[int, ...]
    strategy: str
    params: Mapping[str, float]


@dataclass(frozen=True)
class SynergyFit:
    """Solution of one per-task regression."""

    coefficients: np.ndarray
    std_errors: np.ndarray
    sample_counts: tuple[int, ...]
    damped_columns: tuple[int, ...] = ()


def expected_duration(samples: Sequence[float]) -> tuple[float, float, int]:
    """Mean, sample standard deviation (n-1 denominator), and count.

    A single sample has std 0 by convention.
    """
    if len(samples) == 0:
        raise EmptySampleSet("cannot estimate a duration from zero samples")
    for i, x in enumerate(samples):
        if x <= 0.0:
            raise NonPositiveSample(i, x)
    n = len(samples)
    mean = math.fsum(samples) / n
    if n == 1:
        return mean, 0.0, 1
    var = math.fsum((x - mean) ** 2 for x in samples) / (n - 1)
    return mean, math.sqrt(var), n


def _iqr_filter(samples: Sequence[float]) -> tuple[list[int], list[int], dict[str, float]]:
    q1, q3 = np.percentile(np.asarray(samples, dtype=float), [25.0, 75.0])
    iqr = q3 - q1
    lo = q1 - 1.5 * iqr
    hi = q3 + 1.5 * iqr
    kept, removed = [], []
    for i, x in enumerate(samples):
        (removed if (x < lo or x > hi) else kept).append(i)
    return kept, removed, {"q1": float(q1), "q3": float(q3), "low": float(lo), "high": float(hi)}


def _no_filter(samples: Sequence[float]) -> tuple[list[int], list[int], dict[str, float]]:
    return list(range(len(samples))), [], {}


# Pluggable filter strategies; each maps samples to (kept, removed, params).
OUTLIER_STRATEGIES = {
    "iqr": _iqr_filter,
    "none": _no_filter,
}


def filter_outliers(samples: Sequence[float], strategy: str = "iqr") -> OutlierReport:
    """Partition sample indices into kept and removed under the named strategy.

    The default "iqr" strategy drops samples outside the Tukey fences
    [Q1 - 1.5 IQR, Q3 + 1.5 IQR]; "none" keeps everything.  The result only
    depends on the multiset of values, not their order.
    """
    if len(samples) == 0:
        raise EmptySampleSet("cannot filter zero samples")
    try:
        fn = OUTLIER_STRATEGIES[strategy.lower()]
    except KeyError:
        raise ValueError(f"unknown outlier strategy {strategy!r}") from None
    kept, removed, params = fn(samples)
    return OutlierReport(tuple(kept), tuple(removed), strategy.lower(), params)


def _own_executions(
    traces: Sequence[ExecutionTrace], task_id: str, agent: AgentId
) -> list[tuple[ExecutionTrace, ExecutionRecord]]:
    """All successful executions of (task_id, agent), in trace then record order."""
    out = []
    for trace in traces:
        for rec in trace.records:
            if rec.task_id == task_id and rec.agent is agent and rec.success:
                out.append((trace, rec))
    return out


def build_regression(
    traces: Sequence[ExecutionTrace],
    own_task_id: str,
    own_agent: AgentId,
    stats: StatsMap,
    counterpart_tasks: Sequence[str],
) -> RegressionProblem:
    """Assemble the regression problem for one own task against counterpart types.

    One row per successful execution of the own task (traces scanned in order,
    records in trace order).  Design entry (k, j) is the expected own duration
    times the overlap fraction of execution k against every instance of
    counterpart type j in the same run; multiple instances of one type sum
    into the same column.  The response is the measured duration minus the
    idle term: the uncovered fraction of the task valued at the expected rate.
    """
    key = (own_task_id, own_agent)
    if key not in stats:
        raise MissingDuration(own_task_id, own_agent)
    d_hat = stats[key].mean
    columns = {task_id: j for j, task_id in enumerate(counterpart_tasks)}
    m = len(counterpart_tasks)
    counterpart_agent = own_agent.counterpart

    rows: list[list[float]] = []
    response: list[float] = []
    for trace, rec in _own_executions(traces, own_task_id, own_agent):
        deltas = [0.0] * m
        for other in trace.records:
            if other.agent is not counterpart_agent or not other.success:
                continue
            j = columns.get(other.task_id)
            if j is None:
                continue
            deltas[j] += overlap_ratio(rec.interval, other.interval)
        covered = math.fsum(deltas)
        rows.append([d_hat * d for d in deltas])
        response.append(interval_duration(rec.interval) - d_hat * (1.0 - covered))

    if not rows:
        raise NoSamples(own_task_id)
    return RegressionProblem(
        own_task_id=own_task_id,
        own_agent=own_agent,
        response=np.asarray(response, dtype=float),
        design=np.asarray(rows, dtype=float).reshape(len(rows), m),
        column_labels=tuple(counterpart_tasks),
    )


def solve_synergy(problem: RegressionProblem) -> SynergyFit:
    """Solve the per-task normal equations for the synergy coefficients.

    Columns whose design entries are all zero (the task pair was never
    observed running concurrently) get coefficient 1.0 with sample count 0.
    When the active normal matrix is singular or has condition estimate above
    1e10, a small ridge term (1e-8 * trace / m) is added and the affected
    columns are reported in ``damped_columns``.  Standard errors come from
    the classical sigma^2 * inv(X^T X) diagonal with
    sigma^2 = RSS / max(n - m, 1).
    """
    X = problem.design
    y = problem.response
    n, m = X.shape
    if n == 0:
        raise EmptyProblem(f"regression for {problem.own_task_id!r} has no rows")

    sample_counts = tuple(int(np.count_nonzero(X[:, j])) for j in range(m))
    coefficients = np.ones(m, dtype=float)
    std_errors = np.zeros(m, dtype=float)
    active = [j for j in range(m) if sample_counts[j] > 0]
    if not active:
        return SynergyFit(coefficients, std_errors, sample_counts)

    Xa = X[:, active]
    xtx = Xa.T @ Xa
    xty = Xa.T @ y
    cond = np.linalg.cond(xtx)
    damped: tuple[int, ...] = ()
    if not np.isfinite(cond) or cond > ILL_CONDITIONED:
        lam = 1e-8 * np.trace(xtx) / len(active)
        xtx = xtx + lam * np.eye(len(active))
        damped = tuple(active)
    solution = np.linalg.solve(xtx, xty)

    residual = y - Xa @ solution
    rss = float(residual @ residual)
    sigma2 = rss / max(n - len(active), 1)
    covariance_diag = sigma2 * np.diag(np.linalg.inv(xtx))
    errors = np.sqrt(np.clip(covariance_diag, 0.0, None))

    for idx, j in enumerate(active):
        coefficients[j] = solution[idx]
        std_errors[j] = errors[idx]
    return SynergyFit(coefficients, std_errors, sample_counts, damped)


def estimate_synergy_matrix(
    traces: Sequence[ExecutionTrace],
    stats: StatsMap,
    human_task_ids: Sequence[str],
    robot_task_ids: Sequence[str],
    outlier_strategy: str = "none",
) -> SynergyMatrix:
    """Estimate both agents' synergy matrices from a trace set.

    Per own task: its measured durations are outlier-filtered, the surviving
    executions form the regression rows, and the solved coefficients fill one
    matrix row.  A task with no statistics or no usable executions keeps the
    neutral defaults for its whole row (sample_count 0 marks the entries as
    unobserved); estimation never aborts because of a single task.

    Filtering defaults to off: slow executions ARE the coupling signal, and
    on low-noise data a Tukey fence tends to sit right on the uncoupled mode
    and discard exactly the concurrent-slowdown samples.  Pass "iqr" to trim
    genuinely noisy duration measurements.
    """
    entries: dict[AgentId, dict[tuple[str, str], SynergyEntry]] = {
        AgentId.HUMAN: {},
        AgentId.ROBOT: {},
    }
    sides = (
        (AgentId.ROBOT, robot_task_ids, human_task_ids),
        (AgentId.HUMAN, human_task_ids, robot_task_ids),
    )
    for own_agent, own_ids, counterpart_ids in sides:
        for own_id in own_ids:
            row = _estimate_row(traces, own_id, own_agent, stats, counterpart_ids, outlier_strategy)
            for counterpart_id, entry in zip(counterpart_ids, row):
                entries[own_agent][(own_id, counterpart_id)] = entry
    return SynergyMatrix(entries)


def _estimate_row(
    traces: Sequence[ExecutionTrace],
    own_id: str,
    own_agent: AgentId,
    stats: StatsMap,
    counterpart_ids: Sequence[str],
    outlier_strategy: str,
) -> list[SynergyEntry]:
    neutral_row = [SynergyEntry() for _ in counterpart_ids]
    executions = _own_executions(traces, own_id, own_agent)
    if not executions or (own_id, own_agent) not in stats:
        if not executions:
            logger.warning("no executions of %s/%s; keeping neutral row", own_id, own_agent.value)
        else:
            logger.warning("no statistics for %s/%s; keeping neutral row", own_id, own_agent.value)
        return neutral_row

    durations = [interval_duration(rec.interval) for _, rec in executions]
    report = filter_outliers(durations, outlier_strategy)
    filtered = _drop_executions(traces, executions, set(report.kept))

    try:
        problem = build_regression(filtered, own_id, own_agent, stats, counterpart_ids)
    except NoSamples:
        logger.warning("all executions of %s/%s filtered out; keeping neutral row", own_id, own_agent.value)
        return neutral_row
    fit = solve_synergy(problem)
    row = []
    for j in range(len(counterpart_ids)):
        if fit.sample_counts[j] == 0:
            row.append(SynergyEntry())
        else:
            row.append(
                SynergyEntry(
                    coefficient=max(float(fit.coefficients[j]), COEFFICIENT_FLOOR),
                    std_error=float(fit.std_errors[j]),
                    sample_count=fit.sample_counts[j],
                )
            )
    return row


def _drop_executions(
    traces: Sequence[ExecutionTrace],
    executions: Sequence[tuple[ExecutionTrace, ExecutionRecord]],
    kept: set[int],
) -> Sequence[ExecutionTrace]:
    """Remove outlier executions as regression samples.

    The dropped records are marked failed in rebuilt traces, which excludes
    them as own-task rows while the rest of the run stays intact.  They only
    appear in the regression of their own task, so no counterpart overlap of
    another task is affected.
    """
    dropped = {id(rec) for k, (_, rec) in enumerate(executions) if k not in kept}
    if not dropped:
        return traces
    rebuilt = []
    for trace in traces:
        if any(id(rec) in dropped for rec in trace.records):
            records = tuple(
                rec
                if id(rec) not in dropped
                else ExecutionRecord(rec.plan_id, rec.task_id, rec.agent, rec.interval, success=False)
                for rec in trace.records
            )
            rebuilt.append(ExecutionTrace(trace.plan_id, records))
        else:
            rebuilt.append(trace)
    return rebuilt
