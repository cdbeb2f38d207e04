"""Command-line front end: simulate, estimate, plan, report.

A campaign run composes the whole pipeline against one store directory::

    tandem simulate --store runs/demo --plans 50 --seed 1
    tandem estimate --store runs/demo
    tandem plan     --store runs/demo --budget 2000
    tandem report   --store runs/demo --out runs/demo/report

Every command is deterministic given its flags, config, and seed.  The store
root defaults to the TANDEM_STORE environment variable, then ./tandem_store.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import config as worldcfg
from . import report as reporting
from .errors import EmptyStore, MissingEstimates, TandemError
from .estimator import (
    estimate_synergy_matrix,
    expected_duration,
    filter_outliers,
)
from .model import (
    AgentId,
    DurationStats,
    SynergyEntry,
    SynergyMatrix,
    interval_duration,
    stats_table,
)
from .planner import optimize_plan, random_plan
from .simulator import program_from_plan, simulate_plan
from .store import Store

ENV_STORE = "TANDEM_STORE"
DEFAULT_STORE = "tandem_store"


@dataclass(frozen=True)
class CampaignConfig:
    """Settings of one simulation campaign."""

    plans: int
    seed: int
    config_path: str | None
    store_root: Path

    def __post_init__(self) -> None:
        if self.plans < 1:
            raise ValueError(f"plan count must be at least 1, got {self.plans}")


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def _store_root(args: argparse.Namespace) -> Path:
    if args.store:
        return Path(args.store)
    return Path(os.environ.get(ENV_STORE, DEFAULT_STORE))


def _catalog_docs(cfg: worldcfg.WorldConfig) -> list[dict]:
    return [
        {
            "id": task.spec.id,
            "action": task.spec.action.value,
            "agents": sorted(a.value for a in task.spec.eligible_agents),
            "region": task.spec.region,
            "description": task.spec.description,
        }
        for task in cfg.tasks.values()
    ]


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = worldcfg.load_world_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    campaign = CampaignConfig(
        plans=args.plans, seed=seed, config_path=args.config, store_root=_store_root(args)
    )
    domain = worldcfg.build_domain(cfg)
    store = Store(campaign.store_root)
    store.upsert_many("task_properties", _catalog_docs(cfg))

    makespans = []
    for k in range(campaign.plans):
        plan = random_plan(domain, seed=[campaign.seed, k, 0])
        program = program_from_plan(domain, plan)
        plan_id = f"plan-{k:04d}"
        trace = simulate_plan(program, cfg, seed=[campaign.seed, k, 1], plan_id=plan_id)
        store.record_trace(trace)
        makespan = max(rec.interval.end for rec in trace.records)
        makespans.append(makespan)
        store.upsert(
            "plans",
            {
                "id": plan_id,
                "assignment": {uid: agent.value for uid, agent in plan.assignment.items()},
                "order": {agent.value: list(plan.order[agent]) for agent in AgentId},
                "makespan": makespan,
                "kind": "simulated",
            },
        )
        print(f"{plan_id}: makespan {makespan:.3f} s")
    print(
        f"simulated {campaign.plans} plans (seed {campaign.seed}) into {campaign.store_root}; "
        f"makespan min {min(makespans):.3f} / max {max(makespans):.3f} s"
    )
    return 0


def _duration_stats(store: Store, strategy: str) -> list[DurationStats]:
    """Per (task type, agent) stats over successful executions, outliers removed."""
    samples: dict[tuple[str, AgentId], list[float]] = {}
    for trace in store.export_traces():
        for rec in trace.records:
            if not rec.success:
                continue
            samples.setdefault((rec.task_id, rec.agent), []).append(
                interval_duration(rec.interval)
            )
    stats = []
    for (task_id, agent), values in samples.items():
        report = filter_outliers(values, strategy)
        kept = [values[i] for i in report.kept]
        mean, std, count = expected_duration(kept)
        stats.append(DurationStats(task_id=task_id, agent=agent, mean=mean, std=std, count=count))
    return stats


def _task_lists(store: Store) -> tuple[list[str], list[str]]:
    """Human and robot task type lists, from the catalog or observed records."""
    catalog = store.query("task_properties")
    if catalog:
        human = [doc["id"] for doc in catalog if AgentId.HUMAN.value in doc["agents"]]
        robot = [doc["id"] for doc in catalog if AgentId.ROBOT.value in doc["agents"]]
        return human, robot
    results = store.query("task_results")
    human = list(dict.fromkeys(d["task_id"] for d in results if d["agent"] == "human"))
    robot = list(dict.fromkeys(d["task_id"] for d in results if d["agent"] == "robot"))
    return human, robot


def cmd_estimate(args: argparse.Namespace) -> int:
    store = Store(_store_root(args))
    if store.count("task_results") == 0:
        raise EmptyStore(f"no task results in {store.root}; run `tandem simulate` first")
    human_ids, robot_ids = _task_lists(store)

    stats = _duration_stats(store, args.outliers)
    store.upsert_many(
        "task_duration",
        [
            {
                "id": f"{s.task_id}:{s.agent.value}",
                "task_id": s.task_id,
                "agent": s.agent.value,
                "mean": s.mean,
                "std": s.std,
                "count": s.count,
            }
            for s in stats
        ],
    )

    traces = store.export_traces()
    matrix = estimate_synergy_matrix(
        traces, stats_table(stats), human_ids, robot_ids, outlier_strategy=args.outliers
    )
    synergy_docs = []
    for agent, own_ids, other_ids in (
        (AgentId.ROBOT, robot_ids, human_ids),
        (AgentId.HUMAN, human_ids, robot_ids),
    ):
        for own in own_ids:
            for other in other_ids:
                entry = matrix.get(agent, own, other)
                synergy_docs.append(
                    {
                        "id": f"{agent.value}:{own}:{other}",
                        "agent": agent.value,
                        "task_id": own,
                        "other_task_id": other,
                        "coefficient": entry.coefficient,
                        "std_error": entry.std_error,
                        "sample_count": entry.sample_count,
                    }
                )
    store.upsert_many("task_synergy", synergy_docs)

    print(f"estimated {len(stats)} task durations and {len(synergy_docs)} synergy entries")
    for s in sorted(stats, key=lambda s: (s.agent.value, s.task_id)):
        print(f"  {s.agent.value:<6} {s.task_id:<14} mean {s.mean:7.3f} s  std {s.std:6.3f}  n {s.count}")
    return 0


def _load_estimates(store: Store) -> tuple[dict, SynergyMatrix]:
    duration_docs = store.query("task_duration")
    synergy_docs = store.query("task_synergy")
    if not duration_docs or not synergy_docs:
        raise MissingEstimates(
            f"store {store.root} lacks duration or synergy estimates; run `tandem estimate`"
        )
    stats = stats_table(
        DurationStats(
            task_id=doc["task_id"],
            agent=AgentId(doc["agent"]),
            mean=float(doc["mean"]),
            std=float(doc["std"]),
            count=int(doc["count"]),
        )
        for doc in duration_docs
    )
    entries: dict[AgentId, dict[tuple[str, str], SynergyEntry]] = {a: {} for a in AgentId}
    for doc in synergy_docs:
        entries[AgentId(doc["agent"])][(doc["task_id"], doc["other_task_id"])] = SynergyEntry(
            coefficient=float(doc["coefficient"]),
            std_error=float(doc["std_error"]),
            sample_count=int(doc["sample_count"]),
        )
    return stats, SynergyMatrix(entries)


def cmd_plan(args: argparse.Namespace) -> int:
    store = Store(_store_root(args))
    stats, synergy = _load_estimates(store)
    cfg = worldcfg.load_world_config(args.config)
    domain = worldcfg.build_domain(cfg)
    seed = cfg.seed if args.seed is None else args.seed

    plan = optimize_plan(domain, stats, synergy, budget=args.budget, seed=seed)
    store.upsert(
        "plans",
        {
            "id": "optimized",
            "assignment": {uid: agent.value for uid, agent in plan.assignment.items()},
            "order": {agent.value: list(plan.order[agent]) for agent in AgentId},
            "makespan": plan.predicted_makespan,
            "kind": "optimized",
        },
    )
    print(f"best plan (budget {args.budget}, seed {seed}): "
          f"predicted makespan {plan.predicted_makespan:.3f} s")
    for agent in AgentId:
        lane = " -> ".join(plan.order[agent]) or "(idle)"
        print(f"  {agent.value}: {lane}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    store = Store(_store_root(args))
    duration_docs = store.query("task_duration")
    synergy_docs = store.query("task_synergy")
    if not duration_docs or not synergy_docs:
        raise MissingEstimates(
            f"store {store.root} lacks estimates to report; run `tandem estimate`"
        )
    human_ids, robot_ids = _task_lists(store)
    _, matrix = _load_estimates(store)

    heatmaps = []
    for agent, own_ids, other_ids in (
        (AgentId.ROBOT, robot_ids, human_ids),
        (AgentId.HUMAN, human_ids, robot_ids),
    ):
        if own_ids and other_ids:
            heatmaps.append(reporting.heatmap_from_matrix(matrix, agent, own_ids, other_ids))
    bundle = reporting.ReportBundle(
        durations=tuple(duration_docs),
        heatmaps=tuple(heatmaps),
        coefficients=tuple(synergy_docs),
    )
    out_dir = Path(args.out) if args.out else store.root / "report"
    written = reporting.write_report(out_dir, bundle)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tandem",
        description="Learn task durations and human-robot synergy, then plan with them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--store", help=f"store directory (default: ${ENV_STORE} or ./{DEFAULT_STORE})")

    p_sim = sub.add_parser("simulate", help="run a campaign of random plans in the workcell")
    add_common(p_sim)
    p_sim.add_argument("--config", help="world config YAML (defaults are built in)")
    p_sim.add_argument("--plans", type=int, default=50, help="number of random plans (default 50)")
    p_sim.add_argument("--seed", type=_seed, default=None, help="campaign seed (default: config seed)")
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="estimate durations and synergy from stored results")
    add_common(p_est)
    p_est.add_argument(
        "--outliers", choices=("iqr", "none"), default="none",
        help="outlier filter applied to duration samples (default none; "
        "iqr can discard coupled slowdowns on low-noise data)",
    )
    p_est.set_defaults(func=cmd_estimate)

    p_plan = sub.add_parser("plan", help="search for the minimum-makespan plan")
    add_common(p_plan)
    p_plan.add_argument("--config", help="world config YAML (defaults are built in)")
    p_plan.add_argument("--budget", type=int, default=2000, help="candidate evaluations (default 2000)")
    p_plan.add_argument("--seed", type=_seed, default=None, help="search seed (default: config seed)")
    p_plan.set_defaults(func=cmd_plan)

    p_rep = sub.add_parser("report", help="write duration and synergy tables and heatmaps")
    add_common(p_rep)
    p_rep.add_argument("--out", help="output directory (default: <store>/report)")
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TandemError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
