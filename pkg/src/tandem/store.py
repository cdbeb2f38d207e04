"""File-backed document collections: the persistent knowledge base.

Five collections, one newline-delimited JSON file each: task_properties
(symbolic task definitions), task_results (measured executions), task_duration
(expected durations), task_synergy (one document per coefficient), and plans.
Documents are keyed by their "id" field; an upsert replaces in place so
insertion order is stable, and every write lands via write-temp-then-rename,
so a reader never sees a half-written document.  Concurrent writers must be
serialized by the caller.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IoFailure, SchemaViolation, UnknownCollection, UnknownPlan
from .estimator import ExecutionRecord, ExecutionTrace
from .model import AgentId, TimeInterval

COLLECTIONS = ("task_properties", "task_results", "task_duration", "task_synergy", "plans")

_NUMBER = (int, float)

# Required fields and accepted types per collection.
_SCHEMAS: dict[str, dict[str, tuple]] = {
    "task_properties": {
        "id": (str,),
        "action": (str,),
        "agents": (list,),
        "region": (str,),
        "description": (str,),
    },
    "task_results": {
        "id": (str,),
        "plan_id": (str,),
        "task_id": (str,),
        "agent": (str,),
        "start": _NUMBER + (type(None),),
        "end": _NUMBER + (type(None),),
        "success": (bool,),
    },
    "task_duration": {
        "id": (str,),
        "task_id": (str,),
        "agent": (str,),
        "mean": _NUMBER,
        "std": _NUMBER,
        "count": (int,),
    },
    "task_synergy": {
        "id": (str,),
        "agent": (str,),
        "task_id": (str,),
        "other_task_id": (str,),
        "coefficient": _NUMBER,
        "std_error": _NUMBER,
        "sample_count": (int,),
    },
    "plans": {
        "id": (str,),
        "assignment": (dict,),
        "order": (dict,),
        "makespan": _NUMBER,
        "kind": (str,),
    },
}


def _dumps(doc: Mapping) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def validate_document(collection: str, doc: Mapping) -> None:
    schema = _SCHEMAS.get(collection)
    if schema is None:
        raise UnknownCollection(f"unknown collection {collection!r}")
    for field, types in schema.items():
        if field not in doc:
            raise SchemaViolation(collection, field, "is required")
        value = doc[field]
        # bool is an int subclass; keep it out of numeric fields.
        if isinstance(value, bool) and bool not in types:
            raise SchemaViolation(collection, field, f"has invalid type {type(value).__name__}")
        if not isinstance(value, types):
            raise SchemaViolation(collection, field, f"has invalid type {type(value).__name__}")


class Store:
    """Document store rooted at a directory, one JSONL file per collection."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoFailure(f"cannot create store root {self.root}: {exc}") from exc
        self._cache: dict[str, tuple[list[str], dict[str, dict]]] = {}

    def path(self, collection: str) -> Path:
        if collection not in COLLECTIONS:
            raise UnknownCollection(f"unknown collection {collection!r}")
        return self.root / f"{collection}.jsonl"

    def _load(self, collection: str) -> tuple[list[str], dict[str, dict]]:
        if collection in self._cache:
            return self._cache[collection]
        path = self.path(collection)
        order: list[str] = []
        docs: dict[str, dict] = {}
        if path.exists():
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise IoFailure(f"cannot read {path}: {exc}") from exc
            for line in text.splitlines():
                if not line.strip():
                    continue
                doc = json.loads(line)
                doc_id = doc["id"]
                if doc_id not in docs:
                    order.append(doc_id)
                docs[doc_id] = doc
        self._cache[collection] = (order, docs)
        return order, docs

    def _flush(self, collection: str) -> None:
        order, docs = self._cache[collection]
        path = self.path(collection)
        tmp = path.with_name(path.name + ".tmp")
        try:
            with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                for doc_id in order:
                    fh.write(_dumps(docs[doc_id]))
                    fh.write("\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    def upsert(self, collection: str, doc: Mapping) -> str:
        """Insert or replace a document by id; durable when this returns."""
        return self.upsert_many(collection, [doc])[0]

    def upsert_many(self, collection: str, documents: Iterable[Mapping]) -> list[str]:
        """Upsert a batch atomically (one rewrite), preserving insertion order."""
        order, docs = self._load(collection)
        ids = []
        for doc in documents:
            validate_document(collection, doc)
            doc = dict(doc)
            doc_id = doc["id"]
            if doc_id not in docs:
                order.append(doc_id)
            docs[doc_id] = doc
            ids.append(doc_id)
        self._flush(collection)
        return ids

    def query(self, collection: str, filter: Mapping | None = None) -> list[dict]:
        """All documents matching the field-equality filter, in insertion order."""
        order, docs = self._load(collection)
        out = []
        for doc_id in order:
            doc = docs[doc_id]
            if filter and any(doc.get(k) != v for k, v in filter.items()):
                continue
            out.append(dict(doc))
        return out

    def get(self, collection: str, doc_id: str) -> dict | None:
        _, docs = self._load(collection)
        doc = docs.get(doc_id)
        return dict(doc) if doc is not None else None

    def count(self, collection: str) -> int:
        order, _ = self._load(collection)
        return len(order)

    # -- execution trace bridge ------------------------------------------

    def record_trace(self, trace: ExecutionTrace) -> None:
        """Persist a trace's records, ids derived from the plan and position."""
        docs = []
        for k, rec in enumerate(trace.records):
            docs.append(
                {
                    "id": f"{trace.plan_id}:{k:04d}",
                    "plan_id": rec.plan_id,
                    "task_id": rec.task_id,
                    "agent": rec.agent.value,
                    "start": None if rec.interval is None else rec.interval.start,
                    "end": None if rec.interval is None else rec.interval.end,
                    "success": rec.success,
                }
            )
        self.upsert_many("task_results", docs)

    def export_traces(self, plan_ids: Sequence[str] | None = None) -> list[ExecutionTrace]:
        """Reconstruct execution traces from task_results, grouped by plan.

        Records keep their stored order, so re-recording an exported trace
        reproduces the original documents exactly.  None means every plan, in
        order of first appearance.
        """
        results = self.query("task_results")
        if plan_ids is None:
            plan_ids = list(dict.fromkeys(doc["plan_id"] for doc in results))
        by_plan: dict[str, list[dict]] = {pid: [] for pid in plan_ids}
        for doc in results:
            if doc["plan_id"] in by_plan:
                by_plan[doc["plan_id"]].append(doc)
        traces = []
        for pid in plan_ids:
            docs = by_plan[pid]
            if not docs:
                raise UnknownPlan(pid)
            records = tuple(
                ExecutionRecord(
                    plan_id=doc["plan_id"],
                    task_id=doc["task_id"],
                    agent=AgentId(doc["agent"]),
                    interval=None
                    if doc["start"] is None
                    else TimeInterval(float(doc["start"]), float(doc["end"])),
                    success=doc["success"],
                )
                for doc in docs
            )
            traces.append(ExecutionTrace(plan_id=pid, records=records))
        return traces
