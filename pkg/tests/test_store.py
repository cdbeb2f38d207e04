"""Document store: schemas, ordering, atomicity, and trace round trips."""

from __future__ import annotations

import json

import pytest

from tandem.errors import SchemaViolation, UnknownCollection, UnknownPlan
from tandem.estimator import ExecutionRecord, ExecutionTrace
from tandem.model import AgentId, TimeInterval
from tandem.store import Store, validate_document

H, R = AgentId.HUMAN, AgentId.ROBOT


def _duration_doc(task_id="pick_white", agent="human", mean=8.0):
    return {
        "id": f"{task_id}:{agent}",
        "task_id": task_id,
        "agent": agent,
        "mean": mean,
        "std": 0.4,
        "count": 12,
    }


class TestUpsertAndQuery:
    def test_roundtrip(self, tmp_path):
        store = Store(tmp_path)
        doc = _duration_doc()
        store.upsert("task_duration", doc)
        assert store.get("task_duration", doc["id"]) == doc

    def test_replace_keeps_count_and_position(self, tmp_path):
        store = Store(tmp_path)
        store.upsert("task_duration", _duration_doc("a"))
        store.upsert("task_duration", _duration_doc("b"))
        store.upsert("task_duration", _duration_doc("a", mean=9.0))
        assert store.count("task_duration") == 2
        docs = store.query("task_duration")
        assert [d["task_id"] for d in docs] == ["a", "b"]
        assert docs[0]["mean"] == 9.0

    def test_missing_field_names_it(self, tmp_path):
        doc = _duration_doc()
        del doc["mean"]
        with pytest.raises(SchemaViolation) as err:
            Store(tmp_path).upsert("task_duration", doc)
        assert err.value.field == "mean"

    def test_wrong_type_names_field(self):
        doc = _duration_doc()
        doc["count"] = "twelve"
        with pytest.raises(SchemaViolation) as err:
            validate_document("task_duration", doc)
        assert err.value.field == "count"

    def test_bool_is_not_a_number(self):
        doc = _duration_doc()
        doc["mean"] = True
        with pytest.raises(SchemaViolation):
            validate_document("task_duration", doc)

    def test_unknown_collection(self, tmp_path):
        store = Store(tmp_path)
        with pytest.raises(UnknownCollection):
            store.query("recipes")
        with pytest.raises(UnknownCollection):
            store.upsert("recipes", {"id": "x"})

    def test_filter_equality(self, tmp_path):
        store = Store(tmp_path)
        store.upsert_many(
            "task_duration", [_duration_doc("a"), _duration_doc("b"), _duration_doc("a", "robot")]
        )
        assert len(store.query("task_duration", {"task_id": "a"})) == 2
        assert len(store.query("task_duration", {"task_id": "a", "agent": "robot"})) == 1

    def test_filter_on_absent_field(self, tmp_path):
        store = Store(tmp_path)
        store.upsert("task_duration", _duration_doc())
        assert store.query("task_duration", {"nonexistent": 1}) == []

    def test_empty_collection(self, tmp_path):
        assert Store(tmp_path).query("plans") == []


class TestFileFormat:
    def test_no_temp_files_left_behind(self, tmp_path):
        store = Store(tmp_path)
        store.upsert("task_duration", _duration_doc())
        assert [p.name for p in tmp_path.iterdir()] == ["task_duration.jsonl"]

    def test_one_json_document_per_line(self, tmp_path):
        store = Store(tmp_path)
        store.upsert_many("task_duration", [_duration_doc("a"), _duration_doc("b")])
        lines = (tmp_path / "task_duration.jsonl").read_text().splitlines()
        assert len(lines) == 2
        assert all(json.loads(line)["id"] for line in lines)

    def test_rewrite_is_byte_stable(self, tmp_path):
        store = Store(tmp_path)
        docs = [_duration_doc("a"), _duration_doc("b")]
        store.upsert_many("task_duration", docs)
        before = (tmp_path / "task_duration.jsonl").read_bytes()
        reread = Store(tmp_path).query("task_duration")
        Store(tmp_path / "copy").upsert_many("task_duration", reread)
        after = (tmp_path / "copy" / "task_duration.jsonl").read_bytes()
        assert before == after


def _small_trace(plan_id="p1"):
    return ExecutionTrace(
        plan_id,
        (
            ExecutionRecord(plan_id, "pick_white", H, TimeInterval(0.0, 8.25), True),
            ExecutionRecord(plan_id, "pick_orange", R, TimeInterval(0.0, 9.5), True),
            ExecutionRecord(plan_id, "place_white", H, None, False),
        ),
    )


class TestTraceBridge:
    def test_record_then_export_matches(self, tmp_path):
        store = Store(tmp_path)
        trace = _small_trace()
        store.record_trace(trace)
        (exported,) = store.export_traces(["p1"])
        assert exported == trace

    def test_export_selects_requested_plans(self, tmp_path):
        store = Store(tmp_path)
        store.record_trace(_small_trace("p1"))
        store.record_trace(_small_trace("p2"))
        (only,) = store.export_traces(["p2"])
        assert only.plan_id == "p2"
        assert [t.plan_id for t in store.export_traces()] == ["p1", "p2"]

    def test_unknown_plan(self, tmp_path):
        store = Store(tmp_path)
        store.record_trace(_small_trace("p1"))
        with pytest.raises(UnknownPlan):
            store.export_traces(["p404"])

    def test_failed_record_flag_round_trips(self, tmp_path):
        store = Store(tmp_path)
        store.record_trace(_small_trace())
        (exported,) = store.export_traces(["p1"])
        failed = [r for r in exported.records if not r.success]
        assert len(failed) == 1
        assert failed[0].interval is None

    def test_reimport_reproduces_bytes(self, tmp_path):
        first = Store(tmp_path / "a")
        first.record_trace(_small_trace("p1"))
        first.record_trace(_small_trace("p2"))
        second = Store(tmp_path / "b")
        for trace in first.export_traces():
            second.record_trace(trace)
        assert (
            (tmp_path / "a" / "task_results.jsonl").read_bytes()
            == (tmp_path / "b" / "task_results.jsonl").read_bytes()
        )
