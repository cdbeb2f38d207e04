"""End-to-end CLI behavior: pipeline composition, determinism, error exits."""

from __future__ import annotations

import filecmp

from tandem import cli
from tandem.store import COLLECTIONS, Store


def _run(*args):
    return cli.main([str(a) for a in args])


class TestSimulate:
    def test_single_plan_writes_one_plans_records(self, tmp_path):
        store_dir = tmp_path / "s"
        assert _run("simulate", "--store", store_dir, "--plans", 1, "--seed", 3) == 0
        store = Store(store_dir)
        results = store.query("task_results")
        assert {doc["plan_id"] for doc in results} == {"plan-0000"}
        assert len(results) == 24  # the default process has 12 pick/place pairs
        assert store.count("plans") == 1

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for store_dir in (a, b):
            assert _run("simulate", "--store", store_dir, "--plans", 3, "--seed", 5) == 0
        for name in ("task_properties", "task_results", "plans"):
            assert filecmp.cmp(a / f"{name}.jsonl", b / f"{name}.jsonl", shallow=False)

    def test_custom_config_overrides_defaults(self, tmp_path):
        config = tmp_path / "world.yaml"
        config.write_text("process:\n  - {pick: pick_white, place: place_white, count: 1, color: white}\n")
        store_dir = tmp_path / "s"
        assert _run("simulate", "--store", store_dir, "--config", config, "--plans", 1) == 0
        results = Store(store_dir).query("task_results")
        assert len(results) == 2

    def test_bad_config_fails_cleanly(self, tmp_path, capsys):
        config = tmp_path / "world.yaml"
        config.write_text("regions:\n  shared: {red: 0.9, orange: 0.9, free: 0.2}\n")
        assert _run("simulate", "--store", tmp_path / "s", "--config", config) == 1
        assert "error:" in capsys.readouterr().err

    def test_red_zone_must_stop_robot(self, tmp_path, capsys):
        config = tmp_path / "world.yaml"
        config.write_text("zones:\n  speed_factors: {red: 0.4}\n")
        assert _run("simulate", "--store", tmp_path / "s", "--config", config) == 1
        assert "red" in capsys.readouterr().err


class TestEstimate:
    def test_empty_store_is_an_error(self, tmp_path, capsys):
        assert _run("estimate", "--store", tmp_path / "empty") == 1
        assert "no task results" in capsys.readouterr().err

    def test_writes_one_duration_doc_per_task_type(self, campaign):
        store_dir, _ = campaign
        store = Store(store_dir)
        assert store.count("task_duration") == 8
        assert store.count("task_synergy") == 32  # two 4x4 matrices

    def test_rerun_is_idempotent(self, campaign, tmp_path):
        store_dir, _ = campaign
        before = {
            name: (store_dir / f"{name}.jsonl").read_bytes()
            for name in ("task_duration", "task_synergy")
        }
        assert _run("estimate", "--store", store_dir) == 0
        for name, content in before.items():
            assert (store_dir / f"{name}.jsonl").read_bytes() == content

    def test_robot_only_records_default_human_side(self, tmp_path):
        store_dir = tmp_path / "s"
        store = Store(store_dir)
        store.upsert_many(
            "task_properties",
            [
                {"id": "r_task", "action": "pick", "agents": ["robot"], "region": "x", "description": ""},
                {"id": "h_task", "action": "pick", "agents": ["human"], "region": "x", "description": ""},
            ],
        )
        store.upsert_many(
            "task_results",
            [
                {
                    "id": f"p:{k:04d}",
                    "plan_id": "p",
                    "task_id": "r_task",
                    "agent": "robot",
                    "start": 10.0 * k,
                    "end": 10.0 * k + 8.0,
                    "success": True,
                }
                for k in range(4)
            ],
        )
        assert _run("estimate", "--store", store_dir) == 0
        human_rows = Store(store_dir).query("task_synergy", {"agent": "human"})
        assert human_rows, "human rows must exist even without human records"
        assert all(doc["coefficient"] == 1.0 for doc in human_rows)
        assert all(doc["sample_count"] == 0 for doc in human_rows)


class TestPlanCommand:
    def test_requires_estimates(self, tmp_path, capsys):
        assert _run("plan", "--store", tmp_path / "s") == 1
        assert "estimate" in capsys.readouterr().err

    def test_plans_and_persists(self, campaign):
        store_dir, _ = campaign
        assert _run("plan", "--store", store_dir, "--budget", 50, "--seed", 2) == 0
        doc = Store(store_dir).get("plans", "optimized")
        assert doc is not None
        assert doc["kind"] == "optimized"
        assert doc["makespan"] > 0
        assert len(doc["assignment"]) == 24


class TestReportCommand:
    def test_requires_estimates(self, tmp_path, capsys):
        assert _run("report", "--store", tmp_path / "s") == 1
        assert "estimate" in capsys.readouterr().err

    def test_writes_all_artifacts(self, campaign, tmp_path):
        store_dir, _ = campaign
        out = tmp_path / "report"
        assert _run("report", "--store", store_dir, "--out", out) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == [
            "coefficients.csv",
            "durations.csv",
            "synergy_human.csv",
            "synergy_human.svg",
            "synergy_robot.csv",
            "synergy_robot.svg",
        ]

    def test_report_rerun_is_byte_identical(self, campaign, tmp_path):
        store_dir, _ = campaign
        a, b = tmp_path / "a", tmp_path / "b"
        assert _run("report", "--store", store_dir, "--out", a) == 0
        assert _run("report", "--store", store_dir, "--out", b) == 0
        for path in a.iterdir():
            assert (b / path.name).read_bytes() == path.read_bytes()


class TestPipeline:
    def test_simulate_estimate_report_compose(self, tmp_path):
        store_dir = tmp_path / "s"
        assert _run("simulate", "--store", store_dir, "--plans", 2, "--seed", 7) == 0
        assert _run("estimate", "--store", store_dir) == 0
        assert _run("report", "--store", store_dir) == 0
        assert (store_dir / "report" / "synergy_robot.svg").exists()

    def test_store_root_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.ENV_STORE, str(tmp_path / "env_store"))
        assert _run("simulate", "--plans", 1) == 0
        assert (tmp_path / "env_store" / "task_results.jsonl").exists()

    def test_all_collections_known(self):
        assert set(COLLECTIONS) == {
            "task_properties",
            "task_results",
            "task_duration",
            "task_synergy",
            "plans",
        }
