"""CLI subcommands: exit codes, piping CSV between steps, determinism."""

import json

import pytest
from click.testing import CliRunner

from fhirflow.cli import main
from fhirflow.explore import parse_csv
from fhirflow.table import SchemaKind

from conftest import (
    ecg_doc,
    observation_doc,
    patient_doc,
    phq9_questionnaire_doc,
    phq9_response_doc,
    write_ndjson,
)

MASK_KEY_HEX = "00112233445566778899aabbccddeeff"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def env(tmp_path):
    return {
        "FHIRFLOW_STORE_PATH": str(tmp_path / "store"),
        "FHIRFLOW_MASK_KEY": MASK_KEY_HEX,
    }


def corpus_docs():
    docs = [
        observation_doc(f"steps-{d}", "alice", f"2024-01-{d:02d}T12:00:00Z", 100.0 * d)
        for d in range(1, 8)
    ]
    docs += [
        observation_doc("steps-bob", "bob", "2024-01-03T10:00:00Z", 2500.0),
        ecg_doc("ecg-1", "alice", "2024-01-05T08:00:00Z", n=256),
        phq9_response_doc("phq-1", "alice", "2024-01-04T10:00:00Z", [2, 1, 3, 0, 2, 1, 1, 0, 2]),
        phq9_questionnaire_doc(),
        patient_doc("alice", "2012-03-05", "female"),
        patient_doc("bob", "2016-08-01"),
    ]
    return docs


@pytest.fixture
def ingested(runner, env, tmp_path):
    write_ndjson(tmp_path / "batch.ndjson", corpus_docs())
    assert runner.invoke(main, ["init"], env=env).exit_code == 0
    result = runner.invoke(main, ["ingest", str(tmp_path / "batch.ndjson")], env=env)
    assert result.exit_code == 0, result.output
    return tmp_path


class TestInitAndIngest:
    def test_init_creates_store(self, runner, env, tmp_path):
        result = runner.invoke(main, ["init"], env=env)
        assert result.exit_code == 0
        assert (tmp_path / "store" / "index.json").exists()

    def test_ingest_reports_counts(self, runner, env, tmp_path):
        write_ndjson(tmp_path / "batch.ndjson", corpus_docs())
        runner.invoke(main, ["init"], env=env)
        result = runner.invoke(main, ["ingest", str(tmp_path / "batch.ndjson")], env=env)
        assert result.exit_code == 0
        assert "accepted 13, duplicates 0, rejected 0" in result.output

    def test_ingest_rejects_exit_1(self, runner, env, tmp_path):
        bad = observation_doc("bad", "alice", "2024-01-01T00:00:00Z", 1.0)
        del bad["subject"]
        write_ndjson(tmp_path / "bad.ndjson", [bad])
        runner.invoke(main, ["init"], env=env)
        result = runner.invoke(main, ["ingest", str(tmp_path / "bad.ndjson")], env=env)
        assert result.exit_code == 1

    def test_ingest_allow_partial(self, runner, env, tmp_path):
        good = observation_doc("ok", "alice", "2024-01-01T00:00:00Z", 1.0)
        bad = observation_doc("bad", "alice", "2024-01-01T00:00:00Z", 1.0)
        del bad["subject"]
        write_ndjson(tmp_path / "mixed.ndjson", [good, bad])
        runner.invoke(main, ["init"], env=env)
        result = runner.invoke(
            main, ["ingest", "--allow-partial", str(tmp_path / "mixed.ndjson")], env=env
        )
        assert result.exit_code == 0
        assert "accepted 1" in result.output

    def test_missing_store_is_error(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["ingest", str(tmp_path)],
            env={"FHIRFLOW_STORE_PATH": str(tmp_path / "nowhere")},
        )
        assert result.exit_code == 1


class TestFlatten:
    def test_observation_csv(self, runner, env, ingested):
        out = ingested / "obs.csv"
        result = runner.invoke(main, ["flatten", "--kind", "observation", "--out", str(out)], env=env)
        assert result.exit_code == 0, result.output
        table = parse_csv(out)
        assert table.schema_kind is SchemaKind.OBSERVATION
        assert len(table) == 8

    def test_ecg_csv(self, runner, env, ingested):
        out = ingested / "ecg.csv"
        assert runner.invoke(main, ["flatten", "--kind", "ecg", "--out", str(out)], env=env).exit_code == 0
        table = parse_csv(out)
        assert table.schema_kind is SchemaKind.ECG
        assert table.row_dict(0)["numberOfMeasurements"] == 256

    def test_questionnaire_csv(self, runner, env, ingested):
        out = ingested / "q.csv"
        assert (
            runner.invoke(main, ["flatten", "--kind", "questionnaire", "--out", str(out)], env=env).exit_code
            == 0
        )
        assert len(parse_csv(out)) == 9

    def test_users_csv(self, runner, env, ingested):
        out = ingested / "users.csv"
        assert runner.invoke(main, ["flatten", "--kind", "users", "--out", str(out)], env=env).exit_code == 0
        table = parse_csv(out)
        assert table.schema_kind is SchemaKind.USER
        assert set(table.column_values("userId")) == {"alice", "bob"}

    def test_user_and_date_filters(self, runner, env, ingested):
        out = ingested / "slice.csv"
        result = runner.invoke(
            main,
            [
                "flatten", "--kind", "observation", "--out", str(out),
                "--user", "alice", "--from", "2024-01-02", "--to", "2024-01-03",
            ],
            env=env,
        )
        assert result.exit_code == 0, result.output
        table = parse_csv(out)
        assert [r[1] for r in table] == ["steps-2", "steps-3"]

    def test_unknown_kind_usage_error(self, runner, env, ingested):
        result = runner.invoke(main, ["flatten", "--kind", "nope", "--out", "x.csv"], env=env)
        assert result.exit_code == 2


class TestProcess:
    @pytest.fixture
    def obs_csv(self, runner, env, ingested):
        out = ingested / "obs.csv"
        runner.invoke(main, ["flatten", "--kind", "observation", "--out", str(out)], env=env)
        return out

    def test_daily_sum(self, runner, env, obs_csv, tmp_path):
        out = tmp_path / "daily.csv"
        result = runner.invoke(
            main, ["process", "--op", "daily-sum", "--in", str(obs_csv), "--out", str(out)], env=env
        )
        assert result.exit_code == 0
        table = parse_csv(out)
        assert all(r[1].startswith("daily-sum:") for r in table)

    def test_activity_index(self, runner, env, obs_csv, tmp_path):
        out = tmp_path / "ai.csv"
        result = runner.invoke(
            main, ["process", "--op", "activity-index", "--in", str(obs_csv), "--out", str(out)], env=env
        )
        assert result.exit_code == 0
        table = parse_csv(out)
        day7 = next(
            table.row_dict(i)
            for i in range(len(table))
            if table.row_dict(i)["resourceId"] == "activity-index:alice:2024-01-07"
        )
        assert day7["value"] == 400.0

    def test_filter_outliers_with_policy(self, runner, env, obs_csv, tmp_path):
        policy = tmp_path / "policy.json"
        policy.write_text(json.dumps({"mode": "FixedRange", "perMetricRanges": {"StepCount": [0, 650]}}))
        out = tmp_path / "filtered.csv"
        result = runner.invoke(
            main,
            [
                "process", "--op", "filter-outliers", "--in", str(obs_csv),
                "--out", str(out), "--policy", str(policy),
            ],
            env=env,
        )
        assert result.exit_code == 0, result.output
        assert "removed 2" in result.stderr
        assert len(parse_csv(out)) == 6

    def test_mask_uses_env_key(self, runner, env, obs_csv, tmp_path):
        out = tmp_path / "masked.csv"
        result = runner.invoke(
            main, ["process", "--op", "mask", "--in", str(obs_csv), "--out", str(out)], env=env
        )
        assert result.exit_code == 0
        table = parse_csv(out)
        assert "alice" not in table.column_values("userId")

    def test_mask_without_key_usage_error(self, runner, obs_csv, tmp_path, env):
        bare_env = {"FHIRFLOW_STORE_PATH": env["FHIRFLOW_STORE_PATH"]}
        result = runner.invoke(
            main,
            ["process", "--op", "mask", "--in", str(obs_csv), "--out", str(tmp_path / "m.csv")],
            env=bare_env,
        )
        assert result.exit_code == 2

    def test_wrong_schema_exit_1(self, runner, env, ingested, tmp_path):
        users = ingested / "users.csv"
        runner.invoke(main, ["flatten", "--kind", "users", "--out", str(users)], env=env)
        result = runner.invoke(
            main,
            ["process", "--op", "daily-sum", "--in", str(users), "--out", str(tmp_path / "x.csv")],
            env=env,
        )
        assert result.exit_code == 1


class TestScore:
    def test_phq9(self, runner, env, ingested, tmp_path):
        q = ingested / "q.csv"
        runner.invoke(main, ["flatten", "--kind", "questionnaire", "--out", str(q)], env=env)
        out = tmp_path / "scores.csv"
        result = runner.invoke(
            main, ["score", "--instrument", "phq9", "--in", str(q), "--out", str(out)], env=env
        )
        assert result.exit_code == 0, result.output
        table = parse_csv(out)
        row = table.row_dict(0)
        assert row["totalScore"] == 12
        assert row["severityBand"] == "moderate"

    def test_rejections_exit_1_without_flag(self, runner, env, ingested, tmp_path):
        incomplete = phq9_response_doc("short", "bob", "2024-01-06T10:00:00Z", [1, 1, 1])
        write_ndjson(ingested / "extra.ndjson", [incomplete])
        runner.invoke(main, ["ingest", str(ingested / "extra.ndjson")], env=env)
        q = ingested / "q2.csv"
        runner.invoke(main, ["flatten", "--kind", "questionnaire", "--out", str(q)], env=env)
        out = tmp_path / "scores.csv"
        strict = runner.invoke(main, ["score", "--instrument", "phq9", "--in", str(q), "--out", str(out)], env=env)
        assert strict.exit_code == 1
        lenient = runner.invoke(
            main,
            ["score", "--instrument", "phq9", "--in", str(q), "--out", str(out), "--allow-partial"],
            env=env,
        )
        assert lenient.exit_code == 0
        assert len(parse_csv(out)) == 1


class TestChart:
    @pytest.fixture
    def tables(self, runner, env, ingested):
        obs = ingested / "obs.csv"
        ecg = ingested / "ecg.csv"
        runner.invoke(main, ["flatten", "--kind", "observation", "--out", str(obs)], env=env)
        runner.invoke(main, ["flatten", "--kind", "ecg", "--out", str(ecg)], env=env)
        return obs, ecg

    def test_daily_svg(self, runner, env, tables, tmp_path):
        obs, _ = tables
        out = tmp_path / "daily.svg"
        result = runner.invoke(
            main,
            ["chart", "--kind", "daily", "--metric", "steps", "--in", str(obs), "--out", str(out)],
            env=env,
        )
        assert result.exit_code == 0, result.output
        assert out.read_bytes().startswith(b"<?xml")

    def test_daily_json(self, runner, env, tables, tmp_path):
        obs, _ = tables
        out = tmp_path / "daily.json"
        runner.invoke(
            main,
            ["chart", "--kind", "daily", "--metric", "steps", "--in", str(obs), "--out", str(out)],
            env=env,
        )
        doc = json.loads(out.read_text())
        assert doc["kind"] == "line"

    def test_ecg_trace_with_window(self, runner, env, tables, tmp_path):
        _, ecg = tables
        out = tmp_path / "trace.svg"
        result = runner.invoke(
            main,
            [
                "chart", "--kind", "ecg-trace", "--resource", "ecg-1",
                "--in", str(ecg), "--out", str(out), "--window", "0:0.25",
            ],
            env=env,
        )
        assert result.exit_code == 0, result.output
        assert b"<path" in out.read_bytes()

    def test_unknown_resource_exit_1(self, runner, env, tables, tmp_path):
        _, ecg = tables
        result = runner.invoke(
            main,
            ["chart", "--kind", "ecg-trace", "--resource", "nope", "--in", str(ecg), "--out", str(tmp_path / "x.svg")],
            env=env,
        )
        assert result.exit_code == 1

    def test_unknown_kind_exit_2(self, runner, env, tables, tmp_path):
        obs, _ = tables
        result = runner.invoke(
            main,
            ["chart", "--kind", "mystery", "--in", str(obs), "--out", str(tmp_path / "x.svg")],
            env=env,
        )
        assert result.exit_code == 2


class TestDeterminism:
    def test_pipeline_outputs_byte_identical(self, runner, env, ingested, tmp_path):
        def run_pipeline(tag):
            obs = tmp_path / f"obs-{tag}.csv"
            daily = tmp_path / f"daily-{tag}.csv"
            svg = tmp_path / f"chart-{tag}.svg"
            chart = tmp_path / f"chart-{tag}.json"
            masked = tmp_path / f"masked-{tag}.csv"
            for args in (
                ["flatten", "--kind", "observation", "--out", str(obs)],
                ["process", "--op", "daily-sum", "--in", str(obs), "--out", str(daily)],
                ["process", "--op", "mask", "--in", str(daily), "--out", str(masked)],
                ["chart", "--kind", "daily", "--metric", "steps", "--in", str(obs), "--out", str(svg)],
                ["chart", "--kind", "daily", "--metric", "steps", "--in", str(obs), "--out", str(chart)],
            ):
                result = runner.invoke(main, args, env=env)
                assert result.exit_code == 0, result.output
            return [p.read_bytes() for p in (obs, daily, masked, svg, chart)]

        assert run_pipeline("a") == run_pipeline("b")


class TestReindex:
    def test_reindex_after_index_loss(self, runner, env, ingested):
        (ingested / "store" / "index.json").unlink()
        result = runner.invoke(main, ["reindex"], env=env)
        assert result.exit_code == 0
        assert "indexed 13" in result.output
