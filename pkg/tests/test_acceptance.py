"""Release acceptance checks, one test per criterion.

Each test prints "[ACCEPTANCE] <name>: PASS" (or FAIL) so running this file
with -s doubles as a human-readable checklist. Expected values come from
independent oracles computed inline, not from the code under test.
"""

import json
import math
import random
import time
from contextlib import contextmanager
from datetime import date, datetime, timezone

from click.testing import CliRunner
from fastapi.testclient import TestClient

from fhirflow.cli import main
from fhirflow.explore import parse_csv, table_to_csv_text
from fhirflow.model import SpecialToken, decode_sampled_data, encode_samples
from fhirflow.flatten import flatten_observations, flatten_questionnaire_responses
from fhirflow.process import (
    MaskKey,
    activity_index,
    aggregate_daily_mean,
    aggregate_daily_sum,
    mask_identifiers,
    phq9_definition,
    pseudonymize,
    score_phq9,
    select_date_range,
    select_users,
)
from fhirflow.service import create_app
from fhirflow.table import FlatTable, SchemaKind

from conftest import (
    METRIC_CODINGS,
    ecg_doc,
    ecg_tokens,
    make_store,
    observation_doc,
    parse,
    patient_doc,
    phq9_response_doc,
    write_ndjson,
)

UTC = timezone.utc


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


def close(a, b):
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def test_flattening_bijection():
    with criterion("flattening bijection"):
        metrics = list(METRIC_CODINGS)
        rng = random.Random(20240817)
        docs = []
        for i in range(1000):
            day, hour, minute = 1 + i % 28, i % 24, (i * 7) % 60
            start = f"2024-01-{day:02d}T{hour:02d}:{minute:02d}:00Z"
            end = start.replace(":00Z", ":30Z") if i % 7 == 0 else None
            docs.append(
                observation_doc(
                    f"obs-{i:04d}",
                    f"user-{i % 10:02d}",
                    start,
                    round(rng.uniform(0.0, 10000.0), 3),
                    metrics[i % 5],
                    effective_end=end,
                )
            )

        started = time.monotonic()
        table = flatten_observations([parse(d) for d in docs])
        elapsed = time.monotonic() - started
        assert elapsed < 5.0, f"flatten took {elapsed:.2f}s"

        assert len(table) == 1000
        by_id = {table.row_dict(i)["resourceId"]: table.row_dict(i) for i in range(len(table))}
        assert len(by_id) == 1000
        interval_ends = table.provenance.get("intervalEnds", {})

        def instant(text):
            return datetime.fromisoformat(text.replace("Z", "+00:00"))

        for doc in docs:
            row = by_id[doc["id"]]
            codings = doc["code"]["coding"]
            loinc = next((c for c in codings if c["system"] == "http://loinc.org"), None)
            assert row["userId"] == doc["subject"]["reference"].split("/")[1]
            assert row["quantityName"] == codings[0]["display"]
            assert row["unit"] == doc["valueQuantity"]["unit"]
            assert row["value"] == doc["valueQuantity"]["value"]
            assert row["loincCode"] == (loinc["code"] if loinc else "")
            assert row["displayName"] == (loinc["display"] if loinc else "")
            assert row["deviceCode"] == ""
            if "effectivePeriod" in doc:
                assert row["effectiveDate"] == instant(doc["effectivePeriod"]["start"])
                assert instant(interval_ends[doc["id"]]) == instant(doc["effectivePeriod"]["end"])
            else:
                assert row["effectiveDate"] == instant(doc["effectiveDateTime"])


def random_observation_table(seed):
    rng = random.Random(1000 + seed)
    metrics = [
        ("55423-8", "Step Count", "steps"),
        ("8867-4", "Heart Rate", "beats/minute"),
        ("80404-7", "HRV", "ms"),
    ]
    rows = []
    for i in range(rng.randint(5, 40)):
        loinc, name, unit = rng.choice(metrics)
        value = None if rng.random() < 0.1 else rng.uniform(-50.0, 5000.0)
        when = datetime(2024, 1, rng.randint(1, 10), rng.randint(0, 23), rng.randint(0, 59), tzinfo=UTC)
        rows.append((rng.choice(["u1", "u2", "u3"]), f"r{seed}-{i}", name, unit, value, loinc, name, "", when))
    return FlatTable(SchemaKind.OBSERVATION, tuple(rows))


def test_aggregation_oracles():
    with criterion("aggregation oracles"):
        for seed in range(100):
            table = random_observation_table(seed)
            groups = {}
            for row in table:
                if row[4] is None:
                    continue
                groups.setdefault((row[0], row[5], row[2], row[8].date()), []).append(row[4])

            for aggregate, combine in (
                (aggregate_daily_sum, sum),
                (aggregate_daily_mean, lambda vs: sum(vs) / len(vs)),
            ):
                out = aggregate(table)
                got = {
                    (r[0], r[5], r[2], r[8].date()): r[4]
                    for r in out
                }
                assert set(got) == set(groups)
                for key, values in groups.items():
                    assert close(got[key], combine(values)), (seed, key)

            lo, hi = date(2024, 1, 3), date(2024, 1, 7)
            expected = [r for r in table if lo <= r[8].date() <= hi]
            assert list(select_date_range(table, lo, hi)) == expected

            keep = {"u1", "u3"}
            expected = [r for r in table if r[0] in keep]
            assert list(select_users(table, keep)) == expected


def steps_table(values_by_day, user="alice"):
    rows = tuple(
        (
            user,
            f"steps-{user}-{day:02d}",
            "Step Count",
            "steps",
            value,
            "55423-8",
            "Step Count",
            "",
            datetime(2024, 1, day, 12, tzinfo=UTC),
        )
        for day, value in values_by_day
    )
    return FlatTable(SchemaKind.OBSERVATION, rows)


def test_activity_index():
    with criterion("activity index"):
        constant = activity_index(steps_table([(d, 500.0) for d in range(1, 15)]))
        assert [r[4] for r in constant] == [500.0] * 14

        ramp = activity_index(steps_table([(d, 100.0 * d) for d in range(1, 8)]))
        by_id = {r[1]: r[4] for r in ramp}
        assert by_id["activity-index:alice:2024-01-07"] == 400.0

        short = activity_index(steps_table([(d, 100.0) for d in range(1, 4)]))
        partial = short.provenance["partialWindows"]
        assert sorted(partial.values()) == [1, 2, 3]
        assert set(partial) == {r[1] for r in short}


def scored(ordinals, shuffle_rng=None):
    doc = phq9_response_doc("resp", "alice", "2024-01-04T10:00:00Z", ordinals)
    if shuffle_rng is not None:
        shuffle_rng.shuffle(doc["item"])
    table = flatten_questionnaire_responses([parse(doc)], definitions=(phq9_definition(),))
    return score_phq9(table)


def test_phq9_scoring():
    with criterion("phq9 scoring"):
        for ordinals, total, band in (
            ([0] * 9, 0, "minimal"),
            ([3] * 9, 27, "severe"),
            ([2, 1, 3, 0, 2, 1, 1, 0, 2], 12, "moderate"),
        ):
            outcome = scored(ordinals)
            assert not outcome.rejected
            assert (outcome.rows[0].total_score, outcome.rows[0].severity_band) == (total, band)

        rng = random.Random(77)
        for _ in range(100):
            outcome = scored([2, 1, 3, 0, 2, 1, 1, 0, 2], shuffle_rng=rng)
            assert (outcome.rows[0].total_score, outcome.rows[0].severity_band) == (12, "moderate")

        incomplete = scored([1, 1, 1])
        assert not incomplete.rows
        assert len(incomplete.rejected) == 1


def test_ecg_decode():
    with criterion("ecg decode"):
        specials = {100: "E", 200: "L", 300: "U"}
        tokens = ecg_tokens(15360, specials)
        doc = ecg_doc("ecg-acc", "alice", "2024-01-05T08:00:00Z", tokens=tokens)
        obs = parse(doc)
        sampled = next(c.value for c in obs.components if hasattr(c.value, "data_tokens"))

        waveform = decode_sampled_data(sampled, context="ecg-acc")
        assert waveform.sampling_frequency_hz == 512.0
        assert len(waveform.samples) / waveform.sampling_frequency_hz == 30.0
        assert waveform.samples[100] is SpecialToken.ERROR
        assert waveform.samples[200] is SpecialToken.BELOW_LIMIT
        assert waveform.samples[300] is SpecialToken.ABOVE_LIMIT
        assert encode_samples(waveform.samples) == tokens


ROUND_TRIP_TABLES = (
    FlatTable(
        SchemaKind.OBSERVATION,
        (
            ("alice", "r1", "Step Count", "steps", 4200.0, "55423-8", "Steps", "", datetime(2024, 1, 1, 12, tzinfo=UTC)),
            ("bob", "r2", 'He said "hi"', "a,b", None, "", "line\nbreak", "dev 1", datetime(2024, 1, 2, tzinfo=UTC)),
        ),
    ),
    FlatTable(
        SchemaKind.ECG,
        (
            (
                "alice", "e1", "Electrocardiogram", "mV", 66.0, "11524-6", "EKG study", "",
                datetime(2024, 1, 5, 8, tzinfo=UTC), 6, 512.0, "SinusRhythm", 66.0, "beats/minute",
                (0.5, SpecialToken.ERROR, -1.25, SpecialToken.BELOW_LIMIT, SpecialToken.ABOVE_LIMIT, 2.0),
            ),
            ("bob", "e2", "Electrocardiogram", "mV", None, "11524-6", "EKG study", "", None, 0, 300.0, "", None, "", None),
        ),
    ),
    FlatTable(
        SchemaKind.QUESTIONNAIRE,
        (("alice", "q1", datetime(2024, 1, 4, 10, tzinfo=UTC), "PHQ-9", "phq9-1", "Little interest", "LA6570-1", "More than half the days"),),
    ),
    FlatTable(
        SchemaKind.SCORE,
        (("alice", "q1", datetime(2024, 1, 4, 10, tzinfo=UTC), "PHQ-9", 12, "moderate"),),
    ),
    FlatTable(
        SchemaKind.USER,
        (("alice", date(2012, 3, 5), "female", "A. Example"), ("bob", None, "", "")),
    ),
)

EXPECTED_HEADERS = {
    SchemaKind.OBSERVATION: "userId,resourceId,quantityName,unit,value,loincCode,displayName,deviceCode,effectiveDate",
    SchemaKind.ECG: (
        "userId,resourceId,quantityName,unit,value,loincCode,displayName,deviceCode,effectiveDate,"
        "numberOfMeasurements,samplingFrequencyHz,ecgClassification,heartRateBpm,heartRateUnit,ecgRecording"
    ),
    SchemaKind.QUESTIONNAIRE: "userId,resourceId,authoredDate,questionnaireTitle,questionId,questionText,answerCode,answerText",
    SchemaKind.SCORE: "userId,resourceId,authoredDate,instrument,totalScore,severityBand",
    SchemaKind.USER: "userId,birthDate,gender,name",
}


def test_csv_round_trip(tmp_path):
    with criterion("csv round trip"):
        seen = set()
        for table in ROUND_TRIP_TABLES:
            seen.add(table.schema_kind)
            text = table_to_csv_text(table)
            lines = text.split("\n")
            assert lines[0] == f"#schema={table.schema_kind.value}"
            assert lines[1] == EXPECTED_HEADERS[table.schema_kind]

            target = tmp_path / f"{table.schema_kind.value}.csv"
            target.write_text(text, encoding="utf-8")
            assert parse_csv(target) == table
        assert seen == set(SchemaKind)


def test_masking():
    with criterion("masking"):
        key_a = MaskKey(b"acceptance-mask-key-000a")
        key_b = MaskKey(b"acceptance-mask-key-000b")
        ids = [f"participant-{i:04d}" for i in range(1000)]

        first = [pseudonymize(key_a, i) for i in ids]
        assert first == [pseudonymize(key_a, i) for i in ids]
        assert all(a != b for a, b in zip(first, (pseudonymize(key_b, i) for i in ids)))
        assert len(set(first)) == 1000
        assert [pseudonymize(key_a, i) for i in ids[:10]] == first[:10]

        table = steps_table([(d, 100.0) for d in range(1, 4)])
        audit = {}
        masked = mask_identifiers(table, key_a, audit)
        assert "alice" in audit.values()
        assert "alice" not in masked.column_values("userId")


def test_service_contract(tmp_path):
    with criterion("service contract"):
        key = MaskKey(b"acceptance-service-key-1")
        store = make_store(
            tmp_path,
            [
                ecg_doc("ecg-alpha", "alice", "2024-01-05T08:00:00Z"),
                ecg_doc("ecg-beta", "bob", "2024-01-06T09:00:00Z", heart_rate=190.0, classification="SVT"),
                ecg_doc("ecg-gamma", "carol", "2024-01-07T09:30:00Z", heart_rate=72.5),
                patient_doc("alice", "2012-03-05", "female"),
                patient_doc("bob", "2016-08-01", "male"),
                patient_doc("carol", "2007-01-15"),
            ],
        )
        body = {"reviewerInitials": "AB", "diagnosis": "NormalSinusRhythm", "quality": "Good"}
        alpha = pseudonymize(key, "ecg-alpha")
        beta = pseudonymize(key, "ecg-beta")
        gamma = pseudonymize(key, "ecg-gamma")

        with TestClient(create_app(store.root, key)) as client:
            assert client.post(f"/api/recordings/{alpha}/annotations", json=body).status_code == 201

            queue = client.get("/api/recordings").json()
            assert queue["total"] == 3
            assert queue["pendingCount"] == 2

            assert client.post(f"/api/recordings/{beta}/annotations", json=body).status_code == 201
            detail = client.get(f"/api/recordings/{beta}").json()
            assert detail["summary"]["reviewStatus"] == "Reviewed"

            rejected = client.post(
                f"/api/recordings/{gamma}/annotations", json={**body, "diagnosis": "Other"}
            )
            assert rejected.status_code == 422

        with TestClient(create_app(store.root, key)) as client:
            detail = client.get(f"/api/recordings/{beta}").json()
            assert detail["summary"]["reviewStatus"] == "Reviewed"
            assert client.get("/api/recordings").json()["pendingCount"] == 1

            raw = ("ecg-alpha", "ecg-beta", "ecg-gamma", "alice", "bob", "carol")
            for path in (
                "/api/recordings",
                f"/api/recordings/{alpha}",
                "/api/stats/ecg-counts",
                "/api/stats/time-in-study",
            ):
                response = client.get(path)
                assert response.status_code == 200
                assert not any(identifier in response.text for identifier in raw), path


def test_cli_determinism(tmp_path):
    with criterion("cli determinism"):
        docs = [
            observation_doc(f"steps-{d}", "alice", f"2024-01-{d:02d}T12:00:00Z", 100.0 * d)
            for d in range(1, 8)
        ]
        docs += [
            ecg_doc("ecg-1", "alice", "2024-01-05T08:00:00Z", n=512),
            patient_doc("alice", "2012-03-05", "female"),
        ]
        batch = write_ndjson(tmp_path / "batch.ndjson", docs)
        runner = CliRunner()

        def run_pipeline(tag):
            work = tmp_path / tag
            work.mkdir()
            env = {
                "FHIRFLOW_STORE_PATH": str(work / "store"),
                "FHIRFLOW_MASK_KEY": "00112233445566778899aabbccddeeff",
            }
            obs, ecg = work / "obs.csv", work / "ecg.csv"
            daily, masked = work / "daily.csv", work / "masked.csv"
            svg, chart, trace = work / "daily.svg", work / "daily.json", work / "trace.svg"
            for args in (
                ["init"],
                ["ingest", str(batch)],
                ["flatten", "--kind", "observation", "--out", str(obs)],
                ["flatten", "--kind", "ecg", "--out", str(ecg)],
                ["process", "--op", "daily-sum", "--in", str(obs), "--out", str(daily)],
                ["process", "--op", "mask", "--in", str(daily), "--out", str(masked)],
                ["chart", "--kind", "daily", "--metric", "steps", "--in", str(obs), "--out", str(svg)],
                ["chart", "--kind", "daily", "--metric", "steps", "--in", str(obs), "--out", str(chart)],
                ["chart", "--kind", "ecg-trace", "--resource", "ecg-1", "--in", str(ecg), "--out", str(trace)],
            ):
                result = runner.invoke(main, args, env=env)
                assert result.exit_code == 0, (args, result.output)
            json.loads(chart.read_text())
            return [p.read_bytes() for p in (obs, ecg, daily, masked, svg, chart, trace)]

        assert run_pipeline("first") == run_pipeline("second")
