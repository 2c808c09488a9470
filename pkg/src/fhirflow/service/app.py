"""Review service: HTTP API over a store snapshot.

The store is flattened and masked once at startup into an immutable snapshot;
reads never lock. Annotations go through the append-only log and an
in-memory index guarded by one writer lock. POST /api/admin/reload rebuilds
the snapshot from the store directory.

Every identifier that crosses this API is a pseudonym: tables are masked
before anything is derived from them, and annotation records are keyed by
masked recording ids, so the log itself stays free of raw identifiers.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from ..errors import EmptySelection, WrongSchema
from ..explore import (
    build_daily_series,
    chart_json_bytes,
    ecg_counts_per_subject,
    parse_agg,
    time_in_study_weeks,
)
from ..flatten import flatten_ecg, flatten_observations
from ..formatting import format_instant, parse_day, parse_instant, utc_day
from ..model import CodeRegistry, MetricKind, ResourceKind, default_registry
from ..model import classify_observation, parse_metric_kind
from ..model.waveform import SpecialToken
from ..process import MaskKey, mask_identifiers, pseudonymize
from ..store import FileStore, StoreQuery
from ..table import FlatTable, SchemaKind
from .annotations import AnnotationLog, AnnotationRecord, build_annotation

ANNOTATION_LOG_NAME = "annotations.ndjson"

AGE_BUCKETS = ("6-9", "10-13", "14-18", "Unknown")
REVIEW_STATUSES = ("Pending", "Reviewed")


@dataclass(frozen=True)
class Recording:
    resource_id: str
    masked_user_id: str
    timestamp: datetime
    classification: str
    heart_rate_bpm: float | None
    age_group: str
    sampling_frequency_hz: float
    samples: tuple


@dataclass
class Snapshot:
    recordings: list[Recording] = field(default_factory=list)
    by_id: dict[str, Recording] = field(default_factory=dict)
    obs_table: FlatTable = field(default_factory=lambda: FlatTable(SchemaKind.OBSERVATION))
    combined_table: FlatTable = field(
        default_factory=lambda: FlatTable(SchemaKind.OBSERVATION)
    )
    ecg_table: FlatTable = field(default_factory=lambda: FlatTable(SchemaKind.ECG))


def _age_group(birth: date | None, on_day: date) -> str:
    if birth is None:
        return "Unknown"
    age = on_day.year - birth.year - ((on_day.month, on_day.day) < (birth.month, birth.day))
    if 6 <= age <= 9:
        return "6-9"
    if 10 <= age <= 13:
        return "10-13"
    if 14 <= age <= 18:
        return "14-18"
    return "Unknown"


def build_snapshot(store: FileStore, key: MaskKey, registry: CodeRegistry) -> Snapshot:
    envelopes = store.query(StoreQuery(resource_kinds=frozenset({ResourceKind.OBSERVATION})))
    scalar, ecg = [], []
    for envelope in envelopes:
        metric = classify_observation(envelope.payload, registry)
        (ecg if metric.kind is MetricKind.ECG else scalar).append(envelope.payload)

    obs_table = mask_identifiers(flatten_observations(scalar, registry), key)
    ecg_table = mask_identifiers(flatten_ecg(ecg, registry), key)
    # EcgFlat extends ObservationFlat, so its first cells project onto it;
    # the union drives the time-in-study stat.
    obs_width = len(FlatTable(SchemaKind.OBSERVATION).columns)
    combined = FlatTable(
        SchemaKind.OBSERVATION,
        obs_table.rows + tuple(row[:obs_width] for row in ecg_table.rows),
    )

    birth_dates = {
        pseudonymize(key, record.subject_id): record.birth_date
        for record in store.list_users()
    }

    recordings = []
    for row in ecg_table:
        record = ecg_table.row_dict(row)
        recordings.append(
            Recording(
                resource_id=record["resourceId"],
                masked_user_id=record["userId"],
                timestamp=record["effectiveDate"],
                classification=record["ecgClassification"],
                heart_rate_bpm=record["heartRateBpm"],
                age_group=_age_group(
                    birth_dates.get(record["userId"]), utc_day(record["effectiveDate"])
                ),
                sampling_frequency_hz=record["samplingFrequencyHz"],
                samples=record["ecgRecording"] or (),
            )
        )
    recordings.sort(key=lambda r: (-r.timestamp.timestamp(), r.resource_id))
    return Snapshot(
        recordings=recordings,
        by_id={r.resource_id: r for r in recordings},
        obs_table=obs_table,
        combined_table=combined,
        ecg_table=ecg_table,
    )


def _summary_doc(recording: Recording, annotations: list[AnnotationRecord]) -> dict:
    return {
        "resourceId": recording.resource_id,
        "maskedUserId": recording.masked_user_id,
        "date": format_instant(recording.timestamp),
        "ecgClassification": recording.classification,
        "heartRateBpm": recording.heart_rate_bpm,
        "ageGroup": recording.age_group,
        "reviewStatus": "Reviewed" if annotations else "Pending",
        "latestAnnotation": annotations[-1].to_json_doc() if annotations else None,
    }


def _parse_day_or_instant(text: str, name: str) -> date:
    try:
        return parse_day(text)
    except ValueError:
        pass
    try:
        return utc_day(parse_instant(text))
    except ValueError:
        raise HTTPException(400, f"malformed {name} date: {text!r}") from None


def create_app(
    store_path: str | Path,
    mask_key: MaskKey,
    cors_origins: list[str] | None = None,
    registry: CodeRegistry | None = None,
) -> FastAPI:
    registry = registry or default_registry()
    store = FileStore(store_path)
    log = AnnotationLog(Path(store_path) / ANNOTATION_LOG_NAME)

    state_lock = threading.Lock()
    snapshot = build_snapshot(store, mask_key, registry)
    annotations: dict[str, list[AnnotationRecord]] = {}
    for record in log.load():
        annotations.setdefault(record.recording_resource_id, []).append(record)

    app = FastAPI(title="fhirflow review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins if cors_origins is not None else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def current() -> tuple[Snapshot, dict[str, list[AnnotationRecord]]]:
        with state_lock:
            return snapshot, {k: list(v) for k, v in annotations.items()}

    @app.get("/api/recordings")
    def list_recordings(
        request: Request,
        status: str | None = None,
        classification: str | None = None,
        user: str | None = None,
        ageGroup: str | None = None,
        page: str | None = None,
        pageSize: str | None = None,
    ) -> dict:
        snap, notes = current()
        # "from" and "to" are Python keywords; read them off the raw query
        date_from = request.query_params.get("from")
        date_to = request.query_params.get("to")
        if status is not None and status not in REVIEW_STATUSES:
            raise HTTPException(400, f"status must be one of {REVIEW_STATUSES}")
        if ageGroup is not None and ageGroup not in AGE_BUCKETS:
            raise HTTPException(400, f"ageGroup must be one of {AGE_BUCKETS}")
        low = _parse_day_or_instant(date_from, "from") if date_from else None
        high = _parse_day_or_instant(date_to, "to") if date_to else None
        try:
            page_number = int(page) if page is not None else 1
            page_size = int(pageSize) if pageSize is not None else 50
        except ValueError:
            raise HTTPException(400, "page and pageSize must be integers") from None
        if page_number < 1 or page_size < 1:
            raise HTTPException(400, "page and pageSize must be >= 1")

        def keep(recording: Recording) -> bool:
            reviewed = bool(notes.get(recording.resource_id))
            if status == "Pending" and reviewed:
                return False
            if status == "Reviewed" and not reviewed:
                return False
            if classification is not None and recording.classification != classification:
                return False
            if user is not None and recording.masked_user_id != user:
                return False
            if ageGroup is not None and recording.age_group != ageGroup:
                return False
            day = utc_day(recording.timestamp)
            if low is not None and day < low:
                return False
            if high is not None and day > high:
                return False
            return True

        matched = [r for r in snap.recordings if keep(r)]
        pending = sum(1 for r in snap.recordings if not notes.get(r.resource_id))
        start = (page_number - 1) * page_size
        return {
            "total": len(matched),
            "pendingCount": pending,
            "items": [
                _summary_doc(r, notes.get(r.resource_id, []))
                for r in matched[start : start + page_size]
            ],
        }

    @app.get("/api/recordings/{resource_id}")
    def get_recording(resource_id: str) -> dict:
        snap, notes = current()
        recording = snap.by_id.get(resource_id)
        if recording is None:
            raise HTTPException(404, f"no recording {resource_id!r}")
        own = notes.get(resource_id, [])
        return {
            "summary": _summary_doc(recording, own),
            "waveform": {
                "samplingFrequencyHz": recording.sampling_frequency_hz,
                "samples": [
                    None if isinstance(s, SpecialToken) else s for s in recording.samples
                ],
            },
            "annotations": [record.to_json_doc() for record in reversed(own)],
        }

    @app.post("/api/recordings/{resource_id}/annotations", status_code=201)
    async def post_annotation(resource_id: str, request: Request) -> dict:
        snap, _ = current()
        if resource_id not in snap.by_id:
            raise HTTPException(404, f"no recording {resource_id!r}")
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(422, "body must be valid JSON") from None
        try:
            record = build_annotation(body, resource_id, datetime.now(timezone.utc))
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        log.append(record)  # durable before the 201 below
        with state_lock:
            annotations.setdefault(resource_id, []).append(record)
        return record.to_json_doc()

    @app.get("/api/stats/ecg-counts")
    def stats_ecg_counts() -> Response:
        snap, _ = current()
        _, chart = ecg_counts_per_subject(snap.ecg_table)
        return Response(content=chart_json_bytes(chart), media_type="application/json")

    @app.get("/api/stats/time-in-study")
    def stats_time_in_study() -> Response:
        snap, _ = current()
        _, chart = time_in_study_weeks(snap.combined_table)
        return Response(content=chart_json_bytes(chart), media_type="application/json")

    @app.get("/api/series/{metric}")
    def series(metric: str, agg: str = "sum", user: str | None = None) -> Response:
        snap, _ = current()
        try:
            kind = parse_metric_kind(metric)
            aggregation = parse_agg(agg)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None
        try:
            chart = build_daily_series(
                snap.obs_table,
                kind,
                aggregation,
                users={user} if user is not None else None,
                registry=registry,
            )
        except EmptySelection as exc:
            raise HTTPException(404, str(exc)) from None
        except WrongSchema as exc:
            raise HTTPException(400, str(exc)) from None
        return Response(content=chart_json_bytes(chart), media_type="application/json")

    @app.post("/api/admin/reload")
    def reload() -> dict:
        nonlocal snapshot, annotations
        rebuilt = build_snapshot(store, mask_key, registry)
        reloaded: dict[str, list[AnnotationRecord]] = {}
        for record in log.load():
            reloaded.setdefault(record.recording_resource_id, []).append(record)
        with state_lock:
            snapshot = rebuilt
            annotations = reloaded
        return {"recordings": len(rebuilt.recordings)}

    return app


def run_service(
    store_path: str | Path,
    mask_key: MaskKey,
    bind_addr: str = "127.0.0.1:8000",
    cors_origins: list[str] | None = None,
) -> None:
    """Blocking uvicorn runner used by the CLI serve command."""
    import uvicorn

    host, _, port = bind_addr.rpartition(":")
    app = create_app(store_path, mask_key, cors_origins=cors_origins)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")


__all__: list[str] = [
    "AGE_BUCKETS",
    "ANNOTATION_LOG_NAME",
    "REVIEW_STATUSES",
    "Recording",
    "Snapshot",
    "build_snapshot",
    "create_app",
    "run_service",
]
