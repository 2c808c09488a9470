"""Filesystem resource store.

Layout under the store root: one append-only NDJSON file per resource kind
(each line is the canonical JSON of one FHIR document) plus an ``index.json``
sidecar holding content hashes for dedup and resource-id ownership for
conflict detection. The index is derived state: ``reindex`` rebuilds it from
the data files.

Concurrency: one writer at a time (guarded by an in-process lock); readers
parse whole files and never consult partially written state because the index
is replaced atomically after data appends are flushed.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import FhirflowError, InvalidRange, IoFailure
from .model import (
    CodeRegistry,
    MetricKind,
    PatientRecord,
    ResourceEnvelope,
    ResourceKind,
    canonical_json,
    classify_observation,
    content_hash,
    default_registry,
    parse_document,
)

_DATA_FILES: dict[ResourceKind, str] = {
    ResourceKind.OBSERVATION: "observation.ndjson",
    ResourceKind.QUESTIONNAIRE_RESPONSE: "questionnaire_response.ndjson",
    ResourceKind.QUESTIONNAIRE: "questionnaire.ndjson",
    ResourceKind.PATIENT: "patient.ndjson",
}

_INDEX_FILE = "index.json"
_INDEX_VERSION = 1


@dataclass(frozen=True)
class StoreQuery:
    """Conjunctive filter; a field left as None does not constrain results."""

    metric_kinds: frozenset[MetricKind] | None = None
    codes: frozenset[tuple[str, str]] | None = None
    subject_ids: frozenset[str] | None = None
    date_from: datetime | None = None
    date_to: datetime | None = None
    resource_kinds: frozenset[ResourceKind] | None = None

    def __post_init__(self):
        for name in ("metric_kinds", "codes", "subject_ids", "resource_kinds"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, frozenset):
                object.__setattr__(self, name, frozenset(value))
        if self.date_from is not None and self.date_to is not None:
            if self.date_from > self.date_to:
                raise InvalidRange("date_from is after date_to")


@dataclass
class IngestReport:
    accepted: int = 0
    duplicates: int = 0
    rejected: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.rejected


class _Index:
    def __init__(self, hashes: dict[str, list] | None = None):
        # hash -> [kind value, resource id]; ids -> kind value -> id -> hash
        self.hashes: dict[str, list] = hashes or {}
        self.ids: dict[str, dict[str, str]] = {}
        for digest, (kind_value, resource_id) in self.hashes.items():
            self.ids.setdefault(kind_value, {})[resource_id] = digest

    def owner(self, kind: ResourceKind, resource_id: str) -> str | None:
        return self.ids.get(kind.value, {}).get(resource_id)

    def add(self, digest: str, kind: ResourceKind, resource_id: str) -> None:
        self.hashes[digest] = [kind.value, resource_id]
        self.ids.setdefault(kind.value, {})[resource_id] = digest

    def to_json(self) -> str:
        return json.dumps(
            {"version": _INDEX_VERSION, "hashes": self.hashes},
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> "_Index":
        try:
            doc = json.loads(text)
            return cls(dict(doc["hashes"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise IoFailure(f"corrupt store index: {exc}") from exc


class FileStore:
    """Reference store implementation over a local directory."""

    def __init__(
        self,
        root: str | Path,
        *,
        create: bool = False,
        registry: CodeRegistry | None = None,
    ):
        self.root = Path(root)
        self._registry = registry or default_registry()
        self._write_lock = threading.Lock()
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
            if not self._index_path.exists():
                self._write_index(_Index())
        elif not self.root.is_dir():
            raise IoFailure(f"store directory does not exist: {self.root}")

    @property
    def _index_path(self) -> Path:
        return self.root / _INDEX_FILE

    def _load_index(self) -> _Index:
        if not self._index_path.exists():
            raise IoFailure(
                f"no index at {self._index_path}; initialize the store or run reindex"
            )
        return _Index.from_json(self._index_path.read_text(encoding="utf-8"))

    def _write_index(self, index: _Index) -> None:
        tmp = self._index_path.with_suffix(".json.tmp")
        tmp.write_text(index.to_json(), encoding="utf-8")
        os.replace(tmp, self._index_path)

    # -- ingest ---------------------------------------------------------

    def ingest(self, source_path: str | Path) -> IngestReport:
        """Load resources from a JSON/NDJSON file or a directory of them.

        Idempotent by content hash; per-document failures are reported in
        the result, never raised.
        """
        source = Path(source_path)
        if not source.exists():
            raise IoFailure(f"source path does not exist: {source}")
        if source.is_dir():
            files = sorted(
                p
                for p in source.rglob("*")
                if p.is_file() and p.suffix.lower() in {".json", ".ndjson", ".jsonl"}
            )
        else:
            files = [source]

        report = IngestReport()
        with self._write_lock:
            index = self._load_index()
            appends: dict[ResourceKind, list[str]] = {}
            for path in files:
                try:
                    text = path.read_text(encoding="utf-8")
                except OSError as exc:
                    raise IoFailure(f"cannot read {path}: {exc}") from exc
                for location, doc_text in _documents_in(path, text):
                    self._ingest_one(doc_text, location, index, appends, report)
            try:
                for kind, lines in appends.items():
                    if lines:
                        self._append_lines(kind, lines)
                self._write_index(index)
            except OSError as exc:
                raise IoFailure(f"cannot write to store: {exc}") from exc
        return report

    def _ingest_one(
        self,
        doc_text: str,
        location: str,
        index: _Index,
        appends: dict[ResourceKind, list[str]],
        report: IngestReport,
    ) -> None:
        try:
            doc = json.loads(doc_text)
        except json.JSONDecodeError as exc:
            report.rejected.append((location, f"MalformedJson: {exc}"))
            return
        try:
            envelope = parse_document(doc)
        except FhirflowError as exc:
            report.rejected.append((location, f"{type(exc).__name__}: {exc}"))
            return
        digest = envelope.raw_source_hash
        if digest in index.hashes:
            report.duplicates += 1
            return
        existing = index.owner(envelope.kind, envelope.resource_id)
        if existing is not None:
            report.rejected.append(
                (
                    location,
                    f"Conflict: {envelope.kind.value} id {envelope.resource_id!r} "
                    "already stored with different content",
                )
            )
            return
        # staged under the lock; batch-appended after the whole walk
        appends.setdefault(envelope.kind, []).append(canonical_json(doc))
        index.add(digest, envelope.kind, envelope.resource_id)
        report.accepted += 1

    def _append_lines(self, kind: ResourceKind, lines: list[str]) -> None:
        path = self.root / _DATA_FILES[kind]
        with open(path, "a", encoding="utf-8") as handle:
            for line in lines:
                handle.write(line)
                handle.write("\n")
            handle.flush()
            os.fsync(handle.fileno())

    # -- read side ------------------------------------------------------

    def _iter_envelopes(self, kinds: Iterable[ResourceKind]) -> Iterator[ResourceEnvelope]:
        for kind in kinds:
            path = self.root / _DATA_FILES[kind]
            if not path.exists():
                continue
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise IoFailure(f"cannot read {path}: {exc}") from exc
            for number, line in enumerate(text.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    yield parse_document(json.loads(line))
                except (json.JSONDecodeError, FhirflowError) as exc:
                    raise IoFailure(f"corrupt store data at {path}:{number}: {exc}") from exc

    def _matches(self, envelope: ResourceEnvelope, query: StoreQuery) -> bool:
        if query.resource_kinds is not None and envelope.kind not in query.resource_kinds:
            return False
        if query.subject_ids is not None and envelope.subject_id not in query.subject_ids:
            return False
        if query.date_from is not None or query.date_to is not None:
            timestamp = envelope.timestamp
            if timestamp is None:
                return False
            if query.date_from is not None and timestamp < query.date_from:
                return False
            if query.date_to is not None and timestamp > query.date_to:
                return False
        if query.codes is not None:
            if envelope.kind is not ResourceKind.OBSERVATION:
                return False
            pairs = {(c.system, c.code) for c in envelope.payload.code}
            if not pairs & query.codes:
                return False
        if query.metric_kinds is not None:
            if envelope.kind is not ResourceKind.OBSERVATION:
                return False
            metric = classify_observation(envelope.payload, self._registry)
            if metric.kind not in query.metric_kinds:
                return False
        return True

    def query(self, query: StoreQuery | None = None) -> list[ResourceEnvelope]:
        """All envelopes matching every present filter, deterministically
        ordered by (subjectId, timestamp, resourceId)."""
        self._load_index()  # fail fast on uninitialized stores
        query = query or StoreQuery()
        kinds = list(_DATA_FILES)
        results = [e for e in self._iter_envelopes(kinds) if self._matches(e, query)]
        results.sort(key=_order_key)
        return results

    def list_users(self) -> list[PatientRecord]:
        """One record per distinct subject, enriched from Patient resources."""
        self._load_index()
        patients: dict[str, PatientRecord] = {}
        seen: set[str] = set()
        for envelope in self._iter_envelopes(list(_DATA_FILES)):
            if envelope.kind is ResourceKind.PATIENT:
                patients[envelope.payload.subject_id] = envelope.payload
            subject_id = envelope.subject_id
            if subject_id:
                seen.add(subject_id)
        return [
            patients.get(subject_id, PatientRecord(subject_id=subject_id, birth_date=None))
            for subject_id in sorted(seen)
        ]

    def reindex(self) -> int:
        """Rebuild index.json from the data files; returns resource count."""
        with self._write_lock:
            index = _Index()
            count = 0
            for envelope in self._iter_envelopes(list(_DATA_FILES)):
                index.add(envelope.raw_source_hash, envelope.kind, envelope.resource_id)
                count += 1
            try:
                self._write_index(index)
            except OSError as exc:
                raise IoFailure(f"cannot write index: {exc}") from exc
            return count


def _order_key(envelope: ResourceEnvelope) -> tuple:
    timestamp = envelope.timestamp
    return (
        envelope.subject_id,
        0 if timestamp is None else 1,
        timestamp.timestamp() if timestamp is not None else 0.0,
        envelope.resource_id,
    )


def _documents_in(path: Path, text: str) -> Iterator[tuple[str, str]]:
    """Split file contents into (location, document text) pairs.

    A file that parses as one JSON object is a single document; anything
    else is treated as line-delimited JSON.
    """
    stripped = text.strip()
    if stripped:
        try:
            whole: Any = json.loads(stripped)
        except json.JSONDecodeError:
            whole = None
        if isinstance(whole, dict):
            yield str(path), stripped
            return
    for number, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield f"{path}:{number}", line
