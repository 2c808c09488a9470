"""Clinician annotations: validation and the append-only log.

An annotation is a reviewer's verdict on one ECG recording. Records are
validated on construction, serialized as one JSON object per line, and only
ever appended; the log is fsynced before a write is acknowledged so an
acknowledged annotation survives a process restart.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path

from ..errors import IoFailure
from ..formatting import format_instant, parse_instant
from ..model import canonical_json

INITIALS_PATTERN = re.compile(r"^[A-Z]{2,4}$")


class Diagnosis(Enum):
    NORMAL_SINUS_RHYTHM = "NormalSinusRhythm"
    SINUS_TACHYCARDIA = "SinusTachycardia"
    SVT = "SVT"
    EAT = "EAT"
    AF = "AF"
    VT = "VT"
    HEART_BLOCK = "HeartBlock"
    OTHER = "Other"


class Quality(Enum):
    UNINTERPRETABLE = "Uninterpretable"
    POOR_QUALITY = "PoorQuality"
    ADEQUATE = "Adequate"
    GOOD = "Good"
    EXCELLENT = "Excellent"


@dataclass(frozen=True)
class AnnotationRecord:
    recording_resource_id: str
    reviewer_initials: str
    diagnosis: Diagnosis
    quality: Quality
    diagnosis_other_text: str | None = None
    notes: str | None = None
    annotated_at: datetime | None = None

    def __post_init__(self):
        if not INITIALS_PATTERN.match(self.reviewer_initials):
            raise ValueError("reviewerInitials must be 2-4 uppercase letters")
        has_other_text = bool(self.diagnosis_other_text)
        if (self.diagnosis is Diagnosis.OTHER) != has_other_text:
            raise ValueError(
                "diagnosisOtherText is required exactly when diagnosis is Other"
            )

    def to_json_doc(self) -> dict:
        doc = {
            "recordingResourceId": self.recording_resource_id,
            "reviewerInitials": self.reviewer_initials,
            "diagnosis": self.diagnosis.value,
            "quality": self.quality.value,
        }
        if self.diagnosis_other_text is not None:
            doc["diagnosisOtherText"] = self.diagnosis_other_text
        if self.notes is not None:
            doc["notes"] = self.notes
        if self.annotated_at is not None:
            doc["annotatedAt"] = format_instant(self.annotated_at)
        return doc

    @classmethod
    def from_json_doc(cls, doc: dict) -> "AnnotationRecord":
        annotated_at = doc.get("annotatedAt")
        return cls(
            recording_resource_id=doc["recordingResourceId"],
            reviewer_initials=doc["reviewerInitials"],
            diagnosis=Diagnosis(doc["diagnosis"]),
            quality=Quality(doc["quality"]),
            diagnosis_other_text=doc.get("diagnosisOtherText"),
            notes=doc.get("notes"),
            annotated_at=parse_instant(annotated_at) if annotated_at else None,
        )


def build_annotation(
    body: dict, recording_resource_id: str, annotated_at: datetime
) -> AnnotationRecord:
    """Validate a client payload into a record; ValueError explains rejects."""
    if not isinstance(body, dict):
        raise ValueError("annotation body must be a JSON object")
    initials = body.get("reviewerInitials")
    if not isinstance(initials, str):
        raise ValueError("reviewerInitials is required")
    try:
        diagnosis = Diagnosis(body.get("diagnosis"))
    except ValueError:
        allowed = ", ".join(d.value for d in Diagnosis)
        raise ValueError(f"diagnosis must be one of: {allowed}") from None
    try:
        quality = Quality(body.get("quality"))
    except ValueError:
        allowed = ", ".join(q.value for q in Quality)
        raise ValueError(f"quality must be one of: {allowed}") from None
    other_text = body.get("diagnosisOtherText")
    if other_text is not None and not isinstance(other_text, str):
        raise ValueError("diagnosisOtherText must be a string")
    notes = body.get("notes")
    if notes is not None and not isinstance(notes, str):
        raise ValueError("notes must be a string")
    return AnnotationRecord(
        recording_resource_id=recording_resource_id,
        reviewer_initials=initials,
        diagnosis=diagnosis,
        quality=quality,
        diagnosis_other_text=other_text or None,
        notes=notes,
        annotated_at=annotated_at,
    )


class AnnotationLog:
    """Append-only NDJSON log with a single serialized writer."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: AnnotationRecord) -> None:
        line = canonical_json(record.to_json_doc())
        with self._lock:
            try:
                with open(self.path, "a", encoding="utf-8") as handle:
                    handle.write(line)
                    handle.write("\n")
                    handle.flush()
                    os.fsync(handle.fileno())
            except OSError as exc:
                raise IoFailure(f"cannot append annotation: {exc}") from exc

    def load(self) -> list[AnnotationRecord]:
        """All records in append order (oldest first)."""
        if not self.path.exists():
            return []
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read annotation log: {exc}") from exc
        records = []
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(AnnotationRecord.from_json_doc(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise IoFailure(
                    f"corrupt annotation log at {self.path}:{number}: {exc}"
                ) from exc
        return records
