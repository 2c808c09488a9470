"""Clinician review service: annotation records and the HTTP API."""

from .annotations import (
    INITIALS_PATTERN,
    AnnotationLog,
    AnnotationRecord,
    Diagnosis,
    Quality,
    build_annotation,
)
from .app import (
    AGE_BUCKETS,
    ANNOTATION_LOG_NAME,
    REVIEW_STATUSES,
    Recording,
    Snapshot,
    build_snapshot,
    create_app,
    run_service,
)

__all__ = [
    "AGE_BUCKETS",
    "ANNOTATION_LOG_NAME",
    "AnnotationLog",
    "AnnotationRecord",
    "Diagnosis",
    "INITIALS_PATTERN",
    "Quality",
    "REVIEW_STATUSES",
    "Recording",
    "Snapshot",
    "build_annotation",
    "build_snapshot",
    "create_app",
    "run_service",
]
