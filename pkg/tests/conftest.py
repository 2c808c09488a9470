"""Shared fixture builders: FHIR documents and populated stores.

All builders are deterministic so byte-identity assertions hold across runs.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from fhirflow.model import parse_document
from fhirflow.process import MaskKey
from fhirflow.store import FileStore

APPLE_SYSTEM = "http://developer.apple.com/documentation/healthkit"
LOINC_SYSTEM = "http://loinc.org"
PHQ9_REF = "urn:fhirflow:questionnaire:phq9"

# LOINC answer codes for PHQ-9 ordinals 0..3
PHQ9_ANSWER_CODES = ("LA6568-5", "LA6569-3", "LA6570-1", "LA6571-9")

METRIC_CODINGS = {
    "steps": (
        {"system": APPLE_SYSTEM, "code": "HKQuantityTypeIdentifierStepCount", "display": "Step Count"},
        {"system": LOINC_SYSTEM, "code": "55423-8", "display": "Number of steps in unspecified time Pedometer"},
    ),
    "heart_rate": (
        {"system": APPLE_SYSTEM, "code": "HKQuantityTypeIdentifierHeartRate", "display": "Heart Rate"},
        {"system": LOINC_SYSTEM, "code": "8867-4", "display": "Heart rate"},
    ),
    "hrv": (
        {"system": APPLE_SYSTEM, "code": "HKQuantityTypeIdentifierHeartRateVariabilitySDNN", "display": "Heart Rate Variability SDNN"},
        {"system": LOINC_SYSTEM, "code": "80404-7", "display": "R-R interval.standard deviation (Heart rate variability)"},
    ),
    "active_energy": (
        {"system": APPLE_SYSTEM, "code": "HKQuantityTypeIdentifierActiveEnergyBurned", "display": "Active Energy Burned"},
        {"system": LOINC_SYSTEM, "code": "41981-2", "display": "Calories burned"},
    ),
    "vo2max": (
        {"system": APPLE_SYSTEM, "code": "HKQuantityTypeIdentifierVO2Max", "display": "VO2 Max"},
    ),
}

METRIC_UNITS = {
    "steps": "steps",
    "heart_rate": "beats/minute",
    "hrv": "ms",
    "active_energy": "kcal",
    "vo2max": "mL/kg/min",
}


def observation_doc(
    rid: str,
    user: str,
    when: str,
    value: float,
    metric: str = "steps",
    *,
    effective_end: str | None = None,
    device: str | None = None,
) -> dict:
    """A scalar Observation document for one of the known metrics."""
    doc = {
        "resourceType": "Observation",
        "id": rid,
        "status": "final",
        "code": {"coding": list(METRIC_CODINGS[metric])},
        "subject": {"reference": f"Patient/{user}"},
        "valueQuantity": {"value": value, "unit": METRIC_UNITS[metric]},
    }
    if effective_end is None:
        doc["effectiveDateTime"] = when
    else:
        doc["effectivePeriod"] = {"start": when, "end": effective_end}
    if device is not None:
        doc["device"] = {"display": device}
    return doc


def ecg_tokens(n: int, specials: dict[int, str] | None = None) -> str:
    """Deterministic sawtooth token string with optional E/L/U markers."""
    specials = specials or {}
    parts = []
    for i in range(n):
        parts.append(specials.get(i, str((i % 8) - 4)))
    return " ".join(parts)


def ecg_doc(
    rid: str,
    user: str,
    when: str,
    *,
    tokens: str | None = None,
    n: int = 1024,
    period_ms: float = 1.953125,
    heart_rate: float | None = 66.0,
    classification: str | None = "SinusRhythm",
    origin: float = 0.0,
    factor: float = 1.0,
    chunks: int = 1,
) -> dict:
    """An ECG Observation with waveform components.

    ``chunks`` > 1 splits the token string into that many SampledData
    components, mimicking devices that ship the recording in segments.
    """
    token_text = tokens if tokens is not None else ecg_tokens(n)
    all_tokens = token_text.split()
    components = []
    if heart_rate is not None:
        components.append(
            {
                "code": {"coding": [{"system": LOINC_SYSTEM, "code": "8867-4", "display": "Heart rate"}]},
                "valueQuantity": {"value": heart_rate, "unit": "beats/minute"},
            }
        )
    if classification is not None:
        components.append(
            {
                "code": {"coding": [{"system": "urn:fhirflow:ecg", "code": "classification"}]},
                "valueString": classification,
            }
        )
    per_chunk = max(1, len(all_tokens) // chunks)
    for start in range(0, len(all_tokens), per_chunk):
        chunk = all_tokens[start : start + per_chunk]
        components.append(
            {
                "code": {"coding": [{"system": LOINC_SYSTEM, "code": "11524-6", "display": "EKG study"}]},
                "valueSampledData": {
                    "origin": {"value": origin, "unit": "mV"},
                    "period": period_ms,
                    "factor": factor,
                    "dimensions": 1,
                    "data": " ".join(chunk),
                },
            }
        )
    return {
        "resourceType": "Observation",
        "id": rid,
        "status": "final",
        "code": {
            "coding": [
                {"system": APPLE_SYSTEM, "code": "HKElectrocardiogram", "display": "Electrocardiogram"},
                {"system": LOINC_SYSTEM, "code": "11524-6", "display": "EKG study"},
            ]
        },
        "subject": {"reference": f"Patient/{user}"},
        "effectiveDateTime": when,
        "component": components,
    }


def phq9_response_doc(rid: str, user: str, when: str, ordinals: list[int]) -> dict:
    """A completed PHQ-9 response answering items 1..len(ordinals)."""
    return {
        "resourceType": "QuestionnaireResponse",
        "id": rid,
        "status": "completed",
        "questionnaire": PHQ9_REF,
        "subject": {"reference": f"Patient/{user}"},
        "authored": when,
        "item": [
            {"linkId": f"phq9-{i + 1}", "answer": [{"valueCoding": {"code": PHQ9_ANSWER_CODES[o]}}]}
            for i, o in enumerate(ordinals)
        ],
    }


def patient_doc(pid: str, birth_date: str | None = None, gender: str | None = None) -> dict:
    doc: dict = {"resourceType": "Patient", "id": pid}
    if birth_date is not None:
        doc["birthDate"] = birth_date
    if gender is not None:
        doc["gender"] = gender
    return doc


def phq9_questionnaire_doc() -> dict:
    packaged = Path(__file__).resolve().parents[1] / "src" / "fhirflow" / "data" / "phq9.json"
    return json.loads(packaged.read_text())


def parse(doc: dict):
    """Parse a document dict and return the payload."""
    return parse_document(doc).payload


def write_ndjson(path: Path, docs: list[dict]) -> Path:
    path.write_text("\n".join(json.dumps(d) for d in docs) + "\n", encoding="utf-8")
    return path


def make_store(root: Path, docs: list[dict]) -> FileStore:
    """Create a store at root/store and ingest docs from one NDJSON batch."""
    source = root / "ingest-batch.ndjson"
    write_ndjson(source, docs)
    store = FileStore(root / "store", create=True)
    report = store.ingest(source)
    assert not report.rejected, report.rejected
    return store


REVIEW_FIXTURE_DOCS = [
    ecg_doc("ecg-alpha", "alice", "2024-01-05T08:00:00Z"),
    ecg_doc("ecg-beta", "bob", "2024-01-06T09:00:00Z", heart_rate=190.0, classification="SVT"),
    ecg_doc("ecg-gamma", "carol", "2024-01-07T09:30:00Z", heart_rate=72.5),
    observation_doc("steps-1", "alice", "2024-01-05T12:00:00Z", 4200.0),
    observation_doc("steps-2", "alice", "2024-01-06T12:00:00Z", 5100.0),
    observation_doc("steps-3", "bob", "2024-01-06T13:00:00Z", 3300.0),
    patient_doc("alice", "2012-03-05", "female"),
    patient_doc("bob", "2016-08-01", "male"),
    patient_doc("carol", "2007-01-15"),
]


@pytest.fixture
def mask_key() -> MaskKey:
    return MaskKey(b"unit-test-mask-key-0001")


@pytest.fixture
def review_store(tmp_path) -> FileStore:
    """Three ECG recordings by three users plus scalar steps and patients."""
    return make_store(tmp_path, list(REVIEW_FIXTURE_DOCS))
