#!/usr/bin/env python3
"""Run the review service over a throwaway fixture store.

Used by the UI contract tests: three ECG recordings (one full 512 Hz / 30 s
waveform) by three subjects, all pending. Prints READY once listening.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

import uvicorn

from fhirflow.process import MaskKey
from fhirflow.service import create_app
from fhirflow.store import FileStore

APPLE_SYSTEM = "http://developer.apple.com/documentation/healthkit"
LOINC_SYSTEM = "http://loinc.org"

FIXTURE_KEY_HEX = "55504955504955504955504955504949"


def ecg_doc(rid, user, when, n, heart_rate, classification):
    tokens = " ".join(str((i % 8) - 4) for i in range(n))
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
        "component": [
            {
                "code": {"coding": [{"system": LOINC_SYSTEM, "code": "8867-4", "display": "Heart rate"}]},
                "valueQuantity": {"value": heart_rate, "unit": "beats/minute"},
            },
            {
                "code": {"coding": [{"system": "urn:fhirflow:ecg", "code": "classification"}]},
                "valueString": classification,
            },
            {
                "code": {"coding": [{"system": LOINC_SYSTEM, "code": "11524-6", "display": "EKG study"}]},
                "valueSampledData": {
                    "origin": {"value": 0.0, "unit": "mV"},
                    "period": 1.953125,
                    "factor": 1.0,
                    "dimensions": 1,
                    "data": tokens,
                },
            },
        ],
    }


def fixture_docs():
    return [
        ecg_doc("ecg-alpha", "alice", "2024-01-05T08:00:00Z", 15360, 66.0, "SinusRhythm"),
        ecg_doc("ecg-beta", "bob", "2024-01-06T09:00:00Z", 1024, 190.0, "SVT"),
        ecg_doc("ecg-gamma", "carol", "2024-01-07T09:30:00Z", 1024, 72.5, "SinusRhythm"),
        {"resourceType": "Patient", "id": "alice", "birthDate": "2012-03-05", "gender": "female"},
        {"resourceType": "Patient", "id": "bob", "birthDate": "2016-08-01", "gender": "male"},
        {"resourceType": "Patient", "id": "carol", "birthDate": "2007-01-15"},
    ]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--root", type=Path, default=None, help="store parent dir (default: temp)")
    args = parser.parse_args()

    root = args.root or Path(tempfile.mkdtemp(prefix="fhirflow-ui-fixture-"))
    root.mkdir(parents=True, exist_ok=True)
    batch = root / "fixture.ndjson"
    batch.write_text("\n".join(json.dumps(d) for d in fixture_docs()) + "\n", encoding="utf-8")

    store = FileStore(root / "store", create=True)
    report = store.ingest(batch)
    if report.rejected:
        raise SystemExit(f"fixture rejected: {report.rejected}")

    app = create_app(root / "store", MaskKey.from_hex(FIXTURE_KEY_HEX))
    print("READY", flush=True)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
