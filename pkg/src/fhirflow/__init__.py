"""fhirflow: FHIR digital-health data toolkit.

Parses FHIR resources (observations, ECG recordings, questionnaire
responses), flattens them into typed tables, processes and scores them,
renders charts, and serves a clinician review API.
"""

__version__ = "0.1.0"
