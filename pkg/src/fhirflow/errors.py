"""Exception types shared across the toolkit.

Every error raised by fhirflow derives from :class:`FhirflowError` so callers
can catch one base class at pipeline boundaries (CLI, service handlers).
"""

from __future__ import annotations


class FhirflowError(Exception):
    """Base class for all fhirflow errors."""


class MalformedJson(FhirflowError):
    """Input text is not parseable as a JSON document."""


class UnsupportedResourceType(FhirflowError):
    """Document carries a resourceType outside the supported set."""

    def __init__(self, resource_type: str):
        super().__init__(f"unsupported resourceType: {resource_type!r}")
        self.resource_type = resource_type


class SchemaViolation(FhirflowError):
    """A required field is missing or ill-typed; ``path`` names the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class BadToken(FhirflowError):
    """A sampled-data token is neither numeric nor one of E/L/U."""

    def __init__(self, index: int, token: str, context: str = ""):
        where = f"{context}: " if context else ""
        super().__init__(f"{where}bad token {token!r} at index {index}")
        self.index = index
        self.token = token


class IoFailure(FhirflowError):
    """Underlying filesystem read/write failed."""


class MixedKind(FhirflowError):
    """An ECG observation reached a scalar-only path (or vice versa)."""


class MissingValue(FhirflowError):
    """Observation lacks the value required by the target flat schema."""


class WrongSchema(FhirflowError):
    """Operation received a FlatTable of the wrong schema kind."""


class InvalidRange(FhirflowError):
    """A from/to pair is inverted."""


class IncompleteResponse(FhirflowError):
    """Questionnaire response lacks items required by the instrument."""


class UnmappableAnswer(FhirflowError):
    """Answer code has no ordinal in the instrument definition."""


class DuplicateInstrument(FhirflowError):
    """A score function is already registered for the instrument."""


class RegistryFrozen(FhirflowError):
    """Score registry no longer accepts registrations after first use."""


class WeakKey(FhirflowError):
    """Masking key secret is shorter than the 16-byte minimum."""


class EmptySelection(FhirflowError):
    """Chart builder filters matched no rows."""


class NoWaveform(FhirflowError):
    """ECG row carries no decoded waveform."""


class BadWindow(FhirflowError):
    """Trace window is inverted or outside the recording duration."""


class EmptySpec(FhirflowError):
    """Chart spec has nothing to draw."""
