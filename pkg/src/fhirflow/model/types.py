"""Validated in-memory forms of the supported FHIR resource subset.

These types are the data contract every downstream module consumes.  All are
immutable; constructing one with invalid content raises ``ValueError``.  The
parsing layer in :mod:`fhirflow.model.parse` performs its own checks first so
it can report precise field paths; the checks here guard direct construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from typing import Mapping, Union


@dataclass(frozen=True)
class Coding:
    """One code from a coding system (LOINC, Apple Health identifiers, ...)."""

    system: str
    code: str
    display: str | None = None

    def __post_init__(self) -> None:
        if not self.code:
            raise ValueError("Coding.code must be non-empty")
        if not self.system:
            raise ValueError("Coding.system must be non-empty when code is present")


@dataclass(frozen=True)
class Quantity:
    """A measured value with its unit label."""

    value: float
    unit: str = ""

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError("Quantity.value must be finite")


_SPECIAL_TOKENS = frozenset("ELU")


def _is_decimal_token(token: str) -> bool:
    if not token or token in _SPECIAL_TOKENS:
        return token in _SPECIAL_TOKENS
    try:
        return math.isfinite(float(token))
    except ValueError:
        return False


@dataclass(frozen=True)
class SampledData:
    """Uniformly sampled signal: origin, period, scale factor, and tokens.

    ``data_tokens`` is the raw whitespace-separated token string; tokens are
    either decimal numbers or the special markers E / L / U.
    """

    origin: Quantity
    period_ms: float
    factor: float = 1.0
    dimensions: int = 1
    data_tokens: str = ""

    def __post_init__(self) -> None:
        if not (self.period_ms > 0):
            raise ValueError("SampledData.period_ms must be > 0")
        if self.dimensions < 1:
            raise ValueError("SampledData.dimensions must be >= 1")
        for token in self.data_tokens.split():
            if not _is_decimal_token(token):
                raise ValueError(f"SampledData token {token!r} is not decimal or E/L/U")

    def tokens(self) -> list[str]:
        return self.data_tokens.split()


ComponentValue = Union[Quantity, SampledData, str]


@dataclass(frozen=True)
class Component:
    """A coded sub-value of an observation (waveform chunk, classification, ...)."""

    code: Coding
    value: ComponentValue


@dataclass(frozen=True)
class Observation:
    """A personal health sensor observation (scalar metric or ECG)."""

    resource_id: str
    subject_id: str
    code: tuple[Coding, ...]
    effective_start: datetime
    effective_end: datetime | None = None
    value_quantity: Quantity | None = None
    components: tuple[Component, ...] = ()
    device: Coding | None = None
    category: Coding | None = None

    def __post_init__(self) -> None:
        if not self.resource_id:
            raise ValueError("Observation.resource_id must be non-empty")
        if not self.subject_id:
            raise ValueError("Observation.subject_id must be non-empty")
        if not self.code:
            raise ValueError("Observation.code must have at least one coding")
        if (self.value_quantity is None) == (len(self.components) == 0):
            raise ValueError(
                "exactly one of value_quantity or components must be present"
            )
        if self.effective_end is not None and self.effective_end < self.effective_start:
            raise ValueError("effective_end must be >= effective_start")

    def sampled_components(self) -> list[Component]:
        return [c for c in self.components if isinstance(c.value, SampledData)]


@dataclass(frozen=True)
class ResponseItem:
    """One answered question inside a questionnaire response."""

    link_id: str
    answer_code: str
    question_text: str | None = None
    answer_text: str | None = None

    def __post_init__(self) -> None:
        if not self.link_id:
            raise ValueError("ResponseItem.link_id must be non-empty")
        if not self.answer_code:
            raise ValueError("ResponseItem.answer_code must be non-empty")


@dataclass(frozen=True)
class QuestionnaireResponse:
    """A subject's answers to one questionnaire instrument."""

    resource_id: str
    subject_id: str
    questionnaire_ref: str
    authored: datetime
    items: tuple[ResponseItem, ...] = ()

    def __post_init__(self) -> None:
        if not self.resource_id:
            raise ValueError("QuestionnaireResponse.resource_id must be non-empty")
        if not self.subject_id:
            raise ValueError("QuestionnaireResponse.subject_id must be non-empty")
        link_ids = [item.link_id for item in self.items]
        if len(link_ids) != len(set(link_ids)):
            raise ValueError("item linkIds must be unique within a response")


@dataclass(frozen=True)
class AnswerOption:
    code: str
    display_text: str
    ordinal_value: int | None = None


@dataclass(frozen=True)
class DefinitionItem:
    link_id: str
    question_text: str
    answer_options: tuple[AnswerOption, ...] = ()

    def __post_init__(self) -> None:
        seen: dict[str, str] = {}
        for option in self.answer_options:
            if option.code in seen:
                raise ValueError(
                    f"answer option code {option.code!r} maps to more than one display"
                )
            seen[option.code] = option.display_text


@dataclass(frozen=True)
class QuestionnaireDefinition:
    """Instrument definition used to resolve question/answer text and ordinals."""

    questionnaire_ref: str
    title: str
    items: tuple[DefinitionItem, ...] = ()

    def question_text(self, link_id: str) -> str | None:
        for item in self.items:
            if item.link_id == link_id:
                return item.question_text
        return None

    def answer_display(self, link_id: str, code: str) -> str | None:
        for item in self.items:
            if item.link_id == link_id:
                for option in item.answer_options:
                    if option.code == code:
                        return option.display_text
        return None

    def answer_ordinal(self, link_id: str, code: str) -> int | None:
        for item in self.items:
            if item.link_id == link_id:
                for option in item.answer_options:
                    if option.code == code:
                        return option.ordinal_value
        return None


@dataclass(frozen=True)
class PatientRecord:
    """Roster entry for one study subject."""

    subject_id: str
    birth_date: date | None = None
    demographics: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.subject_id:
            raise ValueError("PatientRecord.subject_id must be non-empty")


class ResourceKind(Enum):
    OBSERVATION = "Observation"
    QUESTIONNAIRE_RESPONSE = "QuestionnaireResponse"
    QUESTIONNAIRE = "Questionnaire"
    PATIENT = "Patient"


_PAYLOAD_TYPES = {
    ResourceKind.OBSERVATION: Observation,
    ResourceKind.QUESTIONNAIRE_RESPONSE: QuestionnaireResponse,
    ResourceKind.QUESTIONNAIRE: QuestionnaireDefinition,
    ResourceKind.PATIENT: PatientRecord,
}

Payload = Union[Observation, QuestionnaireResponse, QuestionnaireDefinition, PatientRecord]


@dataclass(frozen=True)
class ResourceEnvelope:
    """A validated resource plus the content hash of its source document."""

    kind: ResourceKind
    payload: Payload
    raw_source_hash: str

    def __post_init__(self) -> None:
        expected = _PAYLOAD_TYPES[self.kind]
        if not isinstance(self.payload, expected):
            raise ValueError(
                f"payload type {type(self.payload).__name__} does not match kind {self.kind.value}"
            )

    @property
    def subject_id(self) -> str:
        payload = self.payload
        if isinstance(payload, QuestionnaireDefinition):
            return ""
        return payload.subject_id

    @property
    def resource_id(self) -> str:
        payload = self.payload
        if isinstance(payload, PatientRecord):
            return payload.subject_id
        if isinstance(payload, QuestionnaireDefinition):
            return payload.questionnaire_ref
        return payload.resource_id

    @property
    def timestamp(self) -> datetime | None:
        payload = self.payload
        if isinstance(payload, Observation):
            return payload.effective_start
        if isinstance(payload, QuestionnaireResponse):
            return payload.authored
        return None
