"""Validated FHIR resource subset: types, parsing, waveforms, classification."""

from .parse import (
    ORDINAL_VALUE_URL,
    canonical_json,
    canonicalize_text,
    content_hash,
    parse_document,
    parse_resource,
    serialize_resource,
)
from .registry import (
    CodeRegistry,
    MetricClass,
    MetricKind,
    RegistryEntry,
    classify_observation,
    default_registry,
    parse_metric_kind,
)
from .types import (
    AnswerOption,
    Coding,
    Component,
    DefinitionItem,
    Observation,
    PatientRecord,
    Quantity,
    QuestionnaireDefinition,
    QuestionnaireResponse,
    ResourceEnvelope,
    ResourceKind,
    ResponseItem,
    SampledData,
)
from .waveform import (
    SampledWaveform,
    Sample,
    SpecialToken,
    as_optional,
    decode_sampled_data,
    encode_samples,
    is_missing,
)

__all__ = [
    "ORDINAL_VALUE_URL",
    "AnswerOption",
    "Coding",
    "CodeRegistry",
    "Component",
    "DefinitionItem",
    "MetricClass",
    "MetricKind",
    "Observation",
    "PatientRecord",
    "Quantity",
    "QuestionnaireDefinition",
    "QuestionnaireResponse",
    "RegistryEntry",
    "ResourceEnvelope",
    "ResourceKind",
    "ResponseItem",
    "Sample",
    "SampledData",
    "SampledWaveform",
    "SpecialToken",
    "as_optional",
    "canonical_json",
    "canonicalize_text",
    "classify_observation",
    "content_hash",
    "decode_sampled_data",
    "default_registry",
    "encode_samples",
    "is_missing",
    "parse_document",
    "parse_metric_kind",
    "parse_resource",
    "serialize_resource",
]
