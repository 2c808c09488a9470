"""Flattening: hierarchical resources to schema-tagged tables.

Each operation takes validated model values (or envelopes) and produces a
FlatTable whose columns retain the resource metadata downstream consumers
need. Cell-level rules live here and nowhere else, so tables built by any
caller are identical for identical inputs.
"""

from __future__ import annotations

from typing import Iterable

from .errors import MissingValue, MixedKind, SchemaViolation
from .formatting import format_instant
from .model import (
    CodeRegistry,
    MetricKind,
    Observation,
    Quantity,
    QuestionnaireDefinition,
    QuestionnaireResponse,
    ResourceEnvelope,
    SampledData,
    classify_observation,
    decode_sampled_data,
    default_registry,
)
from .table import FlatTable, SchemaKind

_LOINC_SYSTEM = "http://loinc.org"


def _unwrap(items: Iterable, expected_type) -> list:
    result = []
    for item in items:
        payload = item.payload if isinstance(item, ResourceEnvelope) else item
        if not isinstance(payload, expected_type):
            raise MixedKind(
                f"expected {expected_type.__name__}, got {type(payload).__name__}"
            )
        result.append(payload)
    return result


def _quantity_name(obs: Observation, registry: CodeRegistry) -> str:
    first = obs.code[0]
    if first.display:
        return first.display
    return registry.display_name_for(obs.code) or ""


def _loinc_coding(obs: Observation) -> tuple[str, str]:
    """(loincCode, displayName) from the first LOINC coding, empty if none."""
    for coding in obs.code:
        if coding.system == _LOINC_SYSTEM:
            return coding.code, coding.display or ""
    return "", ""


def _device_code(obs: Observation) -> str:
    return obs.device.code if obs.device is not None else ""


def flatten_observations(
    observations: Iterable[Observation | ResourceEnvelope],
    registry: CodeRegistry | None = None,
) -> FlatTable:
    """One ObservationFlat row per scalar observation.

    ECG observations must be routed to flatten_ecg instead (MixedKind);
    observations without a valueQuantity raise MissingValue.
    """
    registry = registry or default_registry()
    interval_ends: dict[str, str] = {}
    rows = []
    for obs in _unwrap(observations, Observation):
        metric = classify_observation(obs, registry)
        if metric.kind is MetricKind.ECG:
            raise MixedKind(f"observation {obs.resource_id!r} is an ECG; route separately")
        if obs.value_quantity is None:
            raise MissingValue(f"observation {obs.resource_id!r} has no valueQuantity")
        loinc_code, display_name = _loinc_coding(obs)
        if obs.effective_end is not None:
            interval_ends[obs.resource_id] = format_instant(obs.effective_end)
        rows.append(
            (
                obs.subject_id,
                obs.resource_id,
                _quantity_name(obs, registry),
                obs.value_quantity.unit,
                obs.value_quantity.value,
                loinc_code,
                display_name,
                _device_code(obs),
                obs.effective_start,
            )
        )
    rows.sort(key=lambda row: (row[0], row[8], row[1]))
    provenance: dict = {"operation": "flatten_observations"}
    if interval_ends:
        provenance["intervalEnds"] = interval_ends
    return FlatTable(SchemaKind.OBSERVATION, tuple(rows), provenance)


def flatten_ecg(
    observations: Iterable[Observation | ResourceEnvelope],
    registry: CodeRegistry | None = None,
) -> FlatTable:
    """One EcgFlat row per ECG recording, waveform inlined.

    Multi-chunk recordings (several SampledData components) are concatenated
    in component order; all chunks must share the sampling period.
    """
    registry = registry or default_registry()
    interval_ends: dict[str, str] = {}
    rows = []
    for obs in _unwrap(observations, Observation):
        metric = classify_observation(obs, registry)
        if metric.kind is not MetricKind.ECG:
            raise MixedKind(f"observation {obs.resource_id!r} is not an ECG recording")

        chunks = [c.value for c in obs.components if isinstance(c.value, SampledData)]
        if not chunks:
            raise MissingValue(
                f"ECG observation {obs.resource_id!r} has no SampledData component"
            )
        if len({chunk.period_ms for chunk in chunks}) > 1:
            raise SchemaViolation(
                "component.valueSampledData.period",
                f"ECG observation {obs.resource_id!r} mixes sampling periods",
            )
        samples: list = []
        for chunk in chunks:
            samples.extend(decode_sampled_data(chunk, context=obs.resource_id).samples)
        waveform_unit = chunks[0].origin.unit
        frequency = decode_sampled_data(chunks[0], context=obs.resource_id).sampling_frequency_hz

        classification = ""
        heart_rate: Quantity | None = None
        for component in obs.components:
            if isinstance(component.value, str) and not classification:
                classification = component.value
            elif isinstance(component.value, Quantity) and heart_rate is None:
                kind = registry.classify_codes([component.code]).kind
                if kind is MetricKind.HEART_RATE:
                    heart_rate = component.value

        loinc_code, display_name = _loinc_coding(obs)
        if obs.effective_end is not None:
            interval_ends[obs.resource_id] = format_instant(obs.effective_end)
        rows.append(
            (
                obs.subject_id,
                obs.resource_id,
                _quantity_name(obs, registry),
                waveform_unit,
                heart_rate.value if heart_rate is not None else None,
                loinc_code,
                display_name,
                _device_code(obs),
                obs.effective_start,
                len(samples),
                frequency,
                classification,
                heart_rate.value if heart_rate is not None else None,
                heart_rate.unit if heart_rate is not None else "",
                tuple(samples),
            )
        )
    rows.sort(key=lambda row: (row[0], row[8], row[1]))
    provenance: dict = {"operation": "flatten_ecg"}
    if interval_ends:
        provenance["intervalEnds"] = interval_ends
    return FlatTable(SchemaKind.ECG, tuple(rows), provenance)


def flatten_questionnaire_responses(
    responses: Iterable[QuestionnaireResponse | ResourceEnvelope],
    definitions: Iterable[QuestionnaireDefinition] = (),
) -> FlatTable:
    """One QuestionnaireFlat row per response item.

    Question and answer text come from the response when present, otherwise
    from the matching definition; cells that stay empty are counted in
    provenance["unresolvedText"]. Never fatal.
    """
    defs_by_ref = {d.questionnaire_ref: d for d in definitions}
    unresolved = 0
    rows = []
    ordered = sorted(
        _unwrap(responses, QuestionnaireResponse),
        key=lambda qr: (qr.subject_id, qr.authored, qr.resource_id),
    )
    for response in ordered:
        definition = defs_by_ref.get(response.questionnaire_ref)
        title = definition.title if definition else response.questionnaire_ref
        for item in response.items:
            question_text = item.question_text or ""
            if not question_text and definition:
                question_text = definition.question_text(item.link_id) or ""
            if not question_text:
                unresolved += 1
            answer_text = item.answer_text or ""
            if not answer_text and definition:
                answer_text = definition.answer_display(item.link_id, item.answer_code) or ""
            if not answer_text:
                unresolved += 1
            rows.append(
                (
                    response.subject_id,
                    response.resource_id,
                    response.authored,
                    title,
                    item.link_id,
                    question_text,
                    item.answer_code,
                    answer_text,
                )
            )
    return FlatTable(
        SchemaKind.QUESTIONNAIRE,
        tuple(rows),
        {"operation": "flatten_questionnaire_responses", "unresolvedText": unresolved},
    )


def extract_user_roster(store) -> FlatTable:
    """UserFlat roster from the store's distinct subjects."""
    rows = []
    for record in store.list_users():
        rows.append(
            (
                record.subject_id,
                record.birth_date,
                record.demographics.get("gender", ""),
                record.demographics.get("name", ""),
            )
        )
    return FlatTable(SchemaKind.USER, tuple(rows), {"operation": "extract_user_roster"})
