"""Parsing and validation of FHIR resource documents.

``parse_resource`` is the single entry point through which raw JSON becomes a
typed, validated :class:`ResourceEnvelope`. Everything downstream (store,
flattening, processing) trusts the invariants established here and never
touches raw JSON again.

Field names follow FHIR R4B. Unknown fields are tolerated and contribute only
to the content hash; they are not preserved through ``serialize_resource``.
"""

from __future__ import annotations

import hashlib
import json
import math
from datetime import date
from typing import Any

from ..errors import MalformedJson, SchemaViolation, UnsupportedResourceType
from ..formatting import format_decimal, format_instant, parse_day, parse_instant
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

ORDINAL_VALUE_URL = "http://hl7.org/fhir/StructureDefinition/ordinalValue"


def canonical_json(value: Any) -> str:
    """Deterministic JSON text: sorted keys, no insignificant whitespace."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_hash(document: Any) -> str:
    """sha256 over the canonical JSON form of an already-parsed document."""
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


def canonicalize_text(json_text: str) -> str:
    """Canonical JSON for raw text; raises MalformedJson on bad input."""
    return canonical_json(_load_json(json_text))


def _load_json(json_text: str) -> Any:
    try:
        return json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"not valid JSON: {exc}") from exc


def _require_object(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaViolation(path, "expected a JSON object")
    return value


def _require_string(doc: dict, key: str, path: str) -> str:
    value = doc.get(key)
    if not isinstance(value, str) or not value:
        raise SchemaViolation(path, "required non-empty string")
    return value


def _optional_string(doc: dict, key: str, path: str) -> str | None:
    value = doc.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaViolation(path, "expected a string")
    return value


def _require_number(value: Any, path: str) -> float:
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(path, "expected a number")
    result = float(value)
    if not math.isfinite(result):
        raise SchemaViolation(path, "number must be finite")
    return result


def _parse_timestamp(text: Any, path: str):
    if not isinstance(text, str) or not text:
        raise SchemaViolation(path, "required ISO-8601 timestamp")
    try:
        return parse_instant(text)
    except ValueError as exc:
        raise SchemaViolation(path, f"bad timestamp: {exc}") from exc


def _subject_id(doc: dict, path_prefix: str = "subject") -> str:
    subject = _require_object(doc.get("subject") or {}, path_prefix)
    reference = _require_string(subject, "reference", f"{path_prefix}.reference")
    return reference.split("/")[-1]


def _parse_coding(doc: Any, path: str) -> Coding:
    obj = _require_object(doc, path)
    code = _require_string(obj, "code", f"{path}.code")
    system = _require_string(obj, "system", f"{path}.system")
    display = _optional_string(obj, "display", f"{path}.display")
    return Coding(system=system, code=code, display=display)


def _parse_codeable_concept(doc: Any, path: str) -> list[Coding]:
    obj = _require_object(doc, path)
    raw = obj.get("coding")
    if not isinstance(raw, list) or not raw:
        raise SchemaViolation(f"{path}.coding", "required non-empty coding list")
    return [_parse_coding(item, f"{path}.coding[{i}]") for i, item in enumerate(raw)]


def _parse_quantity(doc: Any, path: str) -> Quantity:
    obj = _require_object(doc, path)
    value = _require_number(obj.get("value"), f"{path}.value")
    unit = obj.get("unit", "")
    if not isinstance(unit, str):
        raise SchemaViolation(f"{path}.unit", "expected a string")
    return Quantity(value=value, unit=unit)


def _parse_sampled_data(doc: Any, path: str) -> SampledData:
    obj = _require_object(doc, path)
    origin = _parse_quantity(obj.get("origin"), f"{path}.origin")
    period = _require_number(obj.get("period"), f"{path}.period")
    if period <= 0:
        raise SchemaViolation(f"{path}.period", "period must be > 0")
    factor = 1.0
    if "factor" in obj:
        factor = _require_number(obj["factor"], f"{path}.factor")
    dimensions = obj.get("dimensions", 1)
    if isinstance(dimensions, bool) or not isinstance(dimensions, int) or dimensions < 1:
        raise SchemaViolation(f"{path}.dimensions", "expected a positive integer")
    data = obj.get("data")
    if not isinstance(data, str):
        raise SchemaViolation(f"{path}.data", "required token string")
    try:
        return SampledData(
            origin=origin,
            period_ms=period,
            factor=factor,
            dimensions=dimensions,
            data_tokens=data,
        )
    except ValueError as exc:
        raise SchemaViolation(f"{path}.data", str(exc)) from exc


def _parse_component(doc: Any, path: str) -> Component:
    obj = _require_object(doc, path)
    codings = _parse_codeable_concept(obj.get("code"), f"{path}.code")
    if "valueQuantity" in obj:
        value: Quantity | SampledData | str = _parse_quantity(
            obj["valueQuantity"], f"{path}.valueQuantity"
        )
    elif "valueSampledData" in obj:
        value = _parse_sampled_data(obj["valueSampledData"], f"{path}.valueSampledData")
    elif "valueString" in obj:
        raw = obj["valueString"]
        if not isinstance(raw, str):
            raise SchemaViolation(f"{path}.valueString", "expected a string")
        value = raw
    else:
        raise SchemaViolation(
            path, "component needs valueQuantity, valueSampledData, or valueString"
        )
    return Component(code=codings[0], value=value)


def _parse_observation(doc: dict) -> Observation:
    resource_id = _require_string(doc, "id", "id")
    subject_id = _subject_id(doc)
    codings = _parse_codeable_concept(doc.get("code"), "code")

    if "effectiveDateTime" in doc:
        start = _parse_timestamp(doc["effectiveDateTime"], "effectiveDateTime")
        end = None
    elif "effectivePeriod" in doc:
        period = _require_object(doc["effectivePeriod"], "effectivePeriod")
        start = _parse_timestamp(period.get("start"), "effectivePeriod.start")
        end = None
        if period.get("end") is not None:
            end = _parse_timestamp(period["end"], "effectivePeriod.end")
            if end < start:
                raise SchemaViolation("effectivePeriod.end", "end precedes start")
    else:
        raise SchemaViolation("effectiveDateTime", "required timestamp")

    value_quantity = None
    if "valueQuantity" in doc:
        value_quantity = _parse_quantity(doc["valueQuantity"], "valueQuantity")

    components = tuple(
        _parse_component(item, f"component[{i}]")
        for i, item in enumerate(doc.get("component") or [])
    )
    if (value_quantity is None) == (len(components) == 0):
        raise SchemaViolation(
            "valueQuantity", "exactly one of valueQuantity or component[] must be present"
        )

    device = None
    if doc.get("device") is not None:
        device = _parse_device(doc["device"], "device")
    category = None
    raw_category = doc.get("category")
    if raw_category:
        if not isinstance(raw_category, list):
            raise SchemaViolation("category", "expected a list")
        category = _parse_codeable_concept(raw_category[0], "category[0]")[0]

    return Observation(
        resource_id=resource_id,
        subject_id=subject_id,
        code=codings,
        effective_start=start,
        effective_end=end,
        value_quantity=value_quantity,
        components=components,
        device=device,
        category=category,
    )


REFERENCE_SYSTEM = "urn:fhirflow:reference"


def _parse_device(doc: Any, path: str) -> Coding:
    """Observation.device is a Reference in FHIR; exports in the wild also
    carry codings or a bare display, so all three shapes are accepted."""
    obj = _require_object(doc, path)
    if isinstance(obj.get("coding"), list) and obj["coding"]:
        return _parse_coding(obj["coding"][0], f"{path}.coding[0]")
    if isinstance(obj.get("reference"), str) and obj["reference"]:
        return Coding(system=REFERENCE_SYSTEM, code=obj["reference"])
    if isinstance(obj.get("display"), str) and obj["display"]:
        return Coding(system=REFERENCE_SYSTEM, code=obj["display"], display=obj["display"])
    raise SchemaViolation(path, "device needs coding, reference, or display")


def _collect_response_items(raw_items: Any, path: str, out: list[ResponseItem]) -> None:
    if raw_items is None:
        return
    if not isinstance(raw_items, list):
        raise SchemaViolation(path, "expected a list")
    for i, raw in enumerate(raw_items):
        item_path = f"{path}[{i}]"
        obj = _require_object(raw, item_path)
        nested = obj.get("item")
        answers = obj.get("answer")
        if answers is None and nested:
            _collect_response_items(nested, f"{item_path}.item", out)
            continue
        link_id = _require_string(obj, "linkId", f"{item_path}.linkId")
        if not isinstance(answers, list) or not answers:
            raise SchemaViolation(f"{item_path}.answer", "required non-empty answer list")
        answer = _require_object(answers[0], f"{item_path}.answer[0]")
        code, text = _parse_answer_value(answer, f"{item_path}.answer[0]")
        out.append(
            ResponseItem(
                link_id=link_id,
                question_text=_optional_string(obj, "text", f"{item_path}.text"),
                answer_code=code,
                answer_text=text,
            )
        )


def _parse_answer_value(answer: dict, path: str) -> tuple[str, str | None]:
    if "valueCoding" in answer:
        coding = _require_object(answer["valueCoding"], f"{path}.valueCoding")
        code = _require_string(coding, "code", f"{path}.valueCoding.code")
        return code, _optional_string(coding, "display", f"{path}.valueCoding.display")
    if "valueString" in answer:
        raw = answer["valueString"]
        if not isinstance(raw, str) or not raw:
            raise SchemaViolation(f"{path}.valueString", "required non-empty string")
        return raw, raw
    for key in ("valueInteger", "valueDecimal"):
        if key in answer:
            return format_decimal(_require_number(answer[key], f"{path}.{key}")), None
    if "valueBoolean" in answer:
        raw = answer["valueBoolean"]
        if not isinstance(raw, bool):
            raise SchemaViolation(f"{path}.valueBoolean", "expected a boolean")
        return ("true" if raw else "false"), None
    raise SchemaViolation(path, "answer needs a valueCoding/String/Integer/Decimal/Boolean")


def _parse_questionnaire_response(doc: dict) -> QuestionnaireResponse:
    resource_id = _require_string(doc, "id", "id")
    subject_id = _subject_id(doc)
    questionnaire_ref = _require_string(doc, "questionnaire", "questionnaire")
    authored = _parse_timestamp(doc.get("authored"), "authored")
    items: list[ResponseItem] = []
    _collect_response_items(doc.get("item"), "item", items)
    try:
        return QuestionnaireResponse(
            resource_id=resource_id,
            subject_id=subject_id,
            questionnaire_ref=questionnaire_ref,
            authored=authored,
            items=tuple(items),
        )
    except ValueError as exc:
        raise SchemaViolation("item", str(exc)) from exc


def _parse_answer_option(raw: Any, path: str) -> AnswerOption:
    obj = _require_object(raw, path)
    coding = _require_object(obj.get("valueCoding"), f"{path}.valueCoding")
    code = _require_string(coding, "code", f"{path}.valueCoding.code")
    display = coding.get("display", "")
    if not isinstance(display, str):
        raise SchemaViolation(f"{path}.valueCoding.display", "expected a string")
    # "or" would drop a legitimate ordinal of zero.
    ordinal = _find_ordinal(obj.get("extension"))
    if ordinal is None:
        ordinal = _find_ordinal(coding.get("extension"))
    return AnswerOption(code=code, display_text=display, ordinal_value=ordinal)


def _find_ordinal(extensions: Any) -> int | None:
    if not isinstance(extensions, list):
        return None
    for ext in extensions:
        if isinstance(ext, dict) and ext.get("url") == ORDINAL_VALUE_URL:
            for key in ("valueDecimal", "valueInteger"):
                value = ext.get(key)
                if isinstance(value, (int, float)) and not isinstance(value, bool):
                    return int(value)
    return None


def _parse_questionnaire(doc: dict) -> QuestionnaireDefinition:
    ref = doc.get("url") or doc.get("id")
    if not isinstance(ref, str) or not ref:
        raise SchemaViolation("url", "required non-empty string (or id fallback)")
    title = _require_string(doc, "title", "title")
    items = []
    raw_items = doc.get("item") or []
    if not isinstance(raw_items, list):
        raise SchemaViolation("item", "expected a list")
    for i, raw in enumerate(raw_items):
        path = f"item[{i}]"
        obj = _require_object(raw, path)
        link_id = _require_string(obj, "linkId", f"{path}.linkId")
        text = obj.get("text", "")
        if not isinstance(text, str):
            raise SchemaViolation(f"{path}.text", "expected a string")
        options = tuple(
            _parse_answer_option(opt, f"{path}.answerOption[{j}]")
            for j, opt in enumerate(obj.get("answerOption") or [])
        )
        try:
            items.append(
                DefinitionItem(link_id=link_id, question_text=text, answer_options=options)
            )
        except ValueError as exc:
            raise SchemaViolation(f"{path}.answerOption", str(exc)) from exc
    return QuestionnaireDefinition(questionnaire_ref=ref, title=title, items=tuple(items))


def _parse_patient(doc: dict) -> PatientRecord:
    subject_id = _require_string(doc, "id", "id")
    birth_date: date | None = None
    if doc.get("birthDate") is not None:
        raw = doc["birthDate"]
        if not isinstance(raw, str):
            raise SchemaViolation("birthDate", "expected a date string")
        try:
            birth_date = parse_day(raw)
        except ValueError as exc:
            raise SchemaViolation("birthDate", f"bad date: {exc}") from exc
    demographics: dict[str, str] = {}
    if isinstance(doc.get("gender"), str):
        demographics["gender"] = doc["gender"]
    names = doc.get("name")
    if isinstance(names, list) and names and isinstance(names[0], dict):
        name = names[0]
        if isinstance(name.get("text"), str) and name["text"]:
            demographics["name"] = name["text"]
        else:
            given = name.get("given") or []
            parts = [p for p in given if isinstance(p, str)]
            if isinstance(name.get("family"), str):
                parts.append(name["family"])
            if parts:
                demographics["name"] = " ".join(parts)
    return PatientRecord(subject_id=subject_id, birth_date=birth_date, demographics=demographics)


_PARSERS = {
    "Observation": (ResourceKind.OBSERVATION, _parse_observation),
    "QuestionnaireResponse": (ResourceKind.QUESTIONNAIRE_RESPONSE, _parse_questionnaire_response),
    "Questionnaire": (ResourceKind.QUESTIONNAIRE, _parse_questionnaire),
    "Patient": (ResourceKind.PATIENT, _parse_patient),
}


def parse_resource(json_text: str) -> ResourceEnvelope:
    """Parse one FHIR resource document into a validated envelope.

    Raises MalformedJson, UnsupportedResourceType, or SchemaViolation (with a
    dotted field path identifying the offending field).
    """
    return parse_document(_load_json(json_text))


def parse_document(doc: Any) -> ResourceEnvelope:
    """Like parse_resource, for an already-parsed JSON document."""
    if not isinstance(doc, dict):
        raise SchemaViolation("", "document must be a JSON object")
    resource_type = doc.get("resourceType")
    if not isinstance(resource_type, str) or not resource_type:
        raise SchemaViolation("resourceType", "required non-empty string")
    if resource_type not in _PARSERS:
        raise UnsupportedResourceType(resource_type)
    kind, parser = _PARSERS[resource_type]
    try:
        payload = parser(doc)
    except SchemaViolation:
        raise
    except ValueError as exc:
        raise SchemaViolation("", str(exc)) from exc
    return ResourceEnvelope(kind=kind, payload=payload, raw_source_hash=content_hash(doc))


def _coding_doc(coding: Coding) -> dict:
    doc: dict[str, Any] = {"system": coding.system, "code": coding.code}
    if coding.display is not None:
        doc["display"] = coding.display
    return doc


def _quantity_doc(quantity: Quantity) -> dict:
    return {"value": quantity.value, "unit": quantity.unit}


def _sampled_data_doc(sd: SampledData) -> dict:
    return {
        "origin": _quantity_doc(sd.origin),
        "period": sd.period_ms,
        "factor": sd.factor,
        "dimensions": sd.dimensions,
        "data": sd.data_tokens,
    }


def _observation_doc(obs: Observation) -> dict:
    doc: dict[str, Any] = {
        "resourceType": "Observation",
        "id": obs.resource_id,
        "status": "final",
        "code": {"coding": [_coding_doc(c) for c in obs.code]},
        "subject": {"reference": f"Patient/{obs.subject_id}"},
    }
    if obs.effective_end is None:
        doc["effectiveDateTime"] = format_instant(obs.effective_start)
    else:
        doc["effectivePeriod"] = {
            "start": format_instant(obs.effective_start),
            "end": format_instant(obs.effective_end),
        }
    if obs.value_quantity is not None:
        doc["valueQuantity"] = _quantity_doc(obs.value_quantity)
    if obs.components:
        parts = []
        for component in obs.components:
            part: dict[str, Any] = {"code": {"coding": [_coding_doc(component.code)]}}
            if isinstance(component.value, Quantity):
                part["valueQuantity"] = _quantity_doc(component.value)
            elif isinstance(component.value, SampledData):
                part["valueSampledData"] = _sampled_data_doc(component.value)
            else:
                part["valueString"] = component.value
            parts.append(part)
        doc["component"] = parts
    if obs.device is not None:
        if obs.device.system == REFERENCE_SYSTEM:
            # display-only devices keep display set; bare references do not
            if obs.device.display is not None:
                doc["device"] = {"display": obs.device.display}
            else:
                doc["device"] = {"reference": obs.device.code}
        else:
            doc["device"] = {"coding": [_coding_doc(obs.device)]}
    if obs.category is not None:
        doc["category"] = [{"coding": [_coding_doc(obs.category)]}]
    return doc


def _questionnaire_response_doc(qr: QuestionnaireResponse) -> dict:
    return {
        "resourceType": "QuestionnaireResponse",
        "id": qr.resource_id,
        "status": "completed",
        "questionnaire": qr.questionnaire_ref,
        "subject": {"reference": f"Patient/{qr.subject_id}"},
        "authored": format_instant(qr.authored),
        "item": [
            {
                "linkId": item.link_id,
                **({"text": item.question_text} if item.question_text is not None else {}),
                "answer": [
                    {
                        "valueCoding": {
                            "code": item.answer_code,
                            **(
                                {"display": item.answer_text}
                                if item.answer_text is not None
                                else {}
                            ),
                        }
                    }
                ],
            }
            for item in qr.items
        ],
    }


def _questionnaire_doc(q: QuestionnaireDefinition) -> dict:
    return {
        "resourceType": "Questionnaire",
        "url": q.questionnaire_ref,
        "title": q.title,
        "status": "active",
        "item": [
            {
                "linkId": item.link_id,
                "text": item.question_text,
                "type": "choice",
                "answerOption": [
                    {
                        "valueCoding": {"code": opt.code, "display": opt.display_text},
                        **(
                            {
                                "extension": [
                                    {
                                        "url": ORDINAL_VALUE_URL,
                                        "valueDecimal": opt.ordinal_value,
                                    }
                                ]
                            }
                            if opt.ordinal_value is not None
                            else {}
                        ),
                    }
                    for opt in item.answer_options
                ],
            }
            for item in q.items
        ],
    }


def _patient_doc(patient: PatientRecord) -> dict:
    doc: dict[str, Any] = {"resourceType": "Patient", "id": patient.subject_id}
    if patient.birth_date is not None:
        doc["birthDate"] = patient.birth_date.isoformat()
    if "gender" in patient.demographics:
        doc["gender"] = patient.demographics["gender"]
    if "name" in patient.demographics:
        doc["name"] = [{"text": patient.demographics["name"]}]
    return doc


def serialize_resource(envelope: ResourceEnvelope) -> str:
    """Canonical JSON for an envelope's payload; inverse of parse_resource up
    to unknown source fields (round-trip parses to an equal payload)."""
    payload = envelope.payload
    if isinstance(payload, Observation):
        doc = _observation_doc(payload)
    elif isinstance(payload, QuestionnaireResponse):
        doc = _questionnaire_response_doc(payload)
    elif isinstance(payload, QuestionnaireDefinition):
        doc = _questionnaire_doc(payload)
    elif isinstance(payload, PatientRecord):
        doc = _patient_doc(payload)
    else:
        raise TypeError(f"unknown payload type: {type(payload).__name__}")
    return canonical_json(doc)
