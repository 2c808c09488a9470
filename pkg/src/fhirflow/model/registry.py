"""Metric classification driven by a code registry data file.

Which (system, code) pairs mean "step count" or "ECG" is study configuration,
not logic: the shipped default registry covers the common LOINC and Apple
Health identifiers, and deployments can load their own file with the same
shape: a JSON array of ``{system, code, metricKind, displayName, unit}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable

from ..errors import SchemaViolation
from .types import Coding, Observation


class MetricKind(Enum):
    STEP_COUNT = "StepCount"
    HEART_RATE = "HeartRate"
    HRV = "HRV"
    ACTIVE_ENERGY = "ActiveEnergy"
    VO2_MAX = "VO2Max"
    PHYSICAL_EFFORT = "PhysicalEffort"
    ECG = "ECG"
    OTHER = "Other"


@dataclass(frozen=True)
class MetricClass:
    """Classification outcome: the kind plus the coding code it came from.

    For OTHER, ``code`` is the first code of the observation.
    """

    kind: MetricKind
    code: str


@dataclass(frozen=True)
class RegistryEntry:
    system: str
    code: str
    metric_kind: MetricKind
    display_name: str
    unit: str


class CodeRegistry:
    """Lookup table from (system, code) to metric metadata."""

    def __init__(self, entries: Iterable[RegistryEntry]):
        self._by_key: dict[tuple[str, str], RegistryEntry] = {}
        for entry in entries:
            self._by_key[(entry.system, entry.code)] = entry

    def __len__(self) -> int:
        return len(self._by_key)

    def lookup(self, system: str, code: str) -> RegistryEntry | None:
        return self._by_key.get((system, code))

    def kind_for_code(self, code: str) -> MetricKind | None:
        """Classify by code alone (flat-table rows carry no coding system)."""
        if not code:
            return None
        for entry in self._by_key.values():
            if entry.code == code:
                return entry.metric_kind
        return None

    def classify_codes(self, codings: Iterable[Coding]) -> MetricClass:
        """First coding with a registry entry wins, scanning in order."""
        first_code = ""
        for coding in codings:
            if not first_code:
                first_code = coding.code
            entry = self.lookup(coding.system, coding.code)
            if entry is not None:
                return MetricClass(kind=entry.metric_kind, code=coding.code)
        return MetricClass(kind=MetricKind.OTHER, code=first_code)

    def display_name_for(self, codings: Iterable[Coding]) -> str | None:
        for coding in codings:
            entry = self.lookup(coding.system, coding.code)
            if entry is not None:
                return entry.display_name
        return None

    @classmethod
    def from_json(cls, text: str) -> "CodeRegistry":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaViolation("", f"registry file is not valid JSON: {exc}") from exc
        if not isinstance(raw, list):
            raise SchemaViolation("", "registry file must be a JSON array")
        entries = []
        for i, item in enumerate(raw):
            if not isinstance(item, dict):
                raise SchemaViolation(f"[{i}]", "registry entry must be an object")
            try:
                kind = MetricKind(item["metricKind"])
            except (KeyError, ValueError):
                raise SchemaViolation(
                    f"[{i}].metricKind", "missing or unknown metric kind"
                ) from None
            for field in ("system", "code"):
                if not isinstance(item.get(field), str) or not item[field]:
                    raise SchemaViolation(f"[{i}].{field}", "must be a non-empty string")
            entries.append(
                RegistryEntry(
                    system=item["system"],
                    code=item["code"],
                    metric_kind=kind,
                    display_name=str(item.get("displayName", "")),
                    unit=str(item.get("unit", "")),
                )
            )
        return cls(entries)

    @classmethod
    def from_file(cls, path: str | Path) -> "CodeRegistry":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


_DEFAULT: CodeRegistry | None = None


def default_registry() -> CodeRegistry:
    """The registry shipped with the package (loaded once)."""
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("fhirflow").joinpath("data/metric_codes.json").read_text("utf-8")
        _DEFAULT = CodeRegistry.from_json(text)
    return _DEFAULT


def classify_observation(obs: Observation, registry: CodeRegistry | None = None) -> MetricClass:
    """Classify an observation by its codings; total and deterministic."""
    return (registry or default_registry()).classify_codes(obs.code)


_ALIASES = {
    "steps": MetricKind.STEP_COUNT,
    "hr": MetricKind.HEART_RATE,
    "calories": MetricKind.ACTIVE_ENERGY,
    "energy": MetricKind.ACTIVE_ENERGY,
    "effort": MetricKind.PHYSICAL_EFFORT,
}


def parse_metric_kind(text: str) -> MetricKind:
    """Flexible metric-name parsing for CLI flags and URL segments."""
    normalized = re.sub(r"[^a-z0-9]", "", text.lower())
    for kind in MetricKind:
        if re.sub(r"[^a-z0-9]", "", kind.value.lower()) == normalized:
            return kind
    if normalized in _ALIASES:
        return _ALIASES[normalized]
    raise ValueError(f"unknown metric kind: {text!r}")
