"""Questionnaire risk scoring.

PHQ-9 ships pre-registered; other instruments plug in through the registry.
Responses that cannot be scored (missing items, unknown answer codes, no
scorer for the instrument) are rejected individually and reported in the
outcome, never dropped silently and never fatal for the batch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from pathlib import Path
from typing import Callable

from ..errors import (
    DuplicateInstrument,
    FhirflowError,
    IncompleteResponse,
    RegistryFrozen,
    UnmappableAnswer,
    WrongSchema,
)
from ..model import QuestionnaireDefinition, parse_resource
from ..table import FlatTable, SchemaKind

PHQ9_INSTRUMENT = "PHQ-9"

# (low, high, label); contiguous over the instrument's score range.
PHQ9_BANDS: tuple[tuple[int, int, str], ...] = (
    (0, 4, "minimal"),
    (5, 9, "mild"),
    (10, 14, "moderate"),
    (15, 19, "moderately severe"),
    (20, 27, "severe"),
)


@dataclass(frozen=True)
class RiskScoreRow:
    user_id: str
    resource_id: str
    authored: datetime
    instrument: str
    total_score: int
    severity_band: str


@dataclass(frozen=True)
class RejectedResponse:
    resource_id: str
    reason: str


@dataclass
class ScoreOutcome:
    rows: list[RiskScoreRow] = field(default_factory=list)
    rejected: list[RejectedResponse] = field(default_factory=list)

    def to_table(self) -> FlatTable:
        return FlatTable(
            SchemaKind.SCORE,
            tuple(
                (r.user_id, r.resource_id, r.authored, r.instrument, r.total_score,
                 r.severity_band)
                for r in self.rows
            ),
            {"operation": "score", "rejected": len(self.rejected)},
        )


_PHQ9_DEFINITION: QuestionnaireDefinition | None = None


def phq9_definition() -> QuestionnaireDefinition:
    """The shipped PHQ-9 instrument definition (loaded once)."""
    global _PHQ9_DEFINITION
    if _PHQ9_DEFINITION is None:
        text = resources.files("fhirflow").joinpath("data/phq9.json").read_text("utf-8")
        _PHQ9_DEFINITION = parse_resource(text).payload
    return _PHQ9_DEFINITION


def band_label(total: int, bands: tuple[tuple[int, int, str], ...]) -> str:
    for low, high, label in bands:
        if low <= total <= high:
            return label
    raise ValueError(f"score {total} outside every band")


def load_bands(path: str | Path) -> tuple[tuple[int, int, str], ...]:
    """Band config: {"bands": [{"min": 0, "max": 4, "label": "minimal"}, ...]}."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    bands = []
    for entry in doc["bands"]:
        low, high, label = int(entry["min"]), int(entry["max"]), str(entry["label"])
        if low > high:
            raise ValueError(f"band {label!r} has min > max")
        bands.append((low, high, label))
    bands.sort()
    for (_, prev_high, prev_label), (low, _, label) in zip(bands, bands[1:]):
        if low != prev_high + 1:
            raise ValueError(f"bands {prev_label!r} and {label!r} do not tile the range")
    return tuple(bands)


GroupScorer = Callable[[list[dict]], RiskScoreRow]


def make_phq9_scorer(
    definition: QuestionnaireDefinition | None = None,
    bands: tuple[tuple[int, int, str], ...] = PHQ9_BANDS,
) -> GroupScorer:
    """Group scorer summing the nine item ordinals (each 0..3)."""

    def score_group(rows: list[dict]) -> RiskScoreRow:
        instrument = definition or phq9_definition()
        expected = {item.link_id for item in instrument.items}
        ordinals: dict[str, int] = {}
        for row in rows:
            link_id, code = row["questionId"], row["answerCode"]
            if link_id not in expected:
                raise UnmappableAnswer(
                    f"item {link_id!r} is not part of {instrument.title}"
                )
            ordinal = instrument.answer_ordinal(link_id, code)
            if ordinal is None:
                raise UnmappableAnswer(
                    f"answer code {code!r} has no ordinal for item {link_id!r}"
                )
            ordinals[link_id] = ordinal
        if len(ordinals) < len(expected):
            missing = sorted(expected - set(ordinals))
            raise IncompleteResponse(
                f"missing items: {', '.join(missing)} ({len(ordinals)}/{len(expected)})"
            )
        total = sum(ordinals.values())
        first = rows[0]
        return RiskScoreRow(
            user_id=first["userId"],
            resource_id=first["resourceId"],
            authored=first["authoredDate"],
            instrument=instrument.title,
            total_score=total,
            severity_band=band_label(total, bands),
        )

    return score_group


def _grouped_rows(table: FlatTable) -> list[tuple[str, list[dict]]]:
    if table.schema_kind is not SchemaKind.QUESTIONNAIRE:
        raise WrongSchema(f"expected QuestionnaireFlat, got {table.schema_kind.value}")
    order: list[str] = []
    groups: dict[str, list[dict]] = {}
    for row in table:
        record = table.row_dict(row)
        resource_id = record["resourceId"]
        if resource_id not in groups:
            order.append(resource_id)
            groups[resource_id] = []
        groups[resource_id].append(record)
    return [(resource_id, groups[resource_id]) for resource_id in order]


def score_phq9(
    table: FlatTable,
    bands: tuple[tuple[int, int, str], ...] = PHQ9_BANDS,
) -> ScoreOutcome:
    """Score every response in the table as a PHQ-9 instrument."""
    scorer = make_phq9_scorer(bands=bands)
    outcome = ScoreOutcome()
    for resource_id, rows in _grouped_rows(table):
        try:
            outcome.rows.append(scorer(rows))
        except (IncompleteResponse, UnmappableAnswer) as exc:
            outcome.rejected.append(
                RejectedResponse(resource_id, f"{type(exc).__name__}: {exc}")
            )
    return outcome


class ScoreRegistry:
    """Dispatches responses to scorers by instrument name (case-insensitive).

    Registration is a setup-time activity: the registry freezes on first use
    so concurrent scoring never races a mutation.
    """

    def __init__(self):
        self._scorers: dict[str, GroupScorer] = {}
        self._frozen = False

    def register(self, instrument: str, scorer: GroupScorer) -> None:
        if self._frozen:
            raise RegistryFrozen("cannot register scorers after scoring has started")
        key = instrument.casefold()
        if key in self._scorers:
            raise DuplicateInstrument(f"scorer for {instrument!r} already registered")
        self._scorers[key] = scorer

    def instruments(self) -> list[str]:
        return sorted(self._scorers)

    def score_table(self, table: FlatTable) -> ScoreOutcome:
        self._frozen = True
        outcome = ScoreOutcome()
        for resource_id, rows in _grouped_rows(table):
            instrument = rows[0]["questionnaireTitle"]
            scorer = self._scorers.get(instrument.casefold())
            if scorer is None:
                outcome.rejected.append(
                    RejectedResponse(resource_id, f"no scorer for instrument {instrument!r}")
                )
                continue
            try:
                outcome.rows.append(scorer(rows))
            except FhirflowError as exc:
                outcome.rejected.append(
                    RejectedResponse(resource_id, f"{type(exc).__name__}: {exc}")
                )
        return outcome


def default_score_registry() -> ScoreRegistry:
    """Fresh registry with the PHQ-9 scorer pre-registered."""
    registry = ScoreRegistry()
    registry.register(PHQ9_INSTRUMENT, make_phq9_scorer())
    return registry
