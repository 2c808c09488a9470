"""Schema-tagged flat tables.

A FlatTable is the interchange value between flattening, processing, and
export: an immutable list of tuples whose column list is fixed by the schema
kind. Construction validates arity, cell types, and per-schema row-key
uniqueness, so downstream code never re-checks shapes.

Cell conventions: string cells are always str (empty string, never None);
every other cell type admits None for "empty". Waveform cells are non-empty
tuples of floats and missing markers, or None when absent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from typing import Any, Iterable, Iterator

from .formatting import UTC
from .model.waveform import SpecialToken


class CellType(Enum):
    STRING = "string"
    DECIMAL = "decimal"
    INTEGER = "integer"
    TIMESTAMP = "timestamp"
    DATE = "date"
    DECIMAL_LIST = "optionalDecimalList"


@dataclass(frozen=True)
class Column:
    name: str
    cell_type: CellType


class SchemaKind(Enum):
    OBSERVATION = "ObservationFlat"
    ECG = "EcgFlat"
    QUESTIONNAIRE = "QuestionnaireFlat"
    SCORE = "ScoreFlat"
    USER = "UserFlat"


def _cols(*pairs: tuple[str, CellType]) -> tuple[Column, ...]:
    return tuple(Column(name, cell_type) for name, cell_type in pairs)


_OBSERVATION_COLUMNS = _cols(
    ("userId", CellType.STRING),
    ("resourceId", CellType.STRING),
    ("quantityName", CellType.STRING),
    ("unit", CellType.STRING),
    ("value", CellType.DECIMAL),
    ("loincCode", CellType.STRING),
    ("displayName", CellType.STRING),
    ("deviceCode", CellType.STRING),
    ("effectiveDate", CellType.TIMESTAMP),
)

_ECG_COLUMNS = _OBSERVATION_COLUMNS + _cols(
    ("numberOfMeasurements", CellType.INTEGER),
    ("samplingFrequencyHz", CellType.DECIMAL),
    ("ecgClassification", CellType.STRING),
    ("heartRateBpm", CellType.DECIMAL),
    ("heartRateUnit", CellType.STRING),
    ("ecgRecording", CellType.DECIMAL_LIST),
)

_QUESTIONNAIRE_COLUMNS = _cols(
    ("userId", CellType.STRING),
    ("resourceId", CellType.STRING),
    ("authoredDate", CellType.TIMESTAMP),
    ("questionnaireTitle", CellType.STRING),
    ("questionId", CellType.STRING),
    ("questionText", CellType.STRING),
    ("answerCode", CellType.STRING),
    ("answerText", CellType.STRING),
)

_SCORE_COLUMNS = _cols(
    ("userId", CellType.STRING),
    ("resourceId", CellType.STRING),
    ("authoredDate", CellType.TIMESTAMP),
    ("instrument", CellType.STRING),
    ("totalScore", CellType.INTEGER),
    ("severityBand", CellType.STRING),
)

_USER_COLUMNS = _cols(
    ("userId", CellType.STRING),
    ("birthDate", CellType.DATE),
    ("gender", CellType.STRING),
    ("name", CellType.STRING),
)

SCHEMAS: dict[SchemaKind, tuple[Column, ...]] = {
    SchemaKind.OBSERVATION: _OBSERVATION_COLUMNS,
    SchemaKind.ECG: _ECG_COLUMNS,
    SchemaKind.QUESTIONNAIRE: _QUESTIONNAIRE_COLUMNS,
    SchemaKind.SCORE: _SCORE_COLUMNS,
    SchemaKind.USER: _USER_COLUMNS,
}

# Columns whose combination must be unique within one table.
_ROW_KEYS: dict[SchemaKind, tuple[str, ...]] = {
    SchemaKind.OBSERVATION: ("userId", "resourceId"),
    SchemaKind.ECG: ("userId", "resourceId"),
    SchemaKind.QUESTIONNAIRE: ("userId", "resourceId", "questionId"),
    SchemaKind.SCORE: ("userId", "resourceId", "instrument"),
    SchemaKind.USER: ("userId",),
}

Cell = Any


def _validate_cell(value: Cell, column: Column, where: str) -> Cell:
    if column.cell_type is CellType.STRING:
        if not isinstance(value, str):
            raise ValueError(f"{where}: column {column.name!r} needs a string")
        return value
    if value is None:
        return None
    if column.cell_type is CellType.DECIMAL:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{where}: column {column.name!r} needs a number")
        result = float(value)
        if not math.isfinite(result):
            raise ValueError(f"{where}: column {column.name!r} must be finite")
        return result
    if column.cell_type is CellType.INTEGER:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{where}: column {column.name!r} needs an integer")
        return value
    if column.cell_type is CellType.TIMESTAMP:
        if not isinstance(value, datetime) or value.tzinfo is None:
            raise ValueError(f"{where}: column {column.name!r} needs an aware datetime")
        return value.astimezone(UTC)
    if column.cell_type is CellType.DATE:
        if not isinstance(value, date) or isinstance(value, datetime):
            raise ValueError(f"{where}: column {column.name!r} needs a date")
        return value
    # DECIMAL_LIST
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ValueError(f"{where}: column {column.name!r} needs a non-empty sample list")
    samples = []
    for i, sample in enumerate(value):
        if isinstance(sample, SpecialToken):
            samples.append(sample)
        elif isinstance(sample, bool) or not isinstance(sample, (int, float)):
            raise ValueError(f"{where}: column {column.name!r} sample [{i}] is not a number")
        else:
            as_float = float(sample)
            if not math.isfinite(as_float):
                raise ValueError(f"{where}: column {column.name!r} sample [{i}] must be finite")
            samples.append(as_float)
    return tuple(samples)


@dataclass(frozen=True)
class FlatTable:
    """Immutable table; equality covers kind and rows, not provenance."""

    schema_kind: SchemaKind
    rows: tuple[tuple, ...] = ()
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        columns = SCHEMAS[self.schema_kind]
        key_indexes = [
            [c.name for c in columns].index(name) for name in _ROW_KEYS[self.schema_kind]
        ]
        seen: set[tuple] = set()
        validated = []
        for r, row in enumerate(self.rows):
            if len(row) != len(columns):
                raise ValueError(
                    f"row {r}: arity {len(row)} does not match {len(columns)} columns"
                )
            cells = tuple(
                _validate_cell(cell, column, f"row {r}")
                for cell, column in zip(row, columns)
            )
            key = tuple(cells[i] for i in key_indexes)
            if key in seen:
                raise ValueError(f"row {r}: duplicate row key {key!r}")
            seen.add(key)
            validated.append(cells)
        object.__setattr__(self, "rows", tuple(validated))

    @property
    def columns(self) -> tuple[Column, ...]:
        return SCHEMAS[self.schema_kind]

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(column.name for column in self.columns)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.rows)

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise KeyError(f"no column {name!r} in {self.schema_kind.value}") from None

    def column_values(self, name: str) -> list:
        index = self.column_index(name)
        return [row[index] for row in self.rows]

    def row_dict(self, row: int | tuple) -> dict[str, Cell]:
        cells = self.rows[row] if isinstance(row, int) else row
        return dict(zip(self.column_names, cells))

    def with_rows(self, rows: Iterable[tuple]) -> "FlatTable":
        return FlatTable(self.schema_kind, tuple(rows), dict(self.provenance))

    def with_provenance(self, **entries) -> "FlatTable":
        merged = dict(self.provenance)
        merged.update(entries)
        return FlatTable(self.schema_kind, self.rows, merged)

    def from_dicts(self, records: Iterable[dict]) -> "FlatTable":
        names = self.column_names
        return self.with_rows(tuple(r[name] for name in names) for r in records)


def table_from_dicts(
    kind: SchemaKind, records: Iterable[dict], provenance: dict | None = None
) -> FlatTable:
    names = tuple(column.name for column in SCHEMAS[kind])
    rows = tuple(tuple(record[name] for name in names) for record in records)
    return FlatTable(kind, rows, provenance or {})
