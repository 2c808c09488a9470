"""Row selection and outlier filtering over flat tables.

All operations return subsets of the input rows with relative order
preserved; none of them mutate the input table.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Iterable

from ..errors import InvalidRange, WrongSchema
from ..formatting import utc_day
from ..model import CodeRegistry, MetricKind, default_registry, parse_metric_kind
from ..table import FlatTable, SchemaKind

# Column holding the row's timestamp, per schema (UserFlat has none).
TIME_COLUMNS: dict[SchemaKind, str] = {
    SchemaKind.OBSERVATION: "effectiveDate",
    SchemaKind.ECG: "effectiveDate",
    SchemaKind.QUESTIONNAIRE: "authoredDate",
    SchemaKind.SCORE: "authoredDate",
}


class OutlierMode(Enum):
    FIXED_RANGE = "FixedRange"
    IQR = "IQR"


@dataclass(frozen=True)
class OutlierPolicy:
    mode: OutlierMode = OutlierMode.FIXED_RANGE
    per_metric_ranges: dict[MetricKind, tuple[float, float]] = field(default_factory=dict)
    iqr_multiplier: float = 1.5

    def __post_init__(self):
        if self.iqr_multiplier <= 0:
            raise ValueError("iqrMultiplier must be > 0")
        for kind, (low, high) in self.per_metric_ranges.items():
            if not low < high:
                raise ValueError(f"range for {kind.value} must have min < max")

    @classmethod
    def from_dict(cls, doc: dict) -> "OutlierPolicy":
        mode = OutlierMode(doc.get("mode", "FixedRange"))
        ranges = {}
        for name, bounds in (doc.get("perMetricRanges") or {}).items():
            if not isinstance(bounds, (list, tuple)) or len(bounds) != 2:
                raise ValueError(f"range for {name!r} must be a [min, max] pair")
            ranges[parse_metric_kind(name)] = (float(bounds[0]), float(bounds[1]))
        return cls(
            mode=mode,
            per_metric_ranges=ranges,
            iqr_multiplier=float(doc.get("iqrMultiplier", 1.5)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "OutlierPolicy":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _require_schema(table: FlatTable, *kinds: SchemaKind) -> None:
    if table.schema_kind not in kinds:
        wanted = " or ".join(k.value for k in kinds)
        raise WrongSchema(f"expected {wanted}, got {table.schema_kind.value}")


def filter_outliers(
    table: FlatTable,
    policy: OutlierPolicy,
    registry: CodeRegistry | None = None,
) -> tuple[FlatTable, int]:
    """Drop abnormal values per the policy; returns (table, removed count).

    FixedRange passes rows of metrics with no configured range. IQR keeps
    values inside [Q1 - k*IQR, Q3 + k*IQR] per (metric, user); quartiles use
    the median-inclusive rule. Rows with an empty value cell always pass.
    """
    _require_schema(table, SchemaKind.OBSERVATION)
    registry = registry or default_registry()
    value_at = table.column_index("value")
    user_at = table.column_index("userId")
    loinc_at = table.column_index("loincCode")
    name_at = table.column_index("quantityName")

    def metric_group(row: tuple) -> tuple:
        kind = registry.kind_for_code(row[loinc_at]) or MetricKind.OTHER
        return (kind, row[loinc_at], row[name_at])

    if policy.mode is OutlierMode.FIXED_RANGE:
        def keep(row: tuple) -> bool:
            if row[value_at] is None:
                return True
            bounds = policy.per_metric_ranges.get(metric_group(row)[0])
            if bounds is None:
                return True
            return bounds[0] <= row[value_at] <= bounds[1]
    else:
        fences: dict[tuple, tuple[float, float]] = {}
        grouped: dict[tuple, list[float]] = {}
        for row in table:
            if row[value_at] is not None:
                grouped.setdefault(metric_group(row) + (row[user_at],), []).append(
                    row[value_at]
                )
        for key, values in grouped.items():
            if len(values) < 2:
                continue
            q1, _, q3 = statistics.quantiles(values, n=4, method="inclusive")
            spread = q3 - q1
            fences[key] = (
                q1 - policy.iqr_multiplier * spread,
                q3 + policy.iqr_multiplier * spread,
            )

        def keep(row: tuple) -> bool:
            if row[value_at] is None:
                return True
            bounds = fences.get(metric_group(row) + (row[user_at],))
            if bounds is None:
                return True
            return bounds[0] <= row[value_at] <= bounds[1]

    kept = tuple(row for row in table if keep(row))
    removed = len(table) - len(kept)
    return table.with_rows(kept).with_provenance(outliersRemoved=removed), removed


def select_users(table: FlatTable, subject_ids: Iterable[str]) -> FlatTable:
    """Rows whose userId is in the given set, order preserved."""
    wanted = set(subject_ids)
    user_at = table.column_index("userId")
    return table.with_rows(row for row in table if row[user_at] in wanted)


def select_date_range(table: FlatTable, date_from: date, date_to: date) -> FlatTable:
    """Rows whose UTC calendar date falls within [date_from, date_to]."""
    if isinstance(date_from, datetime):
        date_from = utc_day(date_from)
    if isinstance(date_to, datetime):
        date_to = utc_day(date_to)
    if date_from > date_to:
        raise InvalidRange(f"date range is inverted: {date_from} > {date_to}")
    column = TIME_COLUMNS.get(table.schema_kind)
    if column is None:
        raise WrongSchema(f"{table.schema_kind.value} rows carry no timestamp")
    time_at = table.column_index(column)

    def keep(row: tuple) -> bool:
        if row[time_at] is None:
            return False
        return date_from <= utc_day(row[time_at]) <= date_to

    return table.with_rows(row for row in table if keep(row))
