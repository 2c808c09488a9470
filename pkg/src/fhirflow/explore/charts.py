"""Chart builders: declarative ChartSpec values computed from flat tables.

A ChartSpec is pure data (kind, axes, series of points); rendering to SVG and
serialization to canonical JSON live in sibling modules so that every chart a
chart consumer sees, via file export or HTTP, is traceable to table cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable

from ..errors import BadWindow, EmptySelection, NoWaveform, WrongSchema
from ..formatting import utc_day
from ..model import CodeRegistry, MetricKind, default_registry
from ..model.waveform import SpecialToken
from ..process.aggregate import aggregate_daily_mean, aggregate_daily_sum
from ..process.filters import TIME_COLUMNS, select_users
from ..table import FlatTable, SchemaKind


class ChartKind(Enum):
    LINE = "line"
    BAR = "bar"
    SCATTER = "scatter"
    ECG_TRACE = "ecgTrace"
    HISTOGRAM = "histogram"


class SeriesAgg(Enum):
    SUM = "sum"
    MEAN = "mean"


def parse_agg(text: str) -> SeriesAgg:
    try:
        return SeriesAgg(text.strip().lower())
    except ValueError:
        raise ValueError(f"unknown aggregation: {text!r}") from None


@dataclass(frozen=True)
class Axis:
    label: str
    unit: str = ""


@dataclass(frozen=True)
class Series:
    name: str
    points: tuple[tuple[Any, float | None], ...]


@dataclass(frozen=True)
class ChartSpec:
    kind: ChartKind
    title: str
    x_axis: Axis
    y_axis: Axis
    series: tuple[Series, ...]
    sampling_frequency_hz: float | None = None
    annotations: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.series:
            raise ValueError("a chart needs at least one series")
        if (self.kind is ChartKind.ECG_TRACE) != (self.sampling_frequency_hz is not None):
            raise ValueError("samplingFrequencyHz is required exactly for ecgTrace charts")
        for series in self.series:
            for x, y in series.points:
                if isinstance(x, float) and not math.isfinite(x):
                    raise ValueError(f"series {series.name!r} has a non-finite x")
                if y is None:
                    if self.kind is not ChartKind.ECG_TRACE:
                        raise ValueError("gap points are only valid in ecgTrace charts")
                elif not math.isfinite(y):
                    raise ValueError(f"series {series.name!r} has a non-finite y")

    def point_count(self) -> int:
        return sum(len(series.points) for series in self.series)

    def to_json_doc(self) -> dict:
        doc: dict[str, Any] = {
            "kind": self.kind.value,
            "title": self.title,
            "xAxis": {"label": self.x_axis.label, "unit": self.x_axis.unit},
            "yAxis": {"label": self.y_axis.label, "unit": self.y_axis.unit},
            "series": [
                {
                    "name": series.name,
                    "points": [{"x": x, "y": y} for x, y in series.points],
                }
                for series in self.series
            ],
        }
        if self.sampling_frequency_hz is not None:
            doc["samplingFrequencyHz"] = self.sampling_frequency_hz
        if self.annotations:
            doc["annotations"] = list(self.annotations)
        return doc


@dataclass(frozen=True)
class SubjectStats:
    user_id: str
    ecg_count: int = 0
    weeks_in_study: float = 0.0

    def __post_init__(self):
        if self.ecg_count < 0:
            raise ValueError("ecgCount must be >= 0")
        if self.weeks_in_study < 0:
            raise ValueError("weeksInStudy must be >= 0")


@dataclass(frozen=True)
class StudySummary:
    per_subject: tuple[SubjectStats, ...] = ()

    @classmethod
    def combine(cls, counts: "StudySummary", weeks: "StudySummary") -> "StudySummary":
        by_user: dict[str, dict] = {}
        for stats in counts.per_subject:
            by_user.setdefault(stats.user_id, {})["ecg_count"] = stats.ecg_count
        for stats in weeks.per_subject:
            by_user.setdefault(stats.user_id, {})["weeks_in_study"] = stats.weeks_in_study
        return cls(
            tuple(
                SubjectStats(user_id=user, **by_user[user]) for user in sorted(by_user)
            )
        )


def _metric_rows(
    table: FlatTable, metric: MetricKind, registry: CodeRegistry
) -> FlatTable:
    if table.schema_kind is not SchemaKind.OBSERVATION:
        raise WrongSchema(f"expected ObservationFlat, got {table.schema_kind.value}")
    loinc_at = table.column_index("loincCode")
    return table.with_rows(
        row for row in table if registry.kind_for_code(row[loinc_at]) is metric
    )


def build_daily_series(
    table: FlatTable,
    metric: MetricKind,
    agg: SeriesAgg = SeriesAgg.SUM,
    users: Iterable[str] | None = None,
    registry: CodeRegistry | None = None,
) -> ChartSpec:
    """Line chart: one series per user of daily aggregated values."""
    registry = registry or default_registry()
    selected = _metric_rows(table, metric, registry)
    if users is not None:
        selected = select_users(selected, users)
    if len(selected) == 0:
        raise EmptySelection(f"no {metric.value} rows match the selection")
    aggregate = aggregate_daily_sum if agg is SeriesAgg.SUM else aggregate_daily_mean
    daily = aggregate(selected)

    per_user: dict[str, list[tuple[str, float]]] = {}
    for row in daily:
        record = daily.row_dict(row)
        per_user.setdefault(record["userId"], []).append(
            (utc_day(record["effectiveDate"]).isoformat(), record["value"])
        )
    unit = daily.rows[0][daily.column_index("unit")] if len(daily) else ""
    return ChartSpec(
        kind=ChartKind.LINE,
        title=f"Daily {agg.value} of {metric.value}",
        x_axis=Axis("date"),
        y_axis=Axis(metric.value, unit),
        series=tuple(
            Series(name=user, points=tuple(sorted(per_user[user])))
            for user in sorted(per_user)
        ),
    )


def build_distribution(
    table: FlatTable, metric: MetricKind, registry: CodeRegistry | None = None
) -> ChartSpec:
    """Dot plot of every raw measurement, x = user, y = value."""
    registry = registry or default_registry()
    selected = _metric_rows(table, metric, registry)
    user_at = selected.column_index("userId")
    value_at = selected.column_index("value")
    unit_at = selected.column_index("unit")
    points = tuple(
        (row[user_at], row[value_at]) for row in selected if row[value_at] is not None
    )
    unit = selected.rows[0][unit_at] if len(selected) else ""
    return ChartSpec(
        kind=ChartKind.SCATTER,
        title=f"Distribution of {metric.value}",
        x_axis=Axis("user"),
        y_axis=Axis(metric.value, unit),
        series=(Series(name="measurements", points=points),),
    )


def ecg_counts_per_subject(table: FlatTable) -> tuple[StudySummary, ChartSpec]:
    """Bar chart of EcgFlat rows per user, descending by count then user."""
    if table.schema_kind is not SchemaKind.ECG:
        raise WrongSchema(f"expected EcgFlat, got {table.schema_kind.value}")
    user_at = table.column_index("userId")
    counts: dict[str, int] = {}
    for row in table:
        counts[row[user_at]] = counts.get(row[user_at], 0) + 1
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    summary = StudySummary(
        tuple(SubjectStats(user_id=user, ecg_count=count) for user, count in ordered)
    )
    chart = ChartSpec(
        kind=ChartKind.BAR,
        title="ECG recordings per subject",
        x_axis=Axis("user"),
        y_axis=Axis("recordings", "count"),
        series=(
            Series(name="ecgCount", points=tuple((user, float(n)) for user, n in ordered)),
        ),
    )
    return summary, chart


def time_in_study_weeks(table: FlatTable) -> tuple[StudySummary, ChartSpec]:
    """Bar chart of (last - first observation date) / 7 per user."""
    column = TIME_COLUMNS.get(table.schema_kind)
    if column is None:
        raise WrongSchema(f"{table.schema_kind.value} rows carry no timestamp")
    user_at = table.column_index("userId")
    time_at = table.column_index(column)
    spans: dict[str, tuple] = {}
    for row in table:
        if row[time_at] is None:
            continue
        day = utc_day(row[time_at])
        first, last = spans.get(row[user_at], (day, day))
        spans[row[user_at]] = (min(first, day), max(last, day))
    weeks = {user: (last - first).days / 7 for user, (first, last) in spans.items()}
    ordered = sorted(weeks.items(), key=lambda item: (-item[1], item[0]))
    summary = StudySummary(
        tuple(SubjectStats(user_id=user, weeks_in_study=w) for user, w in ordered)
    )
    chart = ChartSpec(
        kind=ChartKind.BAR,
        title="Time in study per subject",
        x_axis=Axis("user"),
        y_axis=Axis("time in study", "weeks"),
        series=(Series(name="weeksInStudy", points=tuple(ordered)),),
    )
    return summary, chart


def ecg_row(table: FlatTable, resource_id: str) -> dict:
    """The row dict of one EcgFlat recording, by resource id."""
    if table.schema_kind is not SchemaKind.ECG:
        raise WrongSchema(f"expected EcgFlat, got {table.schema_kind.value}")
    id_at = table.column_index("resourceId")
    for row in table:
        if row[id_at] == resource_id:
            return table.row_dict(row)
    raise KeyError(f"no recording {resource_id!r}")


def build_ecg_trace(
    row: dict, window: tuple[float, float] | None = None
) -> ChartSpec:
    """ECG trace chart from one EcgFlat row dict.

    x is seconds from recording start; missing markers become gap points.
    ``window`` selects the half-open time slice [start, end) in seconds.
    """
    samples = row.get("ecgRecording")
    if not samples:
        raise NoWaveform(f"recording {row.get('resourceId')!r} has no waveform")
    frequency = row["samplingFrequencyHz"]
    duration = len(samples) / frequency
    start_index, end_index = 0, len(samples)
    if window is not None:
        start, end = window
        if start < 0 or start >= end or end > duration + 1e-9:
            raise BadWindow(
                f"window ({start}, {end}) invalid for a {duration} s recording"
            )
        start_index = math.ceil(start * frequency - 1e-9)
        end_index = math.ceil(end * frequency - 1e-9)
    points = tuple(
        (
            index / frequency,
            None if isinstance(samples[index], SpecialToken) else samples[index],
        )
        for index in range(start_index, end_index)
    )
    annotations = []
    if row.get("ecgClassification"):
        annotations.append(f"classification: {row['ecgClassification']}")
    if row.get("heartRateBpm") is not None:
        unit = row.get("heartRateUnit") or "bpm"
        annotations.append(f"heart rate: {row['heartRateBpm']:g} {unit}")
    return ChartSpec(
        kind=ChartKind.ECG_TRACE,
        title=f"ECG {row['resourceId']}",
        x_axis=Axis("time", "s"),
        y_axis=Axis("amplitude", row.get("unit", "")),
        series=(Series(name=row["resourceId"], points=points),),
        sampling_frequency_hz=frequency,
        annotations=tuple(annotations),
    )
