"""Daily aggregation and the 7-day activity index.

Groups are (userId, loincCode, quantityName) per UTC calendar day; aggregate
rows are ObservationFlat rows with synthetic resource ids, timestamped at
midnight UTC of their day.
"""

from __future__ import annotations

from datetime import date, datetime, timedelta
from statistics import fmean

from ..errors import WrongSchema
from ..formatting import UTC, utc_day
from ..model import CodeRegistry, MetricKind, default_registry
from ..table import FlatTable, SchemaKind

ACTIVITY_INDEX_NAME = "Activity Index"


def _require_observation(table: FlatTable) -> None:
    if table.schema_kind is not SchemaKind.OBSERVATION:
        raise WrongSchema(f"expected ObservationFlat, got {table.schema_kind.value}")


def _day_start(day: date) -> datetime:
    return datetime(day.year, day.month, day.day, tzinfo=UTC)


def _daily_groups(table: FlatTable) -> dict[tuple, list[dict]]:
    """(userId, loincCode, quantityName, day) -> contributing row dicts."""
    groups: dict[tuple, list[dict]] = {}
    for row in table:
        record = table.row_dict(row)
        if record["value"] is None or record["effectiveDate"] is None:
            continue
        key = (
            record["userId"],
            record["loincCode"],
            record["quantityName"],
            utc_day(record["effectiveDate"]),
        )
        groups.setdefault(key, []).append(record)
    return groups


def _aggregate_rows(table: FlatTable, op_name: str, combine) -> tuple[list[tuple], dict]:
    groups = _daily_groups(table)
    rows = []
    counts: dict[str, int] = {}
    for key in sorted(groups, key=lambda k: (k[0], k[3], k[1], k[2])):
        user_id, loinc_code, quantity_name, day = key
        members = groups[key]
        resource_id = f"{op_name}:{user_id}:{loinc_code}:{quantity_name}:{day.isoformat()}"
        counts[resource_id] = len(members)
        rows.append(
            (
                user_id,
                resource_id,
                quantity_name,
                members[0]["unit"],
                combine([m["value"] for m in members]),
                loinc_code,
                members[0]["displayName"],
                "",
                _day_start(day),
            )
        )
    return rows, counts


def aggregate_daily_sum(table: FlatTable) -> FlatTable:
    """One row per (user, metric, UTC day) holding the day's total."""
    _require_observation(table)
    rows, _ = _aggregate_rows(table, "daily-sum", sum)
    return FlatTable(
        SchemaKind.OBSERVATION, tuple(rows), {"operation": "aggregate_daily_sum"}
    )


def aggregate_daily_mean(table: FlatTable) -> FlatTable:
    """One row per (user, metric, UTC day) holding the day's mean."""
    _require_observation(table)
    rows, counts = _aggregate_rows(table, "daily-mean", fmean)
    return FlatTable(
        SchemaKind.OBSERVATION,
        tuple(rows),
        {"operation": "aggregate_daily_mean", "rowCounts": counts},
    )


def activity_index(table: FlatTable, registry: CodeRegistry | None = None) -> FlatTable:
    """7-day trailing moving average of daily step totals.

    For each charted day d the index is the mean of the daily totals on the
    days in [d-6, d] that exist in the data; windows with fewer than 7 days
    are still emitted but recorded in provenance["partialWindows"].
    """
    _require_observation(table)
    registry = registry or default_registry()
    loinc_at = table.column_index("loincCode")
    for row in table:
        if registry.kind_for_code(row[loinc_at]) is not MetricKind.STEP_COUNT:
            raise WrongSchema("activity_index expects step-count rows only")

    daily = aggregate_daily_sum(table)
    totals: dict[str, dict[date, tuple[float, str]]] = {}
    for row in daily:
        record = daily.row_dict(row)
        totals.setdefault(record["userId"], {})[utc_day(record["effectiveDate"])] = (
            record["value"],
            record["unit"],
        )

    rows = []
    partial: dict[str, int] = {}
    for user_id in sorted(totals):
        per_day = totals[user_id]
        for day in sorted(per_day):
            window = [
                per_day[day - timedelta(days=offset)][0]
                for offset in range(7)
                if day - timedelta(days=offset) in per_day
            ]
            resource_id = f"activity-index:{user_id}:{day.isoformat()}"
            if len(window) < 7:
                partial[resource_id] = len(window)
            rows.append(
                (
                    user_id,
                    resource_id,
                    ACTIVITY_INDEX_NAME,
                    per_day[day][1],
                    fmean(window),
                    "",
                    "",
                    "",
                    _day_start(day),
                )
            )
    return FlatTable(
        SchemaKind.OBSERVATION,
        tuple(rows),
        {"operation": "activity_index", "partialWindows": partial},
    )
