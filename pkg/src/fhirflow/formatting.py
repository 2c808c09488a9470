"""Canonical parsing and formatting of timestamps, dates, and decimals.

All byte-level artifacts (CSV, chart JSON, SVG) funnel their values through
these helpers so identical inputs always serialize to identical bytes.
Timestamps are normalized to UTC; a value without an offset is taken as UTC.
"""

from __future__ import annotations

import math
from datetime import date, datetime, timezone

UTC = timezone.utc


def parse_instant(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are interpreted as UTC."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        value = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValueError(f"not an ISO-8601 timestamp: {text!r}") from exc
    if value.tzinfo is None:
        value = value.replace(tzinfo=UTC)
    return value.astimezone(UTC)


def format_instant(value: datetime) -> str:
    """Render a timestamp as ISO-8601 UTC with a ``Z`` suffix."""
    if value.tzinfo is None:
        value = value.replace(tzinfo=UTC)
    text = value.astimezone(UTC).isoformat()
    if text.endswith("+00:00"):
        text = text[:-6] + "Z"
    return text


def parse_day(text: str) -> date:
    """Parse a ``YYYY-MM-DD`` calendar date."""
    return date.fromisoformat(text.strip())


def utc_day(value: datetime) -> date:
    """Calendar date of a timestamp in UTC (the toolkit's day boundary)."""
    if value.tzinfo is None:
        value = value.replace(tzinfo=UTC)
    return value.astimezone(UTC).date()


def format_decimal(value: float) -> str:
    """Shortest decimal text that parses back to the same float.

    Integral values drop the trailing ``.0`` so counts render as counts.
    Non-finite values are never serialized.
    """
    f = float(value)
    if not math.isfinite(f):
        raise ValueError(f"non-finite value cannot be serialized: {value!r}")
    if f == int(f) and abs(f) < 1e16:
        return str(int(f))
    return repr(f)
