"""Exploration and export: chart building, SVG rendering, CSV/JSON output."""

from .charts import (
    Axis,
    ChartKind,
    ChartSpec,
    Series,
    SeriesAgg,
    StudySummary,
    SubjectStats,
    build_daily_series,
    build_distribution,
    build_ecg_trace,
    ecg_counts_per_subject,
    ecg_row,
    parse_agg,
    time_in_study_weeks,
)
from .export import (
    chart_json_bytes,
    chart_spec_from_doc,
    csv_text_to_table,
    export_chart_json,
    export_csv,
    parse_csv,
    table_to_csv_text,
)
from .svg import render_chart_svg

__all__ = [
    "Axis",
    "ChartKind",
    "ChartSpec",
    "Series",
    "SeriesAgg",
    "StudySummary",
    "SubjectStats",
    "build_daily_series",
    "build_distribution",
    "build_ecg_trace",
    "chart_json_bytes",
    "chart_spec_from_doc",
    "csv_text_to_table",
    "ecg_counts_per_subject",
    "ecg_row",
    "export_chart_json",
    "export_csv",
    "parse_agg",
    "parse_csv",
    "render_chart_svg",
    "table_to_csv_text",
    "time_in_study_weeks",
]
