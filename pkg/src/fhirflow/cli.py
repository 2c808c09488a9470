"""Command-line pipeline: ingest, flatten, process, score, chart, serve.

CSV is the interchange format between subcommands; the schema kind rides in
a `#schema=<Kind>` comment line so each command can validate its input.
Exit codes: 0 success, 1 data or IO failure, 2 usage error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import FhirflowError
from .explore import (
    build_daily_series,
    build_distribution,
    build_ecg_trace,
    chart_json_bytes,
    ecg_counts_per_subject,
    ecg_row,
    export_csv,
    parse_agg,
    parse_csv,
    render_chart_svg,
    time_in_study_weeks,
)
from .flatten import (
    extract_user_roster,
    flatten_ecg,
    flatten_observations,
    flatten_questionnaire_responses,
)
from .model import (
    MetricKind,
    ResourceKind,
    classify_observation,
    default_registry,
    parse_metric_kind,
)
from .process import (
    MASK_KEY_ENV,
    MaskKey,
    OutlierPolicy,
    activity_index,
    aggregate_daily_mean,
    aggregate_daily_sum,
    default_score_registry,
    filter_outliers,
    mask_identifiers,
    select_date_range,
    select_users,
)
from .formatting import parse_day
from .store import FileStore, StoreQuery
from .service.app import run_service

STORE_ENV = "FHIRFLOW_STORE_PATH"
BIND_ENV = "FHIRFLOW_BIND_ADDR"

_store_option = click.option(
    "--store",
    "store_path",
    envvar=STORE_ENV,
    required=True,
    type=click.Path(path_type=Path),
    help=f"Store directory (or ${STORE_ENV}).",
)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _metric_kind(text: str) -> MetricKind:
    try:
        return parse_metric_kind(text)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


def _mask_key(hex_text: str | None) -> MaskKey:
    if not hex_text:
        raise click.UsageError(f"a mask key is required (--key or ${MASK_KEY_ENV})")
    try:
        return MaskKey.from_hex(hex_text)
    except FhirflowError as exc:
        raise click.UsageError(str(exc)) from None


def _day(text: str | None, name: str):
    if text is None:
        return None
    try:
        return parse_day(text)
    except ValueError:
        raise click.UsageError(f"--{name} must be a YYYY-MM-DD date") from None


@click.group()
@click.version_option(package_name="fhirflow")
def main() -> None:
    """FHIR health-data pipeline toolkit."""


@main.command()
@_store_option
def init(store_path: Path) -> None:
    """Create an empty store directory."""
    try:
        FileStore(store_path, create=True)
    except FhirflowError as exc:
        _fail(str(exc))
    click.echo(f"initialized store at {store_path}")


@main.command()
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@_store_option
@click.option("--allow-partial", is_flag=True, help="Exit 0 even when records were rejected.")
def ingest(source: Path, store_path: Path, allow_partial: bool) -> None:
    """Load FHIR JSON/NDJSON resources into the store."""
    try:
        report = FileStore(store_path).ingest(source)
    except FhirflowError as exc:
        _fail(str(exc))
        return
    click.echo(
        f"accepted {report.accepted}, duplicates {report.duplicates}, "
        f"rejected {len(report.rejected)}"
    )
    for location, error in report.rejected:
        click.echo(f"rejected {location}: {error}", err=True)
    if report.rejected and not allow_partial:
        sys.exit(1)


@main.command()
@click.option(
    "--kind",
    "kind_name",
    type=click.Choice(["observation", "ecg", "questionnaire", "users"]),
    required=True,
)
@_store_option
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--user", "users", multiple=True, help="Keep only these subject ids.")
@click.option("--from", "date_from", default=None, help="Keep rows on/after this date.")
@click.option("--to", "date_to", default=None, help="Keep rows on/before this date.")
def flatten(
    kind_name: str,
    store_path: Path,
    out_path: Path,
    users: tuple[str, ...],
    date_from: str | None,
    date_to: str | None,
) -> None:
    """Query the store, flatten to a table, write CSV."""
    low, high = _day(date_from, "from"), _day(date_to, "to")
    registry = default_registry()
    try:
        store = FileStore(store_path)
        if kind_name in ("observation", "ecg"):
            envelopes = store.query(
                StoreQuery(resource_kinds=frozenset({ResourceKind.OBSERVATION}))
            )
            want_ecg = kind_name == "ecg"
            picked = [
                e.payload
                for e in envelopes
                if (classify_observation(e.payload, registry).kind is MetricKind.ECG)
                == want_ecg
            ]
            table = (flatten_ecg if want_ecg else flatten_observations)(picked, registry)
        elif kind_name == "questionnaire":
            responses = [
                e.payload
                for e in store.query(
                    StoreQuery(
                        resource_kinds=frozenset({ResourceKind.QUESTIONNAIRE_RESPONSE})
                    )
                )
            ]
            definitions = [
                e.payload
                for e in store.query(
                    StoreQuery(resource_kinds=frozenset({ResourceKind.QUESTIONNAIRE}))
                )
            ]
            table = flatten_questionnaire_responses(responses, definitions)
        else:
            table = extract_user_roster(store)
        if users:
            table = select_users(table, set(users))
        if low is not None or high is not None:
            table = select_date_range(
                table,
                low or parse_day("0001-01-01"),
                high or parse_day("9999-12-31"),
            )
        written = export_csv(table, out_path)
    except FhirflowError as exc:
        _fail(str(exc))
        return
    click.echo(f"wrote {len(table)} rows ({written} bytes) to {out_path}")


@main.command()
@click.option(
    "--op",
    "op_name",
    type=click.Choice(
        ["filter-outliers", "daily-sum", "daily-mean", "activity-index", "mask"]
    ),
    required=True,
)
@click.option("--in", "in_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option(
    "--policy",
    "policy_path",
    type=click.Path(exists=True, path_type=Path),
    default=None,
    help="Outlier policy JSON (filter-outliers only).",
)
@click.option("--key", "key_hex", envvar=MASK_KEY_ENV, default=None, help="Mask key (hex).")
def process(
    op_name: str,
    in_path: Path,
    out_path: Path,
    policy_path: Path | None,
    key_hex: str | None,
) -> None:
    """Run one processing operation over a CSV table."""
    try:
        table = parse_csv(in_path)
        if op_name == "filter-outliers":
            policy = (
                OutlierPolicy.from_file(policy_path) if policy_path else OutlierPolicy()
            )
            table, removed = filter_outliers(table, policy)
            click.echo(f"removed {removed} outlier rows", err=True)
        elif op_name == "daily-sum":
            table = aggregate_daily_sum(table)
        elif op_name == "daily-mean":
            table = aggregate_daily_mean(table)
        elif op_name == "activity-index":
            table = activity_index(table)
        else:
            table = mask_identifiers(table, _mask_key(key_hex))
        written = export_csv(table, out_path)
    except FhirflowError as exc:
        _fail(str(exc))
        return
    click.echo(f"wrote {len(table)} rows ({written} bytes) to {out_path}")


@main.command()
@click.option(
    "--instrument",
    type=click.Choice(["phq9"], case_sensitive=False),
    default="phq9",
    show_default=True,
)
@click.option("--in", "in_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--allow-partial", is_flag=True, help="Exit 0 even when responses were rejected.")
def score(instrument: str, in_path: Path, out_path: Path, allow_partial: bool) -> None:
    """Score questionnaire responses from a QuestionnaireFlat CSV."""
    del instrument  # only phq9 ships; the registry handles dispatch
    try:
        table = parse_csv(in_path)
        outcome = default_score_registry().score_table(table)
        written = export_csv(outcome.to_table(), out_path)
    except FhirflowError as exc:
        _fail(str(exc))
        return
    for rejected in outcome.rejected:
        click.echo(f"rejected {rejected.resource_id}: {rejected.reason}", err=True)
    click.echo(f"wrote {len(outcome.rows)} scores ({written} bytes) to {out_path}")
    if outcome.rejected and not allow_partial:
        sys.exit(1)


def _parse_window(text: str | None) -> tuple[float, float] | None:
    if text is None:
        return None
    try:
        start, _, end = text.partition(":")
        return float(start), float(end)
    except ValueError:
        raise click.UsageError("--window must be START:END in seconds") from None


@main.command()
@click.option(
    "--kind",
    "kind_name",
    type=click.Choice(
        ["daily", "distribution", "ecg-counts", "time-in-study", "ecg-trace"]
    ),
    required=True,
)
@click.option("--in", "in_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--metric", "metric_name", default="steps", show_default=True)
@click.option("--agg", "agg_name", default="sum", show_default=True)
@click.option("--user", "users", multiple=True)
@click.option("--resource", "resource_id", default=None, help="Recording id (ecg-trace).")
@click.option("--window", "window_text", default=None, help="Time slice START:END seconds.")
def chart(
    kind_name: str,
    in_path: Path,
    out_path: Path,
    metric_name: str,
    agg_name: str,
    users: tuple[str, ...],
    resource_id: str | None,
    window_text: str | None,
) -> None:
    """Build a chart from a CSV table; emit SVG or chart JSON by extension."""
    try:
        agg = parse_agg(agg_name)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    window = _parse_window(window_text)
    try:
        table = parse_csv(in_path)
        if kind_name == "daily":
            spec = build_daily_series(
                table, _metric_kind(metric_name), agg, users=set(users) or None
            )
        elif kind_name == "distribution":
            spec = build_distribution(table, _metric_kind(metric_name))
        elif kind_name == "ecg-counts":
            _, spec = ecg_counts_per_subject(table)
        elif kind_name == "time-in-study":
            _, spec = time_in_study_weeks(table)
        else:
            if resource_id is None:
                raise click.UsageError("--resource is required for ecg-trace")
            spec = build_ecg_trace(ecg_row(table, resource_id), window)
        if out_path.suffix.lower() == ".json":
            data = chart_json_bytes(spec)
        else:
            data = render_chart_svg(spec)
        out_path.write_bytes(data)
    except KeyError as exc:
        _fail(f"unknown resource: {exc}")
        return
    except FhirflowError as exc:
        _fail(str(exc))
        return
    click.echo(f"wrote {len(data)} bytes to {out_path}")


@main.command()
@_store_option
@click.option("--bind", envvar=BIND_ENV, default="127.0.0.1:8000", show_default=True)
@click.option("--key", "key_hex", envvar=MASK_KEY_ENV, default=None, help="Mask key (hex).")
@click.option("--cors", "cors_origins", multiple=True, help="Allowed UI origins.")
def serve(store_path: Path, bind: str, key_hex: str | None, cors_origins: tuple[str, ...]) -> None:
    """Run the clinician review service."""
    key = _mask_key(key_hex)
    try:
        run_service(store_path, key, bind, cors_origins=list(cors_origins) or None)
    except FhirflowError as exc:
        _fail(str(exc))


@main.command()
@_store_option
def reindex(store_path: Path) -> None:
    """Rebuild the store index from the data files."""
    try:
        count = FileStore(store_path).reindex()
    except FhirflowError as exc:
        _fail(str(exc))
        return
    click.echo(f"indexed {count} resources")


if __name__ == "__main__":
    main()
