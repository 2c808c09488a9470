"""Table and chart serialization.

CSV files carry a `#schema=<Kind>` comment line, then an RFC-4180 body with
the schema's exact column order, UTF-8, LF line endings. Waveform cells are
always quoted: space-separated decimals with E/L/U letters for missing
markers. ``parse_csv`` is the exact inverse of ``export_csv``.

Chart JSON is canonical (sorted keys, compact separators), so equal specs
serialize to equal bytes.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import IO, Any

from ..errors import IoFailure, SchemaViolation, WrongSchema
from ..formatting import format_decimal, format_instant, parse_day, parse_instant
from ..model import canonical_json
from ..model.waveform import SpecialToken
from ..table import CellType, FlatTable, SchemaKind
from .charts import Axis, ChartKind, ChartSpec, Series

SCHEMA_PREFIX = "#schema="

_SPECIAL_LETTERS = {token.value for token in SpecialToken}


def _quote(cell: str, force: bool = False) -> str:
    if force or any(ch in cell for ch in (',', '"', "\n", "\r")):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def _waveform_text(samples: tuple) -> str:
    tokens = [
        sample.value if isinstance(sample, SpecialToken) else format_decimal(sample)
        for sample in samples
    ]
    return " ".join(tokens)


def _cell_text(value: Any, cell_type: CellType) -> tuple[str, bool]:
    """(serialized text, force quoting)."""
    if cell_type is CellType.STRING:
        return value, False
    if value is None:
        return "", False
    if cell_type is CellType.DECIMAL:
        return format_decimal(value), False
    if cell_type is CellType.INTEGER:
        return str(value), False
    if cell_type is CellType.TIMESTAMP:
        return format_instant(value), False
    if cell_type is CellType.DATE:
        return value.isoformat(), False
    return _waveform_text(value), True


def table_to_csv_text(table: FlatTable) -> str:
    lines = [SCHEMA_PREFIX + table.schema_kind.value]
    lines.append(",".join(_quote(column.name) for column in table.columns))
    for row in table:
        lines.append(
            ",".join(
                _quote(*_cell_text(cell, column.cell_type))
                for cell, column in zip(row, table.columns)
            )
        )
    return "\n".join(lines) + "\n"


def export_csv(table: FlatTable, destination: str | Path | IO[bytes]) -> int:
    """Write the table as CSV; returns the byte count written."""
    data = table_to_csv_text(table).encode("utf-8")
    try:
        if isinstance(destination, (str, Path)):
            Path(destination).write_bytes(data)
        else:
            destination.write(data)
    except OSError as exc:
        raise IoFailure(f"cannot write CSV: {exc}") from exc
    return len(data)


def _parse_waveform(text: str, where: str) -> tuple:
    samples: list = []
    for index, token in enumerate(text.split()):
        if token in _SPECIAL_LETTERS:
            samples.append(SpecialToken(token))
        else:
            try:
                samples.append(float(token))
            except ValueError:
                raise SchemaViolation(where, f"bad waveform token [{index}]: {token!r}")
    if not samples:
        raise SchemaViolation(where, "waveform cell must not be an empty string")
    return tuple(samples)


def _cell_value(text: str, cell_type: CellType, where: str) -> Any:
    if cell_type is CellType.STRING:
        return text
    if text == "":
        return None
    try:
        if cell_type is CellType.DECIMAL:
            return float(text)
        if cell_type is CellType.INTEGER:
            return int(text)
        if cell_type is CellType.TIMESTAMP:
            return parse_instant(text)
        if cell_type is CellType.DATE:
            return parse_day(text)
    except ValueError as exc:
        raise SchemaViolation(where, f"bad {cell_type.value} cell: {text!r}") from exc
    return _parse_waveform(text, where)


def csv_text_to_table(text: str) -> FlatTable:
    # split("\n") rather than splitlines(): the latter also breaks on
    # characters like \x1e that are legitimate cell content
    lines = text.split("\n")
    if not lines or not lines[0].startswith(SCHEMA_PREFIX):
        raise WrongSchema(f"first line must be {SCHEMA_PREFIX}<kind>")
    kind_name = lines[0][len(SCHEMA_PREFIX):].strip()
    try:
        kind = SchemaKind(kind_name)
    except ValueError:
        raise WrongSchema(f"unknown schema kind {kind_name!r}") from None

    reader = csv.reader(io.StringIO("\n".join(lines[1:])))
    records = list(reader)
    if not records:
        raise WrongSchema("missing header row")
    expected = [column.name for column in FlatTable(kind).columns]
    if records[0] != expected:
        raise WrongSchema(
            f"header mismatch for {kind.value}: expected {expected}, got {records[0]}"
        )
    columns = FlatTable(kind).columns
    rows = []
    for number, record in enumerate(records[1:], start=3):
        if len(record) != len(columns):
            raise SchemaViolation(
                f"line {number}", f"expected {len(columns)} cells, got {len(record)}"
            )
        rows.append(
            tuple(
                _cell_value(cell, column.cell_type, f"line {number}, {column.name}")
                for cell, column in zip(record, columns)
            )
        )
    try:
        return FlatTable(kind, tuple(rows))
    except ValueError as exc:
        raise SchemaViolation("", str(exc)) from exc


def parse_csv(source: str | Path | IO[bytes]) -> FlatTable:
    """Inverse of export_csv."""
    try:
        if isinstance(source, (str, Path)):
            text = Path(source).read_text(encoding="utf-8")
        else:
            text = source.read().decode("utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read CSV: {exc}") from exc
    return csv_text_to_table(text)


def chart_json_bytes(spec: ChartSpec) -> bytes:
    return canonical_json(spec.to_json_doc()).encode("utf-8")


def export_chart_json(spec: ChartSpec, destination: str | Path | IO[bytes]) -> int:
    """Write canonical chart JSON; returns the byte count written."""
    data = chart_json_bytes(spec)
    try:
        if isinstance(destination, (str, Path)):
            Path(destination).write_bytes(data)
        else:
            destination.write(data)
    except OSError as exc:
        raise IoFailure(f"cannot write chart JSON: {exc}") from exc
    return len(data)


def chart_spec_from_doc(doc: dict) -> ChartSpec:
    """Rebuild a ChartSpec from its JSON document form."""
    return ChartSpec(
        kind=ChartKind(doc["kind"]),
        title=doc["title"],
        x_axis=Axis(doc["xAxis"]["label"], doc["xAxis"].get("unit", "")),
        y_axis=Axis(doc["yAxis"]["label"], doc["yAxis"].get("unit", "")),
        series=tuple(
            Series(
                name=series["name"],
                points=tuple((point["x"], point["y"]) for point in series["points"]),
            )
            for series in doc["series"]
        ),
        sampling_frequency_hz=doc.get("samplingFrequencyHz"),
        annotations=tuple(doc.get("annotations", ())),
    )
