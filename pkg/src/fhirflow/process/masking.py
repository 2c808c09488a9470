"""Deterministic identifier masking.

Pseudonyms are the first 10 hex characters of an HMAC-SHA256 over the
identifier, so equal ids map to equal pseudonyms under one key and to
unrelated pseudonyms under different keys. The full digest can be captured
in an audit map for authorized re-identification.
"""

from __future__ import annotations

import hmac
import os
from dataclasses import dataclass
from hashlib import sha256

from ..errors import WeakKey
from ..table import FlatTable

PSEUDONYM_LENGTH = 10
MASK_KEY_ENV = "FHIRFLOW_MASK_KEY"

# Provenance entries keyed by resource id; their keys are masked too.
_KEYED_PROVENANCE = ("intervalEnds", "rowCounts", "partialWindows")


@dataclass(frozen=True)
class MaskKey:
    secret: bytes

    def __post_init__(self):
        if len(self.secret) < 16:
            raise WeakKey(f"mask key must be >= 16 bytes, got {len(self.secret)}")

    @classmethod
    def from_hex(cls, text: str) -> "MaskKey":
        try:
            return cls(bytes.fromhex(text.strip()))
        except ValueError as exc:
            raise WeakKey(f"mask key is not valid hex: {exc}") from exc

    @classmethod
    def from_env(cls, name: str = MASK_KEY_ENV) -> "MaskKey":
        value = os.environ.get(name)
        if not value:
            raise WeakKey(f"environment variable {name} is not set")
        return cls.from_hex(value)


def full_digest(key: MaskKey, identifier: str) -> str:
    return hmac.new(key.secret, identifier.encode("utf-8"), sha256).hexdigest()


def pseudonymize(key: MaskKey, identifier: str) -> str:
    return full_digest(key, identifier)[:PSEUDONYM_LENGTH]


def mask_identifiers(
    table: FlatTable, key: MaskKey, audit: dict[str, str] | None = None
) -> FlatTable:
    """Replace userId (and resourceId, where present) cells by pseudonyms.

    When ``audit`` is given it collects pseudonym -> original id mappings.
    All other cells are untouched; row count and schema are preserved.
    """
    id_columns = [table.column_index("userId")]
    if "resourceId" in table.column_names:
        id_columns.append(table.column_index("resourceId"))

    def masked(identifier: str) -> str:
        pseudonym = pseudonymize(key, identifier)
        if audit is not None:
            audit[pseudonym] = identifier
        return pseudonym

    rows = []
    for row in table:
        cells = list(row)
        for at in id_columns:
            cells[at] = masked(cells[at])
        rows.append(tuple(cells))

    provenance = dict(table.provenance)
    for entry in _KEYED_PROVENANCE:
        if entry in provenance and isinstance(provenance[entry], dict):
            provenance[entry] = {
                masked(resource_id): value
                for resource_id, value in provenance[entry].items()
            }
    provenance["masked"] = True
    return FlatTable(table.schema_kind, tuple(rows), provenance)
