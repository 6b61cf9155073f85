"""Reading multi-entity event logs from delimiter-separated text.

A log has one activity column, one timestamp column, one or more entity
columns (the column name is the entity type) and any number of property
columns. Empty entity cells mean the event is not correlated to that type.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime

from .errors import (
    BadTimestamp,
    EmptyActivity,
    HeaderMismatch,
    NoEntities,
    RaggedRow,
    SchemaError,
)

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"


@dataclass(frozen=True, order=True)
class EntityRef:
    entity_type: str
    entity_id: str

    def __post_init__(self):
        if not self.entity_type or not self.entity_id:
            raise ValueError(f"entity reference needs a type and an id: {self!r}")

    def __str__(self):
        return f"{self.entity_type}:{self.entity_id}"

    @classmethod
    def parse(cls, text):
        """Parse ``TYPE:ID`` (the id may itself contain colons)."""
        entity_type, sep, entity_id = text.partition(":")
        if not sep:
            raise ValueError(f"expected TYPE:ID, got {text!r}")
        return cls(entity_type.strip(), entity_id.strip())


@dataclass(frozen=True)
class EventRecord:
    activity: str
    timestamp: datetime
    entities: tuple[EntityRef, ...]
    properties: dict = field(default_factory=dict)
    source_row: int = 1

    def entity(self, entity_type):
        """Id of the referenced entity of ``entity_type``, or None."""
        for ref in self.entities:
            if ref.entity_type == entity_type:
                return ref.entity_id
        return None


@dataclass(frozen=True)
class LogSchema:
    activity_column: str
    timestamp_column: str
    entity_columns: tuple[str, ...]
    property_columns: tuple[str, ...] = ()
    delimiter: str = ","

    def __post_init__(self):
        object.__setattr__(self, "entity_columns", tuple(self.entity_columns))
        object.__setattr__(self, "property_columns", tuple(self.property_columns))
        if not self.entity_columns:
            raise SchemaError("a log schema needs at least one entity column")
        names = self.columns
        dupes = sorted(name for name, n in Counter(names).items() if n > 1)
        if dupes:
            raise SchemaError(f"duplicate column names in schema: {dupes}")
        if len(self.delimiter) != 1:
            raise SchemaError("delimiter must be a single character")

    @property
    def columns(self):
        return (
            self.activity_column,
            self.timestamp_column,
            *self.entity_columns,
            *self.property_columns,
        )

    @classmethod
    def from_header(cls, header, activity_column, timestamp_column, entity_columns, delimiter=","):
        """Schema using every header column not otherwise claimed as a property."""
        claimed = {activity_column, timestamp_column, *entity_columns}
        props = [name for name in header if name not in claimed]
        return cls(activity_column, timestamp_column, tuple(entity_columns), tuple(props), delimiter)


def parse_timestamp(text, row=None):
    """Parse a zone-less ISO 8601 timestamp with at most second precision."""
    text = text.strip()
    try:
        value = datetime.fromisoformat(text)
    except ValueError:
        raise BadTimestamp(f"cannot parse timestamp {text!r}", row) from None
    if value.tzinfo is not None:
        raise BadTimestamp(f"timezone-aware timestamps are not supported: {text!r}", row)
    if value.microsecond:
        raise BadTimestamp(f"sub-second precision is not supported: {text!r}", row)
    return value


def format_timestamp(value):
    return value.strftime(TIMESTAMP_FORMAT)


def read_header(stream, delimiter=","):
    """First row of a delimited stream, without consuming anything else."""
    reader = csv.reader(stream, delimiter=delimiter)
    try:
        return [cell.strip() for cell in next(reader)]
    except StopIteration:
        return []


def parse_log(stream, schema):
    """Parse a delimited event log into :class:`EventRecord` objects in file order.

    ``stream`` is any text stream (or a string). The header must contain
    exactly the schema's columns, in any order.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream, delimiter=schema.delimiter)
    try:
        header = [cell.strip() for cell in next(reader)]
    except StopIteration:
        raise HeaderMismatch("log is empty; expected a header row") from None

    expected = set(schema.columns)
    if len(header) != len(set(header)) or set(header) != expected:
        missing = sorted(expected - set(header))
        extra = sorted(set(header) - expected)
        raise HeaderMismatch(
            f"header {header} does not match schema (missing {missing}, unexpected {extra})"
        )
    pos = {name: i for i, name in enumerate(header)}
    i_act = pos[schema.activity_column]
    i_ts = pos[schema.timestamp_column]
    entity_pos = [(name, pos[name]) for name in schema.entity_columns]
    prop_pos = [(name, pos[name]) for name in schema.property_columns]
    width = len(header)

    records = []
    for row_no, cells in enumerate(reader, start=1):
        if not cells:
            # csv yields [] for blank lines
            continue
        if len(cells) != width:
            raise RaggedRow(f"expected {width} cells, found {len(cells)}", row_no)
        cells = [cell.strip() for cell in cells]
        activity = cells[i_act]
        if not activity:
            raise EmptyActivity("activity is empty", row_no)
        timestamp = parse_timestamp(cells[i_ts], row_no)
        entities = tuple(EntityRef(name, cells[i]) for name, i in entity_pos if cells[i])
        if not entities:
            raise NoEntities("event references no entity", row_no)
        properties = {name: cells[i] for name, i in prop_pos if cells[i]}
        records.append(EventRecord(activity, timestamp, entities, properties, len(records) + 1))
    return records


@dataclass
class ValidationReport:
    n_records: int = 0
    records_per_entity_type: dict = field(default_factory=dict)
    entities_per_type: dict = field(default_factory=dict)
    first_timestamp: datetime | None = None
    last_timestamp: datetime | None = None
    activities: tuple = ()

    def summary(self):
        lines = [f"records: {self.n_records}"]
        if self.n_records:
            lines.append(
                f"time range: {format_timestamp(self.first_timestamp)} .. "
                f"{format_timestamp(self.last_timestamp)}"
            )
        lines.append(f"distinct activities: {len(self.activities)}")
        for entity_type, count in self.records_per_entity_type.items():
            lines.append(
                f"entity type {entity_type}: {count} events, "
                f"{self.entities_per_type[entity_type]} entities"
            )
        return "\n".join(lines)


def validate_log(records):
    """Describe a record list: per-type counts, time range, distinct activities."""
    report = ValidationReport()
    per_type = {}
    ids = {}
    activities = {}
    for rec in records:
        report.n_records += 1
        activities.setdefault(rec.activity, None)
        if report.first_timestamp is None or rec.timestamp < report.first_timestamp:
            report.first_timestamp = rec.timestamp
        if report.last_timestamp is None or rec.timestamp > report.last_timestamp:
            report.last_timestamp = rec.timestamp
        for ref in rec.entities:
            per_type[ref.entity_type] = per_type.get(ref.entity_type, 0) + 1
            ids.setdefault(ref.entity_type, set()).add(ref.entity_id)
    report.records_per_entity_type = per_type
    report.entities_per_type = {t: len(v) for t, v in ids.items()}
    report.activities = tuple(activities)
    return report
