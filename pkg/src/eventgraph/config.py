"""Key-value configuration files.

Files use INI syntax. A file without any section header is read as if its
keys belonged to the caller's default section, so a schema file may be as
short as::

    activity = Activity
    timestamp = Timestamp
    entities = Patient, Admission

Sections understood elsewhere: ``[schema]``, ``[build]``, ``[icd_labels]``,
``[palette]`` and ``[synth]``.
"""

from __future__ import annotations

import configparser
import re

from .builder import BuildConfig
from .errors import SchemaError
from .ingest import LogSchema
from .synth import SynthParams

_SECTION = re.compile(r"^\s*\[[^\]]+\]", re.MULTILINE)


def read_config(path, default_section="schema"):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, default_section)


def parse_config(text, default_section="schema"):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    first = _SECTION.search(text)
    head = text[: first.start()] if first else text
    if any(line.strip() and not line.lstrip().startswith(("#", ";")) for line in head.splitlines()):
        text = f"[{default_section}]\n{text}"
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SchemaError(f"cannot read configuration: {exc}") from None
    return parser


def _list(value):
    return tuple(item.strip() for item in value.split(",") if item.strip())


def _bool(value):
    value = value.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise SchemaError(f"not a boolean: {value!r}")


def section(parser, name):
    return dict(parser[name]) if parser is not None and parser.has_section(name) else {}


def schema_settings(parser):
    """``(activity, timestamp, entities, properties or None, delimiter)`` from ``[schema]``."""
    values = section(parser, "schema")
    entities = _list(values.get("entities", "Patient, Admission"))
    props = values.get("properties")
    delimiter = values.get("delimiter", ",")
    if delimiter in ("\\t", "tab"):
        delimiter = "\t"
    return (
        values.get("activity", "Activity"),
        values.get("timestamp", "Timestamp"),
        entities,
        None if props is None else _list(props),
        delimiter,
    )


def log_schema(parser, header=None):
    """Build a :class:`LogSchema`; without explicit properties the rest of ``header`` is used."""
    activity, timestamp, entities, props, delimiter = schema_settings(parser)
    if props is None:
        if header is None:
            raise SchemaError("schema lists no properties and no header was given")
        return LogSchema.from_header(header, activity, timestamp, entities, delimiter)
    return LogSchema(activity, timestamp, entities, props, delimiter)


def build_config(parser):
    values = section(parser, "build")
    kwargs = {}
    if values.get("entity_types", "").strip():
        kwargs["entity_types"] = _list(values["entity_types"])
    if "reify" in values:
        pairs = []
        for item in _list(values["reify"]):
            a, sep, b = item.partition(":")
            if not sep:
                raise SchemaError(f"reify pair must look like TYPE:TYPE, got {item!r}")
            pairs.append((a.strip(), b.strip()))
        kwargs["reify_pairs"] = tuple(pairs)
    if "reify_exclude_ids" in values:
        kwargs["reify_exclude_ids"] = _list(values["reify_exclude_ids"])
    if "property_classes" in values:
        kwargs["property_classes"] = _bool(values["property_classes"])
    if "property_classifier" in values:
        kwargs["property_classifier"] = values["property_classifier"].strip()
    try:
        return BuildConfig(**kwargs)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def icd_labels(parser):
    return section(parser, "icd_labels")


def palette(parser, base):
    merged = dict(base)
    merged.update(section(parser, "palette"))
    return merged


def synth_params(parser, overrides=()):
    values = section(parser, "synth")
    values.update(dict(overrides))
    known = set(SynthParams.__dataclass_fields__)
    unknown = sorted(set(values) - known)
    if unknown:
        raise SchemaError(f"unknown synth parameters: {unknown}")
    try:
        return SynthParams(**{k: float(v) for k, v in values.items()})
    except ValueError as exc:
        raise SchemaError(f"bad synth parameter: {exc}") from None
