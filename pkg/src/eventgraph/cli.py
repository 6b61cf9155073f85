"""Command-line pipeline: synth -> extract -> build -> discover, plus cohort.

Each subcommand reads files and writes one output (``--out``, default
stdout). Errors are reported on stderr as a single JSON object with
``error`` and ``message`` keys and a non-zero exit status.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import dfg, export, mimic, synth
from .builder import build_all
from .config import (
    build_config,
    icd_labels,
    log_schema,
    palette,
    read_config,
    schema_settings,
    synth_params,
)
from .errors import EventGraphError
from .ingest import EntityRef, parse_log, read_header, validate_log

EXIT_ERROR = 1


class BadFlag(EventGraphError):
    pass


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def _config(path, default_section):
    return read_config(path, default_section) if path else None


def cmd_synth(args):
    overrides = []
    for item in args.rate or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise BadFlag(f"--rate expects NAME=VALUE, got {item!r}")
        overrides.append((name.strip(), value.strip()))
    params = synth_params(_config(args.config, "synth"), overrides)
    bundle = synth.generate_bundle(args.seed, args.patients, params)
    mimic.write_bundle(bundle, args.out)
    counts = ", ".join(f"{name}={len(bundle.rows(name))}" for name in mimic.TABLE_COLUMNS)
    print(f"wrote bundle to {args.out}: {counts}", file=sys.stderr)


def cmd_extract(args):
    parser = _config(args.config, "icd_labels")
    bundle = mimic.load_bundle(args.bundle_dir)
    issues = []
    records = mimic.extract_log(bundle, icd_labels(parser), issues)
    if not records:
        raise EventGraphError("bundle produced no events")
    _write(args.out, export.log_to_tabular(records))
    report = validate_log(records)
    print(report.summary(), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    for issue in issues:
        print(f"issue: {issue}", file=sys.stderr)


def _schema_parser(args):
    if args.schema:
        return read_config(args.schema, "schema")
    return _config(args.config, "schema")


def cmd_build(args):
    parser = _schema_parser(args)
    with open(args.log_file, newline="", encoding="utf-8") as fh:
        header = read_header(fh, schema_settings(parser)[4])
        fh.seek(0)
        schema = log_schema(parser, header)
        records = parse_log(fh, schema)
    config = build_config(_config(args.config, "build"))
    graph = build_all(records, config)
    _write(args.out, export.graph_to_json(graph))


def cmd_discover(args):
    with open(args.graph_json, encoding="utf-8") as fh:
        graph = export.graph_from_json(fh.read())
    entity_types = None
    if args.entity_types is not None:
        entity_types = {t.strip() for t in args.entity_types.split(",") if t.strip()}
    if args.level == "class":
        if args.case:
            raise BadFlag("--case applies to --level instance only")
        view = dfg.project_class_dfg(graph, entity_types, classifier=args.classifier)
        if args.min_count is not None:
            view = dfg.filter_dfg(view, args.min_count)
    else:
        if not args.case:
            raise BadFlag("--level instance requires --case TYPE:ID")
        try:
            case = EntityRef.parse(args.case)
        except ValueError as exc:
            raise BadFlag(str(exc)) from None
        view = dfg.project_instance_dfg(graph, case, entity_types)
        if args.min_count is not None:
            view = dfg.filter_dfg(view, args.min_count)
    colours = palette(_config(args.config, "palette"), export.DEFAULT_PALETTE)
    _write(args.out, export.to_dot(view, colours))


def cmd_cohort(args):
    bundle = mimic.load_bundle(args.bundle_dir)
    rows = mimic.cohort_table(mimic.diagnosis_groups(bundle))
    _write(args.out, mimic.cohort_to_tabular(rows))


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {value}")
    return value


def make_parser():
    parser = argparse.ArgumentParser(prog="eventgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic MIMIC-shaped bundle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patients", type=_positive, default=20)
    p.add_argument("--rate", action="append", metavar="NAME=VALUE", help="override one generator rate")
    p.add_argument("--config", help="configuration file ([synth] section)")
    p.add_argument("--out", required=True, help="directory for the table files")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract the multi-entity event log from a bundle")
    p.add_argument("bundle_dir")
    p.add_argument("--config", help="configuration file ([icd_labels] section)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("build", help="build the event graph from a log")
    p.add_argument("log_file")
    p.add_argument("--schema", help="schema file ([schema] keys)")
    p.add_argument("--config", help="configuration file ([schema] and [build] sections)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("discover", help="project a directly-follows graph and write DOT")
    p.add_argument("graph_json")
    p.add_argument("--level", choices=("instance", "class"), default="class")
    p.add_argument("--case", metavar="TYPE:ID")
    p.add_argument("--entity-types", metavar="T1,T2")
    p.add_argument("--min-count", type=_positive)
    p.add_argument("--classifier", default="activity", help="event class classifier (class level)")
    p.add_argument("--config", help="configuration file ([palette] section)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("cohort", help="group admissions by diagnosis code set")
    p.add_argument("bundle_dir")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cohort)
    return parser


def _fail(kind, message):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return EXIT_ERROR


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code else 0
    try:
        args.func(args)
    except EventGraphError as exc:
        return _fail(type(exc).__name__, str(exc))
    except FileNotFoundError as exc:
        return _fail("FileNotFound", f"{exc.filename}: {exc.strerror}")
    except (IsADirectoryError, NotADirectoryError, PermissionError) as exc:
        return _fail(type(exc).__name__, str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
