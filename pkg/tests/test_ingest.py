import io
from collections import Counter
from datetime import datetime

import pytest

from eventgraph.errors import BadTimestamp, EmptyActivity, HeaderMismatch, NoEntities, RaggedRow, SchemaError
from eventgraph.ingest import EntityRef, EventRecord, LogSchema, parse_log, validate_log
from eventgraph.synth import random_log

from conftest import THREE_CASE_SCHEMA, fixture_path


def test_three_case_row_with_blank_entity(three_case_records):
    rec = three_case_records[1]
    assert rec.activity == "b"
    assert rec.timestamp == datetime(2013, 10, 30, 7, 0, 0)
    assert rec.entities == (EntityRef("EntityTypeA", "1"), EntityRef("EntityTypeC", "Origin 4"))
    assert rec.properties == {"PropertyX": "X4", "PropertyY": "Y4"}
    assert rec.source_row == 2
    assert len(three_case_records) == 11


def test_patient_4900_row(patient_records):
    rec = patient_records[5]
    assert rec.activity == "HA"
    assert rec.timestamp == datetime(2013, 10, 29, 6, 0, 0)
    assert rec.entities == (EntityRef("Patient", "Patient_4900"), EntityRef("Admission", "174010"))
    assert rec.properties == {"EntityType": "Logistic"}


def test_outpatient_is_a_regular_entity_id(patient_records):
    assert patient_records[0].entity("Admission") == "Outpatient"


def test_spaces_after_delimiters_are_ignored():
    text = "Event,Timestamps,EntityTypeA,EntityTypeB,EntityTypeC,PropertyX,PropertyY\n" \
           "b, 2013-10-30T07:00:00, 1, , Origin 4, X4, Y4\n"
    (rec,) = parse_log(text, THREE_CASE_SCHEMA)
    assert rec.entities == (EntityRef("EntityTypeA", "1"), EntityRef("EntityTypeC", "Origin 4"))


def test_all_entity_cells_empty():
    text = "Event,Timestamps,EntityTypeA,EntityTypeB,EntityTypeC,PropertyX,PropertyY\n" \
           "a,2013-10-29T05:00:00,1,,,X,Y\n" \
           "b,2013-10-29T05:00:00,,,,X,Y\n"
    with pytest.raises(NoEntities) as err:
        parse_log(text, THREE_CASE_SCHEMA)
    assert err.value.row == 2


def test_header_mismatch():
    with pytest.raises(HeaderMismatch):
        parse_log("Event,Time,EntityTypeA\n", THREE_CASE_SCHEMA)
    with pytest.raises(HeaderMismatch):
        parse_log("", THREE_CASE_SCHEMA)


def test_header_columns_may_be_reordered():
    schema = LogSchema("act", "ts", ("case",))
    (rec,) = parse_log("case,ts,act\nc1,2013-01-01T00:00:00,x\n", schema)
    assert (rec.activity, rec.entities[0].entity_id) == ("x", "c1")


@pytest.mark.parametrize("stamp", ["yesterday", "2013-10-29T05:00:00+01:00", "2013-10-29T05:00:00.5"])
def test_bad_timestamps(stamp):
    schema = LogSchema("act", "ts", ("case",))
    with pytest.raises(BadTimestamp) as err:
        parse_log(f"act,ts,case\nx,{stamp},c\n", schema)
    assert err.value.row == 1


def test_space_separated_timestamp_accepted():
    schema = LogSchema("act", "ts", ("case",))
    (rec,) = parse_log("act,ts,case\nx,2013-10-29 05:00:00,c\n", schema)
    assert rec.timestamp == datetime(2013, 10, 29, 5)


def test_ragged_row():
    schema = LogSchema("act", "ts", ("case",))
    with pytest.raises(RaggedRow):
        parse_log("act,ts,case\nx,2013-10-29T05:00:00\n", schema)


def test_empty_activity():
    schema = LogSchema("act", "ts", ("case",))
    with pytest.raises(EmptyActivity):
        parse_log("act,ts,case\n,2013-10-29T05:00:00,c\n", schema)


def test_quoted_labels_and_custom_delimiter():
    schema = LogSchema("act", "ts", ("case",), delimiter=";")
    (rec,) = parse_log('act;ts;case\n"CA; DM";2013-10-29T05:00:00;c\n', schema)
    assert rec.activity == "CA; DM"


def test_order_is_file_order_not_time_order(patient_records):
    assert [r.source_row for r in patient_records] == [1, 2, 3, 4, 5, 6]
    assert patient_records[3].activity == "TBS"


@pytest.mark.parametrize("kwargs", [
    {"entity_columns": ()},
    {"entity_columns": ("act",)},
    {"entity_columns": ("a",), "delimiter": "::"},
])
def test_invalid_schemas(kwargs):
    base = {"activity_column": "act", "timestamp_column": "ts", "entity_columns": ("case",)}
    base.update(kwargs)
    with pytest.raises(SchemaError):
        LogSchema(**base)


def test_validate_empty():
    report = validate_log([])
    assert report.n_records == 0
    assert report.activities == ()
    assert report.first_timestamp is None


def test_validate_patient_4900(patient_records):
    report = validate_log(patient_records)
    assert set(report.activities) == {"L_Taken", "LAM", "CA DM HL HT", "TBS", "TIW 27", "HA"}
    assert report.records_per_entity_type == {"Patient": 6, "Admission": 6}
    assert report.entities_per_type == {"Patient": 1, "Admission": 3}
    assert report.first_timestamp == datetime(2013, 10, 1, 8)
    assert report.last_timestamp == datetime(2013, 10, 31, 7)


def test_validate_counts_match_recount():
    records = random_log(5, 100)
    report = validate_log(records)
    tally = Counter(ref.entity_type for rec in records for ref in rec.entities)
    assert report.records_per_entity_type == dict(tally)
    assert report.n_records == 100


def test_validate_does_not_mutate():
    records = random_log(6, 20)
    before = [EventRecord(r.activity, r.timestamp, r.entities, dict(r.properties), r.source_row) for r in records]
    validate_log(records)
    assert records == before


def test_entity_ref_parse():
    assert EntityRef.parse("Admission:115281") == EntityRef("Admission", "115281")
    assert EntityRef.parse("Patient|Admission:P|1").entity_id == "P|1"
    with pytest.raises(ValueError):
        EntityRef.parse("nocolon")
    with pytest.raises(ValueError):
        EntityRef("", "x")


def test_string_and_stream_inputs_agree(three_case_records):
    with open(fixture_path("three_cases.csv"), newline="") as fh:
        text = fh.read()
    assert parse_log(text, THREE_CASE_SCHEMA) == parse_log(io.StringIO(text), THREE_CASE_SCHEMA) == three_case_records
