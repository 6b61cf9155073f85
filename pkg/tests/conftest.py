import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from eventgraph.ingest import LogSchema, parse_log  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

THREE_CASE_SCHEMA = LogSchema(
    "Event", "Timestamps", ("EntityTypeA", "EntityTypeB", "EntityTypeC"), ("PropertyX", "PropertyY")
)
PATIENT_SCHEMA = LogSchema("Event", "Timestamps", ("Patient", "Admission"), ("EntityType",))


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture
def three_case_records():
    with open(fixture_path("three_cases.csv"), newline="") as fh:
        return parse_log(fh, THREE_CASE_SCHEMA)


@pytest.fixture
def patient_records():
    with open(fixture_path("patient_4900.csv"), newline="") as fh:
        return parse_log(fh, PATIENT_SCHEMA)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} [{status}] {name}: {detail}")
