"""Extracting a multi-entity event log from MIMIC-III shaped table exports.

Each patient's events carry two entity references, ``Patient`` (``Patient_<subject_id>``)
and ``Admission`` (the ``hadm_id``, or ``Outpatient`` when there is none),
plus an ``EntityType`` property naming the clinical process the event belongs
to: Diagnosis, Logistic, Laboratory_Measurement or Prescriptions.

Row-level problems that only invalidate one row or admission (a discharge
before admission, an unknown lab item, a prescription ending before it
starts) are appended to an ``issues`` list and the row is skipped; problems
that make the bundle unusable raise.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime

from .errors import BadTimestamp, MissingAdmitTime, MissingColumn, MissingTable, UnresolvedAdmission
from .ingest import EntityRef, EventRecord, format_timestamp, parse_timestamp

log = logging.getLogger(__name__)

OUTPATIENT = "Outpatient"

DIAGNOSIS = "Diagnosis"
LOGISTIC = "Logistic"
LABORATORY = "Laboratory_Measurement"
PRESCRIPTIONS = "Prescriptions"

# Equal-timestamp order within a patient in the assembled log.
SOURCE_PRIORITY = {DIAGNOSIS: 0, LOGISTIC: 1, LABORATORY: 2, PRESCRIPTIONS: 3}

TABLE_COLUMNS = {
    "PATIENTS": ("subject_id",),
    "ADMISSIONS": ("subject_id", "hadm_id", "admittime", "dischtime"),
    "CALLOUT": ("subject_id", "hadm_id", "createtime"),
    "SERVICES": ("subject_id", "hadm_id", "transfertime", "curr_service"),
    "ICUSTAYS": ("subject_id", "hadm_id", "intime", "first_careunit"),
    "TRANSFERS": ("subject_id", "hadm_id", "intime", "curr_wardid"),
    "D_LABITEMS": ("itemid", "label"),
    "LABEVENTS": ("subject_id", "hadm_id", "itemid", "charttime", "value", "valueuom", "flag"),
    "PRESCRIPTIONS": (
        "subject_id", "hadm_id", "startdate", "enddate", "drug",
        "dose_val_rx", "dose_unit_rx", "form_val_disp",
    ),
    "DIAGNOSES_ICD": ("subject_id", "hadm_id", "seq_id", "icd9_code"),
}

# MIMIC-III ships SEQ_NUM; accept it as seq_id.
COLUMN_ALIASES = {"seq_num": "seq_id"}

ACTIVITY = {
    "admission": "HA",
    "discharge": "Discharge",
    "ed_in": "ED Registration",
    "ed_out": "ED Discharge",
    "death": "In-hospital Death",
    "callout": "Callout",
    "service": "TBS",
    "lab_taken": "L_Taken",
    "lab_abnormal": "LAM",
}


@dataclass(frozen=True)
class ExtractionIssue:
    kind: str
    table: str
    key: str
    message: str

    def __str__(self):
        return f"{self.kind} [{self.table} {self.key}]: {self.message}"


def _report(issues, kind, table, key, message):
    issue = ExtractionIssue(kind, table, str(key), message)
    log.warning("%s", issue)
    if issues is not None:
        issues.append(issue)


@dataclass
class RelationalBundle:
    """Named tables, each a list of row dicts keyed by lower-case column name.

    ``columns`` optionally records each table's header, which matters for
    tables without rows.
    """

    tables: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)

    def rows(self, name):
        try:
            return self.tables[name]
        except KeyError:
            raise MissingTable(f"bundle has no {name} table") from None

    def validate(self):
        for name, required in TABLE_COLUMNS.items():
            rows = self.rows(name)
            columns = self.columns.get(name)
            present = set(columns) if columns is not None else (set(rows[0]) if rows else set(required))
            missing = [c for c in required if c not in present]
            if missing:
                raise MissingColumn(f"{name} lacks columns {missing}")
        admissions = {row["hadm_id"] for row in self.rows("ADMISSIONS")}
        subjects = {row["subject_id"] for row in self.rows("PATIENTS")}
        for row in self.rows("ADMISSIONS"):
            if row["subject_id"] not in subjects:
                raise UnresolvedAdmission(
                    f"admission {row['hadm_id']} references unknown subject {row['subject_id']}"
                )
        for name in TABLE_COLUMNS:
            if name in ("ADMISSIONS", "PATIENTS", "D_LABITEMS"):
                continue
            for i, row in enumerate(self.rows(name), start=1):
                hadm = row.get("hadm_id", "")
                if hadm and hadm not in admissions:
                    raise UnresolvedAdmission(f"{name} row {i} references unknown admission {hadm}")
        return self


def _normalise(header):
    names = [h.strip().lower() for h in header]
    return [COLUMN_ALIASES.get(n, n) for n in names]


def load_bundle(directory, delimiter=","):
    """Read ``<TABLE>.csv`` files from ``directory`` and validate the bundle."""
    tables, columns = {}, {}
    for name in TABLE_COLUMNS:
        path = os.path.join(directory, f"{name}.csv")
        if not os.path.exists(path):
            raise MissingTable(f"missing table file {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=delimiter)
            try:
                header = _normalise(next(reader))
            except StopIteration:
                raise MissingColumn(f"{path} has no header row") from None
            rows = [dict(zip(header, (c.strip() for c in cells))) for cells in reader if cells]
        tables[name] = rows
        columns[name] = header
    return RelationalBundle(tables, columns).validate()


def write_bundle(bundle, directory, delimiter=","):
    """Write each table to ``<TABLE>.csv`` with its columns in a fixed order."""
    os.makedirs(directory, exist_ok=True)
    for name in TABLE_COLUMNS:
        rows = bundle.rows(name)
        columns = list(bundle.columns.get(name) or [])
        if not columns:
            for row in rows:
                for col in row:
                    if col not in columns:
                        columns.append(col)
        if not columns:
            columns = list(TABLE_COLUMNS[name])
        with open(os.path.join(directory, f"{name}.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row.get(c)) for c in columns])


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, datetime):
        return value.strftime("%Y-%m-%d %H:%M:%S")
    return str(value)


def patient_id(subject_id):
    return f"Patient_{subject_id}"


def _entities(subject_id, hadm_id):
    return (EntityRef("Patient", patient_id(subject_id)), EntityRef("Admission", hadm_id or OUTPATIENT))


def _time(text, issues, table, key):
    if not text:
        _report(issues, "BadTimestamp", table, key, "missing timestamp")
        return None
    try:
        return parse_timestamp(text)
    except BadTimestamp as exc:
        _report(issues, "BadTimestamp", table, key, str(exc))
        return None


# -- diagnoses ----------------------------------------------------------


def filter_icd(codes):
    """Drop ICD-9 codes starting with 'E' (external causes) or 'V' (supplementary)."""
    return [code for code in codes if not code.startswith(("E", "V"))]


@dataclass(frozen=True)
class DiagnosisGroup:
    admission_id: str
    codes: tuple[str, ...]
    admit_time: datetime
    subject_id: str = ""


def _seq_key(row):
    seq = row.get("seq_id", "")
    try:
        return (0, int(seq))
    except ValueError:
        return (1, seq)


def diagnosis_groups(bundle, issues=None):
    """Surviving ICD-9 codes per admission, in seq_id order, admissions in table order."""
    by_hadm = {}
    for row in bundle.rows("DIAGNOSES_ICD"):
        if not row["hadm_id"]:
            _report(issues, "NoAdmission", "DIAGNOSES_ICD", row["subject_id"], "diagnosis without admission")
            continue
        by_hadm.setdefault(row["hadm_id"], []).append(row)
    groups = []
    for adm in bundle.rows("ADMISSIONS"):
        hadm = adm["hadm_id"]
        rows = by_hadm.get(hadm)
        if not rows:
            continue
        ordered = [r["icd9_code"] for r in sorted(rows, key=_seq_key) if r["icd9_code"]]
        codes = tuple(dict.fromkeys(filter_icd(ordered)))
        if not codes:
            continue
        if not adm.get("admittime"):
            raise MissingAdmitTime(hadm)
        groups.append(DiagnosisGroup(hadm, codes, parse_timestamp(adm["admittime"]), adm["subject_id"]))
    return groups


def extract_diagnosis_events(bundle, labels=None, issues=None):
    """One event per admission with at least one surviving code, at the admit time.

    The activity joins the code labels (``labels`` maps ICD-9 code to a
    short label; unmapped codes are used verbatim) with single spaces.
    """
    labels = labels or {}
    records = []
    for group in diagnosis_groups(bundle, issues):
        activity = " ".join(labels.get(code, code) for code in group.codes)
        records.append(EventRecord(
            activity,
            group.admit_time,
            _entities(group.subject_id, group.admission_id),
            {"EntityType": DIAGNOSIS, "icd9_codes": " ".join(group.codes)},
            len(records) + 1,
        ))
    return records


@dataclass(frozen=True)
class CohortRow:
    code_set: tuple[str, ...]
    frequency: int
    admission_ids: tuple[str, ...]


def cohort_table(groups):
    """Group admissions by identical code sets, most frequent first."""
    buckets = {}
    for group in groups:
        key = tuple(sorted(set(group.codes)))
        buckets.setdefault(key, []).append(group.admission_id)
    rows = [CohortRow(key, len(ids), tuple(ids)) for key, ids in buckets.items()]
    rows.sort(key=lambda r: (-r.frequency, r.code_set))
    return rows


def cohort_to_tabular(rows, delimiter=","):
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["diagnoses", "frequency", "admissions"])
    for row in rows:
        writer.writerow([" - ".join(row.code_set), row.frequency, " - ".join(row.admission_ids)])
    return out.getvalue()


# -- logistics ----------------------------------------------------------


def _by_admission(rows):
    out = {}
    for row in rows:
        out.setdefault(row.get("hadm_id", ""), []).append(row)
    return out


def _labelled(prefix, value):
    return f"{prefix} {value}" if value else prefix


def extract_logistic_events(bundle, issues=None):
    """Admission, discharge, ED, death, call-out and transfer events per admission."""
    services = _by_admission(bundle.rows("SERVICES"))
    transfers = _by_admission(bundle.rows("TRANSFERS"))
    icustays = _by_admission(bundle.rows("ICUSTAYS"))
    callouts = _by_admission(bundle.rows("CALLOUT"))
    records = []

    def emit(activity, when, subject, hadm, extra=None):
        props = {"EntityType": LOGISTIC}
        if extra:
            props.update({k: v for k, v in extra.items() if v})
        records.append(EventRecord(activity, when, _entities(subject, hadm), props, len(records) + 1))

    for adm in bundle.rows("ADMISSIONS"):
        hadm, subject = adm["hadm_id"], adm["subject_id"]
        if not adm.get("admittime"):
            raise MissingAdmitTime(hadm)
        admit = parse_timestamp(adm["admittime"])
        discharge = _time(adm.get("dischtime", ""), issues, "ADMISSIONS", hadm)
        if discharge is not None and discharge < admit:
            _report(issues, "NegativeStay", "ADMISSIONS", hadm, "discharge precedes admission")
            continue

        emit(ACTIVITY["admission"], admit, subject, hadm, {"admission_type": adm.get("admission_type")})
        for col, name in (("edregtime", "ed_in"), ("edouttime", "ed_out")):
            if adm.get(col):
                when = _time(adm[col], issues, "ADMISSIONS", hadm)
                if when is not None:
                    emit(ACTIVITY[name], when, subject, hadm)
        for row in services.get(hadm, ()):
            when = _time(row["transfertime"], issues, "SERVICES", hadm)
            if when is not None:
                emit(ACTIVITY["service"], when, subject, hadm,
                     {"prev_service": row.get("prev_service"), "curr_service": row["curr_service"]})
        for row in transfers.get(hadm, ()):
            when = _time(row["intime"], issues, "TRANSFERS", hadm)
            if when is not None:
                emit(_labelled("TIW", row["curr_wardid"]), when, subject, hadm,
                     {"careunit": row.get("curr_careunit")})
        for row in icustays.get(hadm, ()):
            when = _time(row["intime"], issues, "ICUSTAYS", hadm)
            if when is not None:
                emit(_labelled("TICU", row["first_careunit"]), when, subject, hadm,
                     {"icustay_id": row.get("icustay_id")})
        for row in callouts.get(hadm, ()):
            when = _time(row["createtime"], issues, "CALLOUT", hadm)
            if when is not None:
                emit(ACTIVITY["callout"], when, subject, hadm,
                     {"callout_service": row.get("callout_service")})
        if adm.get("hospital_expire_flag", "") in ("1", "Y", "true", "True"):
            when = _time(adm.get("deathtime") or adm.get("dischtime", ""), issues, "ADMISSIONS", hadm)
            if when is not None:
                emit(ACTIVITY["death"], when, subject, hadm)
        if discharge is not None:
            emit(ACTIVITY["discharge"], discharge, subject, hadm,
                 {"discharge_location": adm.get("discharge_location")})
    return records


# -- laboratory ---------------------------------------------------------


def is_abnormal(flag):
    return bool(flag) and flag.strip().lower() == "abnormal"


def extract_lab_events(bundle, issues=None):
    """``L_Taken`` per LABEVENTS row, plus ``LAM`` when the row is flagged abnormal."""
    items = {row["itemid"]: row["label"] for row in bundle.rows("D_LABITEMS")}
    records = []
    for i, row in enumerate(bundle.rows("LABEVENTS"), start=1):
        label = items.get(row["itemid"])
        if label is None:
            _report(issues, "UnknownItemId", "LABEVENTS", i, f"itemid {row['itemid']} not in D_LABITEMS")
            continue
        when = _time(row["charttime"], issues, "LABEVENTS", i)
        if when is None:
            continue
        props = {"EntityType": LABORATORY, "label": label}
        for col in ("value", "valueuom", "flag"):
            if row.get(col):
                props[col] = row[col]
        entities = _entities(row["subject_id"], row["hadm_id"])
        records.append(EventRecord(ACTIVITY["lab_taken"], when, entities, props, len(records) + 1))
        if is_abnormal(row["flag"]):
            records.append(EventRecord(ACTIVITY["lab_abnormal"], when, entities, dict(props), len(records) + 1))
    return records


# -- prescriptions ------------------------------------------------------


def extract_prescription_events(bundle, issues=None):
    """``Rx Start <drug>`` and ``Rx End <drug>`` per PRESCRIPTIONS row."""
    records = []
    for i, row in enumerate(bundle.rows("PRESCRIPTIONS"), start=1):
        start = _time(row["startdate"], issues, "PRESCRIPTIONS", i)
        end = _time(row["enddate"], issues, "PRESCRIPTIONS", i)
        if start is None or end is None:
            continue
        if end < start:
            _report(issues, "EndBeforeStart", "PRESCRIPTIONS", i, "prescription ends before it starts")
            continue
        props = {"EntityType": PRESCRIPTIONS, "drug": row["drug"], "rx_row": str(i)}
        for col in ("dose_val_rx", "dose_unit_rx", "form_val_disp"):
            if row.get(col):
                props[col] = row[col]
        entities = _entities(row["subject_id"], row["hadm_id"])
        records.append(EventRecord(f"Rx Start {row['drug']}", start, entities, props, len(records) + 1))
        records.append(EventRecord(f"Rx End {row['drug']}", end, entities, dict(props), len(records) + 1))
    return records


# -- assembly -----------------------------------------------------------


def _normalise_entities(rec):
    patient = rec.entity("Patient")
    if patient is None:
        raise ValueError(f"record {rec.activity!r} at {format_timestamp(rec.timestamp)} has no Patient entity")
    admission = rec.entity("Admission") or OUTPATIENT
    others = tuple(r for r in rec.entities if r.entity_type not in ("Patient", "Admission"))
    return (EntityRef("Patient", patient), EntityRef("Admission", admission)) + others


def assemble_log(*event_lists):
    """Merge per-process event lists into one log.

    Records are stably sorted by patient, timestamp, process priority
    (Diagnosis, Logistic, Laboratory_Measurement, Prescriptions), input list
    and source row, then renumbered so ``source_row`` is the position in the
    assembled log.
    """
    keyed = []
    for list_no, records in enumerate(event_lists):
        for rec in records:
            entities = _normalise_entities(rec)
            priority = SOURCE_PRIORITY.get(rec.properties.get("EntityType"), len(SOURCE_PRIORITY))
            key = (entities[0].entity_id, rec.timestamp, priority, list_no, rec.source_row)
            keyed.append((key, rec, entities))
    keyed.sort(key=lambda item: item[0])
    return [
        EventRecord(rec.activity, rec.timestamp, entities, dict(rec.properties), i)
        for i, (_, rec, entities) in enumerate(keyed, start=1)
    ]


def extract_log(bundle, labels=None, issues=None):
    """Run all four extractors and assemble their output."""
    return assemble_log(
        extract_diagnosis_events(bundle, labels, issues),
        extract_logistic_events(bundle, issues),
        extract_lab_events(bundle, issues),
        extract_prescription_events(bundle, issues),
    )
