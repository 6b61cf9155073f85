"""Seeded generator of small MIMIC-III shaped bundles and generic event logs.

Everything is drawn from one ``random.Random(seed)`` stream in a fixed
order, so the same ``(seed, n_patients, params)`` always yields the same
bundle. No wall clock or OS entropy is consulted.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timedelta

from .errors import BadRate
from .ingest import EntityRef, EventRecord
from .mimic import TABLE_COLUMNS, RelationalBundle

EPOCH = datetime(2101, 1, 1)

# Neonatal cohort codes first so cohort grouping produces recognisable keys.
ICD_CODES = (
    "7746", "7661", "7706", "76519", "76528", "77089",
    "41401", "25000", "2720", "4019", "4280", "42731", "2449", "2724",
)
ICD_WEIGHTS = (8, 6, 5, 4, 4, 3, 6, 5, 4, 6, 3, 3, 2, 2)
EV_CODES = ("E8889", "V3000", "V4581", "E8782")

LAB_ITEMS = (
    ("50862", "Albumin", "g/dL", (2.0, 5.5)),
    ("50912", "Creatinine", "mg/dL", (0.4, 3.0)),
    ("51222", "Hemoglobin", "g/dL", (7.0, 17.0)),
    ("50971", "Potassium", "mEq/L", (2.8, 6.0)),
    ("50983", "Sodium", "mEq/L", (125.0, 150.0)),
    ("51301", "White Blood Cells", "K/uL", (2.0, 18.0)),
)
DRUGS = (
    ("Aspirin", "81", "mg", "1"),
    ("Metoprolol", "25", "mg", "1"),
    ("Insulin", "10", "UNIT", "10"),
    ("Furosemide", "40", "mg", "1"),
    ("Heparin", "5000", "UNIT", "1"),
    ("Atorvastatin", "40", "mg", "1"),
)
SERVICES = ("MED", "CMED", "CSURG", "NB", "NBB", "SURG")
CAREUNITS = ("MICU", "CCU", "CSRU", "NICU", "SICU")
WARDS = ("12", "15", "23", "27", "33", "52")

MAX_CODES = 5
MAX_ADMISSIONS = 4
STAY_SLOTS = 3
LAB_SLOTS = 6
OUTPATIENT_SLOTS = 3
RX_SLOTS = 4


@dataclass(frozen=True)
class SynthParams:
    """Probabilities in [0, 1]; all zero gives one admission with one diagnosis."""

    morbidity_rate: float = 0.6
    readmission_rate: float = 0.45
    ev_code_rate: float = 0.2
    ed_rate: float = 0.5
    service_rate: float = 0.4
    transfer_rate: float = 0.5
    icu_rate: float = 0.3
    callout_rate: float = 0.3
    death_rate: float = 0.05
    lab_rate: float = 0.5
    abnormal_rate: float = 0.35
    outpatient_lab_rate: float = 0.35
    prescription_rate: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                raise BadRate(f"{f.name} must be a number in [0, 1], got {value!r}")

    @classmethod
    def zero(cls):
        return cls(**{f.name: 0.0 for f in fields(cls)})

    def as_dict(self):
        return asdict(self)


def _ts(value):
    return value.strftime("%Y-%m-%d %H:%M:%S")


def _count(rng, rate, slots):
    return sum(1 for _ in range(slots) if rng.random() < rate)


def generate_bundle(seed, n_patients, params=None):
    """Generate a validated :class:`~eventgraph.mimic.RelationalBundle`."""
    if isinstance(n_patients, bool) or not isinstance(n_patients, int) or n_patients < 1:
        raise ValueError(f"n_patients must be a positive integer, got {n_patients!r}")
    params = params or SynthParams()
    rng = random.Random(seed)
    tables = {name: [] for name in TABLE_COLUMNS}
    columns = {
        "PATIENTS": ["subject_id", "gender", "dob", "dod", "expire_flag"],
        "ADMISSIONS": [
            "subject_id", "hadm_id", "admittime", "dischtime", "deathtime", "admission_type",
            "discharge_location", "edregtime", "edouttime", "hospital_expire_flag",
        ],
        "CALLOUT": ["subject_id", "hadm_id", "createtime", "callout_service"],
        "SERVICES": ["subject_id", "hadm_id", "transfertime", "prev_service", "curr_service"],
        "ICUSTAYS": ["subject_id", "hadm_id", "icustay_id", "first_careunit", "intime", "outtime"],
        "TRANSFERS": [
            "subject_id", "hadm_id", "icustay_id", "eventtype", "curr_careunit", "curr_wardid",
            "intime", "outtime",
        ],
        "D_LABITEMS": ["itemid", "label", "fluid"],
        "LABEVENTS": ["subject_id", "hadm_id", "itemid", "charttime", "value", "valueuom", "flag"],
        "PRESCRIPTIONS": [
            "subject_id", "hadm_id", "startdate", "enddate", "drug", "dose_val_rx", "dose_unit_rx",
            "form_val_disp",
        ],
        "DIAGNOSES_ICD": ["subject_id", "hadm_id", "seq_id", "icd9_code"],
    }
    for itemid, label, _, _ in LAB_ITEMS:
        tables["D_LABITEMS"].append({"itemid": itemid, "label": label, "fluid": "Blood"})

    hadm_counter = 100000
    icu_counter = 200000
    for p in range(n_patients):
        subject = str(p + 1)
        n_adm = 1
        while n_adm < MAX_ADMISSIONS and rng.random() < params.readmission_rate:
            n_adm += 1
        clock = EPOCH + timedelta(days=rng.randrange(0, 3650), seconds=rng.randrange(0, 86400))
        dob = clock - timedelta(days=rng.randrange(0, 30000))
        died = False

        for a in range(n_adm):
            hadm_counter += 1
            hadm = str(hadm_counter)
            gap = timedelta(days=rng.randrange(10, 200), seconds=rng.randrange(0, 86400))
            prev_end = clock
            admit = clock + gap if a else clock

            # outpatient labs between the previous stay (or the lookback window) and this admission
            for _ in range(_count(rng, params.outpatient_lab_rate, OUTPATIENT_SLOTS)):
                lo = prev_end if a else admit - timedelta(days=30)
                span = max(1, int((admit - lo).total_seconds()) - 1)
                _lab_row(rng, params, tables, subject, "", lo + timedelta(seconds=rng.randrange(1, span + 1)))

            los = rng.randrange(2 * 3600 + 600, 20 * 86400)
            discharge = admit + timedelta(seconds=los)
            n_ed = 2 if rng.random() < params.ed_rate else 0
            n_srv = _count(rng, params.service_rate, STAY_SLOTS)
            n_trf = _count(rng, params.transfer_rate, STAY_SLOTS)
            n_icu = _count(rng, params.icu_rate, 1)
            n_call = _count(rng, params.callout_rate, 1)
            last = a == n_adm - 1
            dies = last and rng.random() < params.death_rate
            n_internal = n_ed + n_srv + n_trf + n_icu + n_call + (1 if dies else 0)
            offsets = sorted(rng.sample(range(60, los - 60), n_internal))
            times = iter(admit + timedelta(seconds=s) for s in offsets)

            edreg = edout = ""
            if n_ed:
                edreg, edout = _ts(next(times)), _ts(next(times))
            prev_service = ""
            for _ in range(n_srv):
                service = rng.choice(SERVICES)
                tables["SERVICES"].append({
                    "subject_id": subject, "hadm_id": hadm, "transfertime": _ts(next(times)),
                    "prev_service": prev_service, "curr_service": service,
                })
                prev_service = service
            for _ in range(n_trf):
                when = next(times)
                tables["TRANSFERS"].append({
                    "subject_id": subject, "hadm_id": hadm, "icustay_id": "", "eventtype": "transfer",
                    "curr_careunit": "", "curr_wardid": rng.choice(WARDS), "intime": _ts(when),
                    "outtime": "",
                })
            for _ in range(n_icu):
                icu_counter += 1
                when = next(times)
                tables["ICUSTAYS"].append({
                    "subject_id": subject, "hadm_id": hadm, "icustay_id": str(icu_counter),
                    "first_careunit": rng.choice(CAREUNITS), "intime": _ts(when), "outtime": _ts(discharge),
                })
            for _ in range(n_call):
                tables["CALLOUT"].append({
                    "subject_id": subject, "hadm_id": hadm, "createtime": _ts(next(times)),
                    "callout_service": rng.choice(SERVICES),
                })
            deathtime = _ts(next(times)) if dies else ""
            died = died or dies

            tables["ADMISSIONS"].append({
                "subject_id": subject, "hadm_id": hadm, "admittime": _ts(admit), "dischtime": _ts(discharge),
                "deathtime": deathtime, "admission_type": rng.choice(("EMERGENCY", "ELECTIVE", "URGENT")),
                "discharge_location": "DEAD/EXPIRED" if dies else rng.choice(("HOME", "SNF", "REHAB")),
                "edregtime": edreg, "edouttime": edout, "hospital_expire_flag": "1" if dies else "0",
            })

            n_codes = 1
            while n_codes < MAX_CODES and rng.random() < params.morbidity_rate:
                n_codes += 1
            codes = []
            while len(codes) < n_codes:
                code = rng.choices(ICD_CODES, ICD_WEIGHTS)[0]
                if code not in codes:
                    codes.append(code)
            if rng.random() < params.ev_code_rate:
                codes.insert(rng.randrange(0, len(codes) + 1), rng.choice(EV_CODES))
            for seq, code in enumerate(codes, start=1):
                tables["DIAGNOSES_ICD"].append(
                    {"subject_id": subject, "hadm_id": hadm, "seq_id": str(seq), "icd9_code": code}
                )

            for _ in range(_count(rng, params.lab_rate, LAB_SLOTS)):
                _lab_row(rng, params, tables, subject, hadm, admit + timedelta(seconds=rng.randrange(0, los + 1)))
            for _ in range(_count(rng, params.prescription_rate, RX_SLOTS)):
                drug, dose, unit, form = rng.choice(DRUGS)
                start = admit + timedelta(seconds=rng.randrange(0, los + 1))
                end = start if rng.random() < 0.1 else start + timedelta(seconds=rng.randrange(0, los + 1))
                tables["PRESCRIPTIONS"].append({
                    "subject_id": subject, "hadm_id": hadm, "startdate": _ts(start), "enddate": _ts(end),
                    "drug": drug, "dose_val_rx": dose, "dose_unit_rx": unit, "form_val_disp": form,
                })
            clock = discharge

        tables["PATIENTS"].append({
            "subject_id": subject, "gender": rng.choice("MF"), "dob": _ts(dob),
            "dod": tables["ADMISSIONS"][-1]["deathtime"] if died else "", "expire_flag": "1" if died else "0",
        })

    tables["PATIENTS"].sort(key=lambda row: int(row["subject_id"]))
    return RelationalBundle(tables, columns).validate()


def _lab_row(rng, params, tables, subject, hadm, when):
    itemid, _, unit, (lo, hi) = rng.choice(LAB_ITEMS)
    abnormal = rng.random() < params.abnormal_rate
    value = round(rng.uniform(lo, hi), 1)
    tables["LABEVENTS"].append({
        "subject_id": subject, "hadm_id": hadm, "itemid": itemid, "charttime": _ts(when),
        "value": str(value), "valueuom": unit, "flag": "abnormal" if abnormal else "",
    })


def random_log(seed, n_events, n_types=3, ids_per_type=4, n_activities=5, n_stamps=None):
    """Generic multi-entity log with heavy timestamp ties, for oracle tests.

    Each event references a random non-empty subset of ``n_types`` entity
    types. Timestamps are drawn from ``n_stamps`` distinct values (default
    ``n_events // 3 + 1``) so equal-timestamp tie-breaking is exercised.
    """
    rng = random.Random(seed)
    n_stamps = n_stamps or n_events // 3 + 1
    types = [f"T{i}" for i in range(n_types)]
    records = []
    for row in range(1, n_events + 1):
        chosen = [t for t in types if rng.random() < 0.5] or [rng.choice(types)]
        entities = tuple(EntityRef(t, f"{t.lower()}_{rng.randrange(ids_per_type)}") for t in chosen)
        when = EPOCH + timedelta(hours=rng.randrange(n_stamps))
        props = {"kind": rng.choice("xyz")} if rng.random() < 0.7 else {}
        records.append(EventRecord(f"act{rng.randrange(n_activities)}", when, entities, props, row))
    return records
