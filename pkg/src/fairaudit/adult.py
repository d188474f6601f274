"""Converter for the UCI Adult census file into the canonical CSV schema.

The raw file (``adult.data``; optionally concatenated with ``adult.test``
minus its banner line) has no header and 15 comma-separated fields.  Rows
containing '?' are dropped: the loader rejects missing values rather than
imputing.  The protected group is sex (Female -> 0, Male -> 1), the
outcome is income > 50K, and ``fnlwgt`` is discarded.  Categorical
attributes are dichotomized by the standard loader.

The acceptance tests look for a prepared file at the path given by the
``FAIRAUDIT_ADULT_CSV`` environment variable.
"""

from __future__ import annotations

import csv
import os

from .data import Dataset, Schema, Task, load_dataset
from .errors import DataError

RAW_COLUMNS = (
    "age",
    "workclass",
    "fnlwgt",
    "education",
    "education_num",
    "marital_status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital_gain",
    "capital_loss",
    "hours_per_week",
    "native_country",
    "income",
)

ADULT_ENV_VAR = "FAIRAUDIT_ADULT_CSV"


def convert_adult(raw_path, out_csv_path, out_schema_path) -> int:
    """Convert a raw UCI adult file to canonical CSV + schema.

    Returns the number of rows written (rows with missing fields are
    dropped).
    """
    kept = 0
    try:
        raw = open(raw_path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {raw_path}: {exc}") from exc
    with raw, open(out_csv_path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out)
        header = [c for c in RAW_COLUMNS if c not in ("fnlwgt", "income")]
        writer.writerow(header + ["outcome"])
        for line in raw:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            fields = [f.strip().rstrip(".") for f in line.split(",")]
            if len(fields) != len(RAW_COLUMNS):
                continue
            if "?" in fields:
                continue
            record = dict(zip(RAW_COLUMNS, fields))
            outcome = "1" if record["income"] == ">50K" else "0"
            writer.writerow([record[c] for c in header] + [outcome])
            kept += 1
    if kept == 0:
        raise DataError(f"{raw_path}: no usable rows")
    with open(out_schema_path, "w", encoding="utf-8") as fh:
        fh.write("group=sex\noutcome=outcome\ntask=binary\n")
    return kept


def adult_schema() -> Schema:
    return Schema(group="sex", outcome="outcome", task=Task.BINARY)


def load_adult(csv_path=None) -> Dataset:
    """Load a prepared Adult CSV (from convert_adult).

    Without an explicit path, reads the location from FAIRAUDIT_ADULT_CSV.
    Group 0 is Female, group 1 is Male (lexicographic category order).
    """
    if csv_path is None:
        csv_path = os.environ.get(ADULT_ENV_VAR)
        if not csv_path:
            raise DataError(
                f"no Adult CSV path given and {ADULT_ENV_VAR} is unset; "
                "run `fairaudit prepare-adult` on the raw UCI file first"
            )
    return load_dataset(csv_path, adult_schema())
