"""Feature-table and report file formats."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import SchemaError
from .features import FEATURE_NAMES

ID_COLUMNS = ("subject_id", "cohort", "age_years", "gender_code")
FEATURE_TABLE_COLUMNS = ID_COLUMNS + tuple(FEATURE_NAMES)
COHORTS = ("case", "control")


def format_value(v) -> str:
    """Deterministic text for one cell: shortest round-trip floats, lowercase booleans."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def render_json(obj) -> str:
    """JSON text; NaN and infinities become null."""
    return json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n"


def feature_rows(records) -> list:
    """Rows in column order from (subject_id, cohort, age, gender, FeatureSet) records."""
    rows = []
    for sid, cohort, age, gender, fs in records:
        rows.append([sid, cohort, float(age), int(gender), *(float(v) for v in fs.as_array())])
    return rows


def write_feature_table(records, path=None, fmt: str = "csv") -> str:
    """Serialize records; write to ``path`` when given. Returns the text."""
    rows = feature_rows(records)
    if fmt == "csv":
        text = render_csv(FEATURE_TABLE_COLUMNS, rows)
    elif fmt == "json":
        text = render_json([dict(zip(FEATURE_TABLE_COLUMNS, r)) for r in rows])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_feature_table(path, require_features=FEATURE_NAMES) -> pd.DataFrame:
    """Load a feature table (CSV or JSON records) and check its schema."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    if text.lstrip().startswith("["):
        try:
            df = pd.DataFrame(json.loads(text))
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"{path}: not a JSON feature table ({exc})") from None
    else:
        try:
            df = pd.read_csv(io.StringIO(text), dtype={"subject_id": str, "cohort": str})
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise SchemaError(f"{path}: not a CSV feature table ({exc})") from None
    missing = [c for c in (*ID_COLUMNS, *require_features) if c not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing columns {', '.join(missing)}")
    if df["subject_id"].duplicated().any():
        dup = df.loc[df["subject_id"].duplicated(), "subject_id"].iloc[0]
        raise SchemaError(f"{path}: duplicate subject_id {dup!r}")
    df["subject_id"] = df["subject_id"].astype(str)
    df["cohort"] = df["cohort"].astype(str).str.strip().str.lower()
    bad = sorted(set(df["cohort"]) - set(COHORTS))
    if bad:
        raise SchemaError(f"{path}: cohort must be case or control, found {bad}")
    numeric = [c for c in df.columns if c not in ("subject_id", "cohort")]
    try:
        df[numeric] = df[numeric].astype(np.float64)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}: non-numeric feature value ({exc})") from None
    return df
