"""``msvoice`` command line: extract, validate, ks, glm, train, synth.

Reports go to ``--out`` (stdout when omitted, except for ``synth`` which
needs a directory). The exit status is 0 exactly when the primary output
was written.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .annotation import Severity, load_tier, qc_check
from .audio_io import read_wav
from .config import RunConfig, load_config
from .exceptions import MsVoiceError
from .features import MODEL_VECTOR_COLUMNS, VALIDATED_FEATURES, extract_all
from .ml import Dataset, train_eval_suite
from .stats import BORDERLINE_P, SIGNIFICANT_P, ks_two_sample, logistic_glm, validate_features
from .tables import (
    read_feature_table,
    render_csv,
    render_json,
    write_feature_table,
)
from .testkit import MANIFEST_HEADER, CohortSpec, synth_cohort

KS_HEADER = ("feature", "d_statistic", "p_value", "significant", "borderline")
GLM_HEADER = ("variable", "coefficient", "std_error", "z", "p_value", "significant", "borderline", "converged")
VALIDATE_HEADER = ("feature", "r", "p_one_sided", "n", "significant")
TRAIN_HEADER = ("model", "accuracy", "sensitivity", "specificity", "mean_auc")


class CommandError(Exception):
    """Failure that should end the command with a message and exit status 1."""


@dataclass
class Context:
    config: RunConfig
    fmt: str
    out: str | None

    def emit(self, text: str) -> None:
        if self.out is None or self.out == "-":
            sys.stdout.write(text)
        else:
            Path(self.out).write_text(text, encoding="utf-8")


def _report(ctx: Context, header, rows, json_obj) -> None:
    ctx.emit(render_csv(header, rows) if ctx.fmt == "csv" else render_json(json_obj))


# --------------------------------------------------------------------------- extract


def _read_manifest(path: Path) -> list[dict]:
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != MANIFEST_HEADER:
                raise CommandError(f"{path}: manifest header must be {','.join(MANIFEST_HEADER)}")
            return list(reader)
    except OSError as exc:
        raise CommandError(f"cannot read manifest {path}: {exc.strerror}") from None


def _extract_row(row: dict, base: Path, config: RunConfig, class_map):
    """Returns (record or None, log lines)."""
    sid = row["subject_id"]
    log = []
    try:
        age = float(row["age_years"])
        gender = int(row["gender_code"])
        if gender not in (0, 1) or not age > 0:
            raise MsVoiceError("age must be positive and gender_code 0 or 1")
        cohort = row["cohort"].strip().lower()
        if cohort not in ("case", "control"):
            raise MsVoiceError(f"cohort must be case or control, got {row['cohort']!r}")
        wav = read_wav(base / row["wav_path"])
        tier = load_tier(base / row["annotation_path"])
        report = qc_check(tier, wav.duration_s, class_map)
        for finding in report:
            log.append(f"{sid}\t{finding.severity.value}\t{finding.message}")
        if report.has_errors:
            log.append(f"{sid}\tEXCLUDED\tQC error")
            return None, log
        fs = extract_all(wav, tier, class_map, config.extraction)
    except (OSError, ValueError, MsVoiceError) as exc:
        reason = exc.strerror if isinstance(exc, OSError) and exc.strerror else str(exc)
        if isinstance(exc, OSError) and exc.filename:
            reason = f"{reason}: {exc.filename}"
        log.append(f"{sid}\t{Severity.ERROR.value}\t{type(exc).__name__}: {reason}")
        log.append(f"{sid}\tEXCLUDED\trow failed")
        return None, log
    return (sid, cohort, age, gender, fs), log


def cmd_extract(args, ctx: Context) -> int:
    manifest = Path(args.manifest)
    rows = _read_manifest(manifest)
    if not rows:
        raise CommandError(f"{manifest}: manifest has no rows")
    class_map = ctx.config.class_map()
    records, log = [], []
    for row in rows:
        record, lines = _extract_row(row, manifest.parent, ctx.config, class_map)
        log.extend(lines)
        if record is not None:
            records.append(record)
    sidecar = Path(args.qc_log) if args.qc_log else (
        Path(ctx.out + ".qc.log") if ctx.out and ctx.out != "-" else None
    )
    log_text = "subject_id\tseverity\tmessage\n" + "".join(line + "\n" for line in log)
    if sidecar is not None:
        sidecar.write_text(log_text, encoding="utf-8")
    else:
        sys.stderr.write(log_text)
    if not records:
        raise CommandError("every manifest row failed; no feature table written")
    excluded = len(rows) - len(records)
    if excluded:
        sys.stderr.write(f"{excluded} of {len(rows)} subjects excluded; see QC log\n")
    ctx.emit(write_feature_table(records, fmt=ctx.fmt))
    return 0


# --------------------------------------------------------------------------- validate


def cmd_validate(args, ctx: Context) -> int:
    auto = read_feature_table(args.auto_table)
    reference = read_feature_table(args.reference_table)
    results = validate_features(auto, reference)
    rows = [(name, r.r, r.p_one_sided, r.n, r.p_one_sided < SIGNIFICANT_P) for name, r in results]
    _report(ctx, VALIDATE_HEADER, rows, [dict(zip(VALIDATE_HEADER, row)) for row in rows])
    return 0


# --------------------------------------------------------------------------- ks


def _split_cohorts(table):
    case = table[table["cohort"] == "case"]
    control = table[table["cohort"] == "control"]
    if case.empty or control.empty:
        raise CommandError("feature table must contain both case and control rows")
    return case, control


def cmd_ks(args, ctx: Context) -> int:
    table = read_feature_table(args.feature_table, require_features=VALIDATED_FEATURES)
    case, control = _split_cohorts(table)
    rows, details = [], []
    for name in VALIDATED_FEATURES:
        res = ks_two_sample(case[name].to_numpy(), control[name].to_numpy())
        row = (name, res.d_statistic, res.p_value, res.p_value < SIGNIFICANT_P, res.p_value < BORDERLINE_P)
        rows.append(row)
        details.append({**dict(zip(KS_HEADER, row)), "n_case": res.n1, "n_control": res.n2,
                        "method": res.method, "ties": res.ties})
    _report(ctx, KS_HEADER, rows, details)
    return 0


# --------------------------------------------------------------------------- glm


def cmd_glm(args, ctx: Context) -> int:
    table = read_feature_table(args.feature_table, require_features=VALIDATED_FEATURES)
    _split_cohorts(table)
    if len(table) <= 10:
        raise CommandError(f"need more than 10 subjects, got {len(table)}")
    X = table.loc[:, list(MODEL_VECTOR_COLUMNS)].to_numpy(dtype=np.float64)
    y = (table["cohort"] == "case").to_numpy(dtype=np.float64)
    res = logistic_glm(X, y, names=MODEL_VECTOR_COLUMNS)
    rows = [
        (c.name, c.coefficient, c.std_error, c.z, c.p_two_sided,
         res.converged and c.p_two_sided < SIGNIFICANT_P, res.converged and c.borderline, res.converged)
        for c in res.rows
    ]
    if not res.converged:
        sys.stderr.write(f"warning: IRLS did not converge in {res.n_iterations} iterations (separation?)\n")
    obj = {"converged": res.converged, "n_iterations": res.n_iterations,
           "rows": [dict(zip(GLM_HEADER[:-1], row[:-1])) for row in rows]}
    _report(ctx, GLM_HEADER, rows, obj)
    return 0


# --------------------------------------------------------------------------- train


def cmd_train(args, ctx: Context) -> int:
    table = read_feature_table(args.feature_table, require_features=VALIDATED_FEATURES)
    ds = Dataset.from_table(table)
    reports = train_eval_suite(ds, ctx.config.cv_config(), ctx.config.models)
    rows = [(r.model_name, r.accuracy, r.sensitivity, r.specificity, r.mean_auc) for r in reports]
    obj = {
        "seed": ctx.config.seed,
        "models": [
            {**dict(zip(TRAIN_HEADER, row)), "per_fold_auc": list(r.per_fold_auc), "best": i == 0}
            for i, (row, r) in enumerate(zip(rows, reports))
        ],
    }
    _report(ctx, TRAIN_HEADER, rows, obj)
    if ctx.out not in (None, "-"):
        sys.stderr.write(f"best model: {reports[0].model_name}\n")
    return 0


# --------------------------------------------------------------------------- synth


def cmd_synth(args, ctx: Context) -> int:
    if ctx.out in (None, "-"):
        raise CommandError("synth needs --out DIRECTORY")
    if args.cohort_spec:
        try:
            spec = CohortSpec.from_json(Path(args.cohort_spec).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CommandError(f"cannot read cohort spec: {exc.strerror}") from None
    else:
        spec = CohortSpec()
    if args.seed_given:
        spec = CohortSpec(**{**spec.__dict__, "seed": ctx.config.seed})
    manifest = synth_cohort(spec, ctx.out)
    sys.stderr.write(f"wrote {manifest}\n")
    return 0


# --------------------------------------------------------------------------- wiring


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--config", metavar="FILE", help="key = value run configuration", **d)
    p.add_argument("--seed", type=int, help="overrides the config seed", **d)
    p.add_argument("--format", choices=("csv", "json"), help="report format (default csv)", **d)
    p.add_argument("--out", metavar="PATH", help="output file (directory for synth); default stdout", **d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msvoice", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_globals(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("extract", cmd_extract, "compute the feature table for a manifest of recordings")
    p.add_argument("manifest")
    p.add_argument("--qc-log", metavar="FILE", help="QC sidecar path (default: <out>.qc.log)")
    p = add("validate", cmd_validate, "correlate automatic features with a reference table")
    p.add_argument("auto_table")
    p.add_argument("reference_table")
    p = add("ks", cmd_ks, "two-sample K-S test per validated feature, case vs control")
    p.add_argument("feature_table")
    p = add("glm", cmd_glm, "logistic GLM over the model vector columns")
    p.add_argument("feature_table")
    p = add("train", cmd_train, "holdout + cross-validated evaluation of the classifiers")
    p.add_argument("feature_table")
    p = add("synth", cmd_synth, "write a synthetic cohort (WAV, TextGrid, manifest)")
    p.add_argument("cohort_spec", nargs="?", help="JSON cohort spec (default cohort when omitted)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        args.seed_given = args.seed is not None
        if args.seed_given:
            config = RunConfig(**{**config.__dict__, "seed": args.seed})
        fmt = args.format or config.output_format
        ctx = Context(config, fmt, args.out)
        return args.func(args, ctx)
    except (CommandError, MsVoiceError, ValueError) as exc:
        sys.stderr.write(f"msvoice {args.command}: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
