"""One test per acceptance criterion.

Each test records a ``PASS``/``FAIL`` line (shown in the terminal summary and
printed immediately) and then asserts, so a failing criterion stays red.
"""
import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from sklearn.preprocessing import StandardScaler

from conftest import ACCEPTANCE_LINES
from msvoice.annotation import AnnotationTier, Severity, default_czech_class_map, emit_textgrid, qc_check
from msvoice.audio_io import Waveform, write_wav
from msvoice.cli import main
from msvoice.dsp import f0_contour, formant_tracks, hz_to_semitones, spectral_centroid
from msvoice.features import VALIDATED_FEATURES, csi
from msvoice.ml import (
    REQUIRED_MODELS,
    CVConfig,
    Dataset,
    KNeighborsClassifier,
    kfold_indices,
    roc_auc,
    stratified_split,
    train_eval_suite,
)
from msvoice.stats import ks_two_sample, logistic_glm, pearson_one_sided
from msvoice.testkit import CONTROL_PROFILE, synth_reading, synth_tone, synth_vowel

from oracles import (
    auc_pairwise,
    ecdf_sup_distance,
    ks_pvalue_boundary_recursion,
    logistic_irls_wls,
    pearson_definitional,
)

FS = 48000


def record(n: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def cli(*argv):
    code = main([str(a) for a in argv])
    assert code == 0, argv
    return code


@pytest.fixture(scope="session")
def default_cohort(tmp_path_factory):
    """Default 60+60 cohort (seed 1) pushed through synth, extract and ks."""
    root = tmp_path_factory.mktemp("default_cohort")
    t0 = time.perf_counter()
    cli("synth", "--out", root / "cohort")
    cli("extract", root / "cohort" / "manifest.csv", "--out", root / "features.csv")
    cli("ks", root / "features.csv", "--out", root / "ks.csv")
    elapsed = time.perf_counter() - t0
    return root, elapsed


def test_c01_pitch_oracle():
    worst_err, worst_voiced, total = 0.0, 1.0, 0.0
    for f in (110, 150, 220, 330):
        t = np.arange(2 * FS) / FS
        w = Waveform(0.5 * np.sin(2 * np.pi * f * t), FS)
        t0 = time.perf_counter()
        c = f0_contour(w)
        total += time.perf_counter() - t0
        keep = (c.times > c.times[0] + 0.05) & (c.times < c.times[-1] - 0.05)
        inner = c.values[keep]
        voiced = np.isfinite(inner)
        worst_voiced = min(worst_voiced, voiced.mean())
        err = abs(np.median(inner[voiced]) - hz_to_semitones(f))
        worst_err = max(worst_err, err)
    ok = worst_err <= 0.2 and worst_voiced >= 0.9 and total < 2.0
    record(1, ok, f"pitch max |err| {worst_err:.4f} st, min voiced {worst_voiced:.3f}, {total:.2f} s")


def test_c02_formant_oracle():
    targets = [(500, 80), (1500, 90), (2500, 100)]
    w = synth_vowel(120, targets, 0.5, FS)
    t0 = time.perf_counter()
    tracks = formant_tracks(w)
    elapsed = time.perf_counter() - t0
    errs = [abs(np.nanmedian(tracks.formant(k)) - f) for k, (f, _) in zip((1, 2, 3), targets)]
    ok = max(errs) <= 50 and elapsed < 2.0
    record(2, ok, f"formant errors {', '.join(f'{e:.1f}' for e in errs)} Hz, {elapsed:.2f} s")


def test_c03_spectral_centroid():
    bin_hz = FS / 1024
    tone = abs(spectral_centroid(synth_tone(1000, 0.5, FS), (0.0, 0.5)) - 1000)
    noise = Waveform(np.random.default_rng(1).uniform(-0.5, 0.5, FS), FS)
    noise_rel = abs(spectral_centroid(noise, (0.0, 1.0)) / (FS / 4) - 1)
    a, b = synth_tone(1000, 0.5, FS, 0.4), synth_tone(3000, 0.5, FS, 0.4)
    two = abs(spectral_centroid(Waveform(a.samples + b.samples, FS), (0.0, 0.5)) - 2000)
    ok = tone <= bin_hz and noise_rel <= 0.05 and two <= bin_hz
    record(3, ok, f"tone {tone:.2f} Hz, noise {100 * noise_rel:.2f}%, two-tone {two:.2f} Hz (bin {bin_hz:.1f})")


def test_c04_csi_suite():
    trivial = [csi([5, 5, 5], 1) - 0.0, csi([1, 3, 2], 1) - 3.0, csi([0, 1, 0, 1], 2) - 1.5]
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(2, 60))
        x = rng.normal(0, rng.uniform(0.1, 100), n)
        T, c, a = rng.uniform(0.1, 20), rng.normal(0, 1000), rng.normal(0, 10)
        base = csi(x, T)
        tol = 1e-12 * n * (np.abs(x).max() + abs(c)) / T
        bad += abs(csi(x + c, T) - base) > tol
        bad += abs(csi(a * x, T) - abs(a) * base) > 1e-12 * abs(a) * base + 1e-300
        bad += abs(csi(x[::-1], T) - base) > 1e-12 * base
    ok = max(abs(e) for e in trivial) <= 1e-12 and bad == 0
    record(4, ok, f"trivial max err {max(abs(e) for e in trivial):.1e}, invariant violations {bad}/3000")


def test_c05_statistics_oracles():
    ks_d_ok, ks_p_err = True, 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 21))
        x, y = rng.standard_normal(n), rng.standard_normal(n) + rng.uniform(0, 1.5)
        res = ks_two_sample(x, y)
        ks_d_ok &= Fraction(res.d_statistic).limit_denominator(n) == ecdf_sup_distance(list(x), list(y))
        ks_p_err = max(ks_p_err, abs(res.p_value - ks_pvalue_boundary_recursion(n, n, res.d_statistic)))
    pr_err = 0.0
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        x = rng.standard_normal(30)
        y = 0.4 * x + rng.standard_normal(30)
        r, p = pearson_definitional(list(x), list(y))
        got = pearson_one_sided(x, y)
        pr_err = max(pr_err, abs(got.r - r), abs(got.p_one_sided - p))
    rng = np.random.default_rng(7)
    X = rng.standard_normal((80, 3)) * (1.0, 50.0, 0.01)
    eta = 0.3 + X @ (0.8, -0.02, 60.0)
    y = (rng.random(80) < 1 / (1 + np.exp(-eta))).astype(float)
    Z = (X - X.mean(0)) / X.std(0)
    ref = logistic_irls_wls(Z, y)
    fit = logistic_glm(X, y, names=["a", "b", "c"])
    glm_err = float(np.max(np.abs(np.array([r.coefficient for r in fit.rows]) - ref)))
    ok = ks_d_ok and ks_p_err <= 1e-6 and pr_err <= 1e-8 and glm_err <= 1e-6 and fit.converged
    record(5, ok, f"K-S D exact={ks_d_ok}, p err {ks_p_err:.1e}; Pearson err {pr_err:.1e}; GLM err {glm_err:.1e}")


def test_c06_auc():
    worst = 0.0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 60))
        labels = rng.integers(0, 2, n)
        labels[:2] = (0, 1)
        scores = rng.integers(0, 6, n) / 5 if seed % 2 else rng.standard_normal(n)
        worst = max(worst, abs(roc_auc(scores, labels) - auc_pairwise(scores, labels)))
    record(6, worst <= 1e-12, f"max |AUC - pairwise| {worst:.1e} over 200 sets (odd seeds tied)")


def test_c07_ks_on_default_cohort(default_cohort):
    root, elapsed = default_cohort
    ks = pd.read_csv(root / "ks.csv")
    n_sig = int((ks["p_value"] < 0.05).sum())
    ok = n_sig >= 5 and len(ks) == len(VALIDATED_FEATURES) and elapsed < 60
    record(7, ok, f"{n_sig}/7 validated features with K-S p < 0.05; synth+extract+ks {elapsed:.1f} s")


def test_c08_models_on_default_cohort(default_cohort):
    root, _ = default_cohort
    cli("--format", "json", "train", root / "features.csv", "--out", root / "train.json")
    best = json.loads((root / "train.json").read_text())["models"][0]
    table = pd.read_csv(root / "features.csv", dtype={"subject_id": str})
    ds = Dataset.from_table(table)
    permuted = Dataset(ds.subject_ids, np.random.default_rng(99).permutation(ds.labels), ds.vectors)
    null_aucs = {r.model_name: r.mean_auc for r in train_eval_suite(permuted, CVConfig(), REQUIRED_MODELS)}
    null_ok = all(0.35 <= v <= 0.65 for v in null_aucs.values())
    ok = best["accuracy"] >= 0.80 and best["mean_auc"] >= 0.75 and null_ok
    null_txt = ", ".join(f"{k} {v:.3f}" for k, v in null_aucs.items())
    record(8, ok, f"best {best['model']} acc {best['accuracy']:.3f} CV AUC {best['mean_auc']:.3f}; "
                  f"permuted CV AUC {null_txt}")


def _cv_aucs(ds: Dataset, cfg: CVConfig, leaky: bool):
    """kNN fold AUCs with the scaler fit on the fold's training rows, or on the whole table."""
    train, _ = stratified_split(ds, cfg.holdout_fraction, cfg.seed)
    aucs = []
    for test_idx in kfold_indices(len(train), train.labels, cfg.n_folds, cfg.seed):
        fit_idx = np.setdiff1d(np.arange(len(train)), test_idx)
        scaler = StandardScaler().fit(ds.vectors if leaky else train.vectors[fit_idx])
        knn = KNeighborsClassifier().fit(scaler.transform(train.vectors[fit_idx]), train.labels[fit_idx])
        aucs.append(roc_auc(knn.predict_proba(scaler.transform(train.vectors[test_idx]))[:, 1],
                            train.labels[test_idx]))
    return aucs


def test_c09_leakage_canary():
    rng = np.random.default_rng(3)
    labels = np.repeat([1, 0], 30)
    vectors = rng.standard_normal((60, 5)) + 0.8 * labels[:, None] * np.array([1, 1, 0, 0, 0])
    vectors[:, 2] *= 100
    ds = Dataset(np.array([f"S{i:02d}" for i in range(60)]), labels, vectors)
    cfg = CVConfig(seed=2)
    _, hold = stratified_split(ds, cfg.holdout_fraction, cfg.seed)
    tampered_vectors = ds.vectors.copy()
    tampered_vectors[np.isin(ds.subject_ids, hold.subject_ids)] *= 10.0
    tampered = Dataset(ds.subject_ids, ds.labels, tampered_vectors)
    clean = {r.model_name: r.per_fold_auc for r in train_eval_suite(ds, cfg)}
    after = {r.model_name: r.per_fold_auc for r in train_eval_suite(tampered, cfg)}
    honest = _cv_aucs(ds, cfg, leaky=False) == _cv_aucs(tampered, cfg, leaky=False)
    leaky_detected = _cv_aucs(ds, cfg, leaky=True) != _cv_aucs(tampered, cfg, leaky=True)
    ok = clean == after and honest and leaky_detected
    record(9, ok, f"suite CV AUCs unchanged under 10x holdout rescaling: {clean == after}; "
                  f"leaky scaler detected: {leaky_detected}")


def _pipeline_run(root: Path, spec: Path):
    cli("synth", spec, "--out", root / "cohort")
    cli("extract", root / "cohort" / "manifest.csv", "--out", root / "features.csv")
    cli("ks", root / "features.csv", "--out", root / "ks.csv")
    cli("--format", "json", "train", root / "features.csv", "--out", root / "train.json")
    files = sorted(p for p in root.rglob("*") if p.is_file())
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in files}


def test_c10_determinism(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_cases": 12, "n_controls": 12, "seed": 21,
                                "control_profile": {"n_slots": 24}, "case_profile": {"n_slots": 24}}))
    a = _pipeline_run(tmp_path / "a", spec)
    b = _pipeline_run(tmp_path / "b", spec)
    reports = ("features.csv", "features.csv.qc.log", "ks.csv", "train.json")
    ok = a == b and all(name in a for name in reports)
    record(10, ok, f"{len(a)} files byte-identical across two runs: {a == b}")


def test_c11_qc_half_coverage(tmp_path):
    w, tier = synth_reading(CONTROL_PROFILE)
    cmap = default_czech_class_map()
    speech = [iv for iv in tier if cmap[iv.label].name != "SILENCE"]
    start = speech[0].t_start_s
    # keep intervals until the annotated speech span is half the recording
    cut = start + 0.5 * w.duration_s
    truncated = AnnotationTier(tuple(iv for iv in tier if iv.t_end_s <= cut))
    span = max(iv.t_end_s for iv in truncated if cmap[iv.label].name != "SILENCE") - start
    report = qc_check(truncated, w.duration_s, cmap)
    warned = any(f.severity is Severity.WARNING for f in report) and not report.has_errors
    # and the warning reaches the extract command's QC log
    write_wav(w, tmp_path / "x.wav")
    (tmp_path / "x.TextGrid").write_text(emit_textgrid([("phones", truncated)], w.duration_s))
    (tmp_path / "m.csv").write_text("subject_id,cohort,age_years,gender_code,wav_path,annotation_path\n"
                                    "X1,case,50,0,x.wav,x.TextGrid\n")
    main(["extract", str(tmp_path / "m.csv"), "--out", str(tmp_path / "f.csv")])
    logged = "X1\tWARNING\t" in (tmp_path / "f.csv.qc.log").read_text()
    ok = warned and logged and 0.45 <= span / w.duration_s <= 0.5
    record(11, ok, f"coverage {span / w.duration_s:.3f}: WARNING raised {warned}, logged by extract {logged}")
