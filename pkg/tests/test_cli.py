import json
import shutil
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from msvoice.cli import GLM_HEADER, KS_HEADER, TRAIN_HEADER, VALIDATE_HEADER, main
from msvoice.config import KNOWN_KEYS, load_config, parse_config
from msvoice.exceptions import ConfigError, SchemaError
from msvoice.features import FEATURE_NAMES, MODEL_VECTOR_COLUMNS, VALIDATED_FEATURES
from msvoice.tables import FEATURE_TABLE_COLUMNS, format_value, read_feature_table

GOLDEN = Path(__file__).parent / "golden"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def cohort(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = root / "spec.json"
    spec.write_text(json.dumps({"n_cases": 8, "n_controls": 8, "seed": 5,
                                "control_profile": {"n_slots": 32}, "case_profile": {"n_slots": 32}}))
    assert run("synth", spec, "--out", root / "coh") == 0
    assert run("extract", root / "coh" / "manifest.csv", "--out", root / "feats.csv") == 0
    return root


def header(path):
    return Path(path).read_text().splitlines()[0].split(",")


class TestPipeline:
    def test_extract_table(self, cohort):
        df = pd.read_csv(cohort / "feats.csv")
        assert tuple(df.columns) == FEATURE_TABLE_COLUMNS
        assert len(df) == 16
        assert (cohort / "feats.csv.qc.log").read_text().startswith("subject_id\tseverity\tmessage")

    def test_extract_rerun_identical(self, cohort, tmp_path):
        assert run("extract", cohort / "coh" / "manifest.csv", "--out", tmp_path / "again.csv") == 0
        assert (tmp_path / "again.csv").read_bytes() == (cohort / "feats.csv").read_bytes()

    def test_corrupt_row_isolated(self, cohort, tmp_path):
        coh = tmp_path / "coh"
        shutil.copytree(cohort / "coh", coh)
        (coh / "wav" / "S003.wav").write_bytes((coh / "wav" / "S003.wav").read_bytes()[:200])
        (coh / "wav" / "S004.wav").unlink()
        assert run("extract", coh / "manifest.csv", "--out", tmp_path / "f.csv") == 0
        df = pd.read_csv(tmp_path / "f.csv")
        assert len(df) == 14 and not {"S003", "S004"} & set(df["subject_id"])
        log = (tmp_path / "f.csv.qc.log").read_text()
        assert "S003\tERROR\tCorruptFileError" in log
        assert "S004\tERROR" in log and "S004\tEXCLUDED" in log

    def test_all_rows_fail(self, cohort, tmp_path):
        coh = tmp_path / "coh"
        shutil.copytree(cohort / "coh", coh)
        shutil.rmtree(coh / "wav")
        assert run("extract", coh / "manifest.csv", "--out", tmp_path / "f.csv") != 0
        assert not (tmp_path / "f.csv").exists()

    def test_qc_error_excluded(self, cohort, tmp_path):
        coh = tmp_path / "coh"
        shutil.copytree(cohort / "coh", coh)
        grid = coh / "annotations" / "S002.TextGrid"
        text = grid.read_text()
        # stretch the annotation 2 s past the audio
        from msvoice.annotation import AnnotationTier, Interval, emit_textgrid, load_tier

        tier = load_tier(grid)
        end = tier.intervals[-1].t_end_s
        grid.write_text(emit_textgrid([("phones", AnnotationTier(tier.intervals + (Interval("a", end, end + 2),)))], end + 2))
        assert text != grid.read_text()
        assert run("extract", coh / "manifest.csv", "--out", tmp_path / "f.csv") == 0
        assert "S002" not in set(pd.read_csv(tmp_path / "f.csv")["subject_id"])
        assert "S002\tERROR" in (tmp_path / "f.csv.qc.log").read_text()

    def test_ks(self, cohort, tmp_path):
        assert run("ks", cohort / "feats.csv", "--out", tmp_path / "ks.csv") == 0
        assert header(tmp_path / "ks.csv") == list(KS_HEADER)
        df = pd.read_csv(tmp_path / "ks.csv")
        assert list(df["feature"]) == list(VALIDATED_FEATURES)
        assert ((df["p_value"] < 0.05) == df["significant"]).all()
        assert ((df["p_value"] < 0.1) == df["borderline"]).all()

    def test_ks_json(self, cohort, tmp_path):
        assert run("--format", "json", "ks", cohort / "feats.csv", "--out", tmp_path / "ks.json") == 0
        rows = json.loads((tmp_path / "ks.json").read_text())
        assert rows[0]["feature"] == VALIDATED_FEATURES[0] and rows[0]["method"] == "exact"

    def test_ks_single_cohort(self, cohort, tmp_path):
        df = pd.read_csv(cohort / "feats.csv", dtype={"subject_id": str})
        df[df["cohort"] == "case"].to_csv(tmp_path / "cases.csv", index=False)
        assert run("ks", tmp_path / "cases.csv", "--out", tmp_path / "ks.csv") == 1
        assert not (tmp_path / "ks.csv").exists()

    def test_glm_schema_golden(self, cohort, tmp_path):
        assert run("glm", cohort / "feats.csv", "--out", tmp_path / "glm.csv") == 0
        golden = (GOLDEN / "glm_header.csv").read_text().strip()
        assert ",".join(header(tmp_path / "glm.csv")) == golden == ",".join(GLM_HEADER)
        df = pd.read_csv(tmp_path / "glm.csv")
        assert list(df["variable"]) == ["(intercept)", *MODEL_VECTOR_COLUMNS]

    def test_glm_separation_graceful(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = []
        for i in range(30):
            case = i < 15
            feats = {n: rng.normal() for n in FEATURE_NAMES}
            feats["speech_duration_s"] = 100.0 + i if case else float(i)  # perfectly separates
            rows.append({"subject_id": f"S{i}", "cohort": "case" if case else "control",
                         "age_years": 40.0 + rng.normal(), "gender_code": i % 2, **feats})
        pd.DataFrame(rows).to_csv(tmp_path / "sep.csv", index=False)
        assert run("glm", tmp_path / "sep.csv", "--out", tmp_path / "glm.csv") == 0
        df = pd.read_csv(tmp_path / "glm.csv")
        assert not df["converged"].any()
        assert not df["significant"].any()
        assert run("glm", tmp_path / "sep.csv", "--format", "json", "--out", tmp_path / "glm.json") == 0
        assert json.loads((tmp_path / "glm.json").read_text())["converged"] is False

    def test_train_csv_and_json(self, cohort, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed = 3\nmodels = knn, logistic_regularized\nholdout_fraction = 0.25\nn_folds = 3\n")
        assert run("--config", cfg, "train", cohort / "feats.csv", "--out", tmp_path / "t.csv") == 0
        assert header(tmp_path / "t.csv") == list(TRAIN_HEADER)
        assert len(pd.read_csv(tmp_path / "t.csv")) == 2
        assert run("--config", cfg, "--format", "json", "train", cohort / "feats.csv", "--out", tmp_path / "t.json") == 0
        obj = json.loads((tmp_path / "t.json").read_text())
        assert obj["seed"] == 3
        assert [m["best"] for m in obj["models"]] == [True, False]
        assert all(len(m["per_fold_auc"]) == 3 for m in obj["models"])
        # CSV order is the ranked order
        assert list(pd.read_csv(tmp_path / "t.csv")["model"]) == [m["model"] for m in obj["models"]]

    def test_seed_flag_overrides_config(self, cohort, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed = 3\nmodels = knn\nn_folds = 3\nholdout_fraction = 0.25\n")
        run("--config", cfg, "--format", "json", "train", cohort / "feats.csv", "--seed", "9", "--out", tmp_path / "t.json")
        assert json.loads((tmp_path / "t.json").read_text())["seed"] == 9

    def test_validate(self, cohort, tmp_path):
        df = pd.read_csv(cohort / "feats.csv", dtype={"subject_id": str})
        noisy = df.copy()
        rng = np.random.default_rng(1)
        for n in FEATURE_NAMES:
            noisy[n] = noisy[n] + rng.normal(0, 0.05 * noisy[n].std(), len(noisy))
        noisy.to_csv(tmp_path / "ref.csv", index=False)
        assert run("validate", cohort / "feats.csv", tmp_path / "ref.csv", "--out", tmp_path / "v.csv") == 0
        out = pd.read_csv(tmp_path / "v.csv")
        assert header(tmp_path / "v.csv") == list(VALIDATE_HEADER)
        assert list(out["feature"]) == sorted(FEATURE_NAMES)
        assert (out["r"] > 0.9).all() and out["significant"].all()

    def test_validate_schema_mismatch(self, cohort, tmp_path):
        df = pd.read_csv(cohort / "feats.csv").drop(columns=["f3_sd_hz"])
        df.to_csv(tmp_path / "ref.csv", index=False)
        assert run("validate", cohort / "feats.csv", tmp_path / "ref.csv", "--out", tmp_path / "v.csv") == 1


class TestConfig:
    def test_defaults_and_overrides(self):
        cfg = parse_config("# comment\nseed = 4\nformat = json\npitch_floor_hz = 60\nmax_formant_hz = 5000\n")
        assert cfg.seed == 4 and cfg.output_format == "json"
        assert cfg.extraction.pitch.floor_hz == 60 and cfg.extraction.formant.max_formant_hz == 5000

    @pytest.mark.parametrize("text", ["colour = red", "seed = x", "models = knn, svm", "[section]\nseed=1",
                                      "format = xml", "holdout_fraction = 0.7", "seed = 1\nseed = 2",
                                      "pitch_floor_hz = 700"])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_class_map_relative(self, tmp_path):
        (tmp_path / "m.json").write_text('{"vowels": ["A"], "silence": ["_"]}')
        (tmp_path / "c.cfg").write_text("class_map = m.json\n")
        cfg = load_config(tmp_path / "c.cfg")
        assert cfg.class_map()["A"].name == "VOWEL"

    def test_every_key_documented(self):
        import msvoice.config as mod

        for key in KNOWN_KEYS:
            assert key in mod.__doc__

    def test_unknown_key_exit_code(self, tmp_path):
        (tmp_path / "bad.cfg").write_text("sead = 1\n")
        assert run("--config", tmp_path / "bad.cfg", "synth", "--out", tmp_path / "x") == 1


class TestTables:
    def test_format_value(self):
        assert format_value(0.1) == "0.1" and format_value(True) == "true" and format_value(np.int64(3)) == "3"
        assert float(format_value(1 / 3)) == 1 / 3

    def test_missing_column(self, tmp_path):
        pd.DataFrame({"subject_id": ["a"], "cohort": ["case"]}).to_csv(tmp_path / "t.csv", index=False)
        with pytest.raises(SchemaError):
            read_feature_table(tmp_path / "t.csv")

    def test_bad_cohort(self, cohort, tmp_path):
        df = pd.read_csv(cohort / "feats.csv")
        df.loc[0, "cohort"] = "patient"
        df.to_csv(tmp_path / "t.csv", index=False)
        with pytest.raises(SchemaError):
            read_feature_table(tmp_path / "t.csv")

    def test_json_table_round_trip(self, cohort, tmp_path):
        assert run("--format", "json", "extract", cohort / "coh" / "manifest.csv", "--out", tmp_path / "f.json") == 0
        a = read_feature_table(tmp_path / "f.json")
        b = read_feature_table(cohort / "feats.csv")
        pd.testing.assert_frame_equal(a, b)


def test_synth_requires_out(capsys):
    assert run("synth") == 1
    assert "--out" in capsys.readouterr().err
