import dataclasses
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from msvoice.annotation import AnnotationTier, Interval, default_czech_class_map
from msvoice.audio_io import Waveform
from msvoice.dsp import Contour, spectral_centroid
from msvoice.exceptions import ContractError, InsufficientDataError, ValidationError
from msvoice.features import (
    FEATURE_NAMES,
    MODEL_VECTOR_COLUMNS,
    VALIDATED_FEATURES,
    FeatureExtractor,
    FeatureSet,
    build_model_vector,
    csi,
    csi_gapped,
    extract_all,
    f0_quantile_diff,
    s_centroid_sd,
    silence_to_speech_ratio,
    speech_duration,
    unvoiced_stop_mean_duration,
    vowel_to_speech_ratio,
)
from msvoice.testkit import CONTROL_PROFILE, synth_reading

from oracles import quantile_linear

CMAP = default_czech_class_map()
GOLDEN = Path(__file__).parent / "golden"


def tier(*rows):
    return AnnotationTier(tuple(Interval(*r) for r in rows))


FIVE = tier(("sil", 0, 0.2), ("a", 0.2, 0.5), ("sil", 0.5, 1.0), ("t", 1.0, 1.3), ("sil", 1.3, 2.0))


@pytest.fixture(scope="module")
def reading():
    return synth_reading(dataclasses.replace(CONTROL_PROFILE, seed=11))


class TestCSI:
    def test_constant(self):
        assert csi([5, 5, 5], 1) == 0.0

    def test_direct(self):
        assert abs(csi([1, 3, 2], 1) - 3.0) <= 1e-12

    def test_normalized(self):
        assert abs(csi([0, 1, 0, 1], 2) - 1.5) <= 1e-12

    def test_errors(self):
        with pytest.raises(InsufficientDataError):
            csi([1.0], 1)
        with pytest.raises(ContractError):
            csi([1.0, 2.0], 0)

    def test_invariants_on_seeded_vectors(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(2, 60))
            x = rng.normal(0, rng.uniform(0.1, 100), n)
            T = rng.uniform(0.1, 20)
            c, a = rng.normal(0, 1000), rng.normal(0, 10)
            base = csi(x, T)
            scale = np.abs(x).max() + abs(c)
            assert abs(csi(x + c, T) - base) <= 1e-12 * n * scale / T
            assert abs(csi(a * x, T) - abs(a) * base) <= 1e-12 * abs(a) * max(base, 1e-300) + 1e-300
            assert abs(csi(x[::-1], T) - base) <= 1e-12 * base
            # on integer-valued data every step is exact
            k = rng.integers(-1000, 1000, n).astype(float)
            ci = float(rng.integers(-1000, 1000))
            assert csi(k + ci, T) == csi(k, T)
            assert csi(k[::-1], T) == csi(k, T)

    def test_gap_rule(self):
        assert csi_gapped([1, 2, np.nan, 10, 11], 1.0) == 2.0
        assert csi_gapped([np.nan, 3, 5, np.nan, np.nan, 4], 2.0) == 1.0
        with pytest.raises(InsufficientDataError):
            csi_gapped([np.nan, 1.0, np.nan], 1.0)


class TestIntervalFeatures:
    def test_five_interval_example(self):
        assert speech_duration(FIVE, CMAP) == pytest.approx(1.1)
        assert silence_to_speech_ratio(FIVE, CMAP) == pytest.approx(0.5 / 1.1)
        assert vowel_to_speech_ratio(FIVE, CMAP) == pytest.approx(0.3 / 1.1)
        assert unvoiced_stop_mean_duration(FIVE, CMAP) == pytest.approx(300.0)

    def test_single_phoneme(self):
        assert speech_duration(tier(("a", 0, 1)), CMAP) == 1.0

    def test_all_silence(self):
        t = tier(("sil", 0, 1), ("", 1, 2))
        with pytest.raises(InsufficientDataError):
            speech_duration(t, CMAP)
        with pytest.raises(InsufficientDataError):
            silence_to_speech_ratio(t, CMAP)

    def test_deterministic(self):
        assert silence_to_speech_ratio(FIVE, CMAP) == silence_to_speech_ratio(FIVE, CMAP)

    @pytest.mark.parametrize("seed", range(5))
    def test_speech_duration_matches_scan(self, seed):
        rng = np.random.default_rng(seed)
        labels = ["", "sil", "a", "s", "t", "m", "#"]
        cuts = np.cumsum(rng.uniform(0.01, 0.2, 201))
        t = AnnotationTier(tuple(
            Interval(labels[int(rng.integers(len(labels)))], float(cuts[i]), float(cuts[i + 1])) for i in range(200)
        ))
        first = last = None
        for iv in t:
            if iv.label not in ("", "sil", "#", "<sil>"):
                first = iv.t_start_s if first is None else first
                last = iv.t_end_s
        assert speech_duration(t, CMAP) == last - first

    def test_no_stops(self):
        with pytest.raises(InsufficientDataError) as exc:
            unvoiced_stop_mean_duration(tier(("a", 0, 1)), CMAP)
        assert exc.value.feature == "unvoiced_stop_mean_ms"


class TestContourFeatures:
    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-30, 30), min_size=4, max_size=80), st.floats(-50, 50))
    def test_quantile_diff_oracle_and_shift(self, values, shift):
        c = Contour(0.0, 0.01, np.array(values))
        expected = quantile_linear(values, 0.75) - quantile_linear(values, 0.25)
        assert f0_quantile_diff(c) == pytest.approx(expected, abs=1e-9)
        shifted = Contour(0.0, 0.01, np.array(values) + shift)
        assert f0_quantile_diff(shifted) == pytest.approx(expected, abs=1e-9)

    def test_quantile_diff_ignores_unvoiced(self):
        c = Contour(0.0, 0.01, np.array([1.0, np.nan, 2.0, 3.0, np.nan, 4.0]))
        assert f0_quantile_diff(c) == pytest.approx(1.5)

    def test_quantile_diff_needs_frames(self):
        with pytest.raises(InsufficientDataError):
            f0_quantile_diff(Contour(0.0, 0.01, np.array([1.0, np.nan, 2.0])))


class TestSpectralFeatures:
    def test_centroid_sd_matches_manual(self, reading):
        w, t = reading
        cents = [spectral_centroid(w, (iv.t_start_s, iv.t_end_s)) for iv in t if iv.label == "s"]
        assert s_centroid_sd(w, t, CMAP) == pytest.approx(np.std(cents, ddof=1), rel=1e-12)

    def test_needs_two_sibilants(self):
        w = Waveform(np.random.default_rng(0).uniform(-0.1, 0.1, 16000), 16000)
        with pytest.raises(InsufficientDataError):
            s_centroid_sd(w, tier(("s", 0.1, 0.3), ("a", 0.3, 0.5)), CMAP)


class TestExtractAll:
    def test_all_finite_on_synthetic_reading(self, reading):
        fs = extract_all(*reading)
        assert all(np.isfinite(fs.as_array()))
        assert fs.speech_duration_s > 0 and 0 <= fs.vowel_to_speech_ratio <= 1
        assert fs.silence_to_speech_ratio >= 0
        assert min(fs.csi_vowel_duration, fs.csi_f0, fs.csi_intensity) >= 0
        assert min(fs.s_centroid_sd_hz, fs.f1_sd_hz, fs.f2_sd_hz, fs.f3_sd_hz) >= 0

    def test_deterministic(self, reading):
        a, b = extract_all(*reading), extract_all(*reading)
        assert a.as_array().tobytes() == b.as_array().tobytes()

    def test_ratios_amplitude_invariant(self, reading):
        w, t = reading
        quiet = Waveform(w.samples * 0.25, w.sample_rate_hz)
        a, b = extract_all(w, t), extract_all(quiet, t)
        for name in ("speech_duration_s", "silence_to_speech_ratio", "vowel_to_speech_ratio", "csi_vowel_duration"):
            assert getattr(a, name) == getattr(b, name)
        # intensity differences (and therefore CSI) do not depend on a global gain
        assert b.csi_intensity == pytest.approx(a.csi_intensity, rel=1e-9)

    def test_qc_error_rejected(self, reading):
        w, t = reading
        late = AnnotationTier(t.intervals + (Interval("a", w.duration_s + 0.5, w.duration_s + 1.0),))
        with pytest.raises(ValidationError):
            extract_all(w, late)


class TestModelVector:
    def _fs(self, **kw):
        base = dict.fromkeys(FEATURE_NAMES, 1.0)
        base.update(kw)
        return FeatureSet(**base)

    def test_order_and_length(self):
        fs = self._fs(**{n: float(i) for i, n in enumerate(VALIDATED_FEATURES, start=10)})
        v = build_model_vector(fs, 44, 1)
        assert v.shape == (9,)
        assert v.tolist() == [10, 11, 12, 13, 14, 15, 16, 44, 1]

    def test_golden_schema(self):
        golden = (GOLDEN / "model_vector_columns.txt").read_text().split()
        assert list(MODEL_VECTOR_COLUMNS) == golden

    def test_gender_and_age(self):
        with pytest.raises(ContractError):
            build_model_vector(self._fs(), 40, 2)
        with pytest.raises(ContractError):
            build_model_vector(self._fs(), 0, 1)

    def test_non_finite(self):
        with pytest.raises(ContractError):
            build_model_vector(self._fs(csi_intensity=float("nan")), 40, 0)

    def test_unvalidated_fields_ignored(self):
        assert np.isfinite(build_model_vector(self._fs(f1_sd_hz=float("nan")), 40, 0)).all()


class TestFeatureExtractor:
    def test_transform(self, reading):
        ext = FeatureExtractor().fit()
        X = ext.transform([reading])
        assert X.shape == (1, 12)
        np.testing.assert_array_equal(X[0], extract_all(*reading).as_array())
        assert list(ext.get_feature_names_out()) == list(FEATURE_NAMES)

    def test_params(self):
        ext = FeatureExtractor(intensity_window_s=0.04)
        assert clone(ext).get_params()["intensity_window_s"] == 0.04
        assert ext.transform([]).shape == (0, 12)
