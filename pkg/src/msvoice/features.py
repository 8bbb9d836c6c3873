"""The twelve acoustic features and the nine-element classifier input.

All features are computed over the speech window, which runs from the start
of the first non-silence interval to the end of the last one. Every
cumulative slope index (CSI) is normalized by the speech duration.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, field, fields

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .annotation import (
    AnnotationTier,
    PhonemeClass,
    PhonemeClassMap,
    default_czech_class_map,
    qc_check,
)
from .audio_io import Waveform
from .dsp import (
    Contour,
    FormantConfig,
    PitchConfig,
    f0_contour,
    formant_tracks,
    intensity_contour,
)
from .dsp.spectrum import MIN_INTERVAL_S, spectral_centroid
from .exceptions import ContractError, InsufficientDataError, ValidationError


@dataclass(frozen=True)
class FeatureSet:
    speech_duration_s: float
    silence_to_speech_ratio: float
    vowel_to_speech_ratio: float
    csi_vowel_duration: float
    csi_f0: float
    f0_quantile_diff: float
    unvoiced_stop_mean_ms: float
    csi_intensity: float
    s_centroid_sd_hz: float
    f1_sd_hz: float
    f2_sd_hz: float
    f3_sd_hz: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


FEATURE_NAMES = tuple(f.name for f in fields(FeatureSet))

# Features that agreed with expert annotation in both cohorts; these feed the models.
VALIDATED_FEATURES = (
    "speech_duration_s",
    "vowel_to_speech_ratio",
    "csi_vowel_duration",
    "f0_quantile_diff",
    "unvoiced_stop_mean_ms",
    "csi_intensity",
    "s_centroid_sd_hz",
)
MODEL_VECTOR_COLUMNS = VALIDATED_FEATURES + ("age_years", "gender_code")


@dataclass(frozen=True)
class ExtractionConfig:
    pitch: PitchConfig = field(default_factory=PitchConfig)
    formant: FormantConfig = field(default_factory=FormantConfig)
    intensity_window_s: float = 0.032
    intensity_time_step_s: float = 0.008


# --------------------------------------------------------------------------- CSI


def csi(x, normalizer_s: float) -> float:
    """Sum of absolute first differences of ``x`` divided by ``normalizer_s``."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise InsufficientDataError("CSI needs at least two values")
    if not normalizer_s > 0:
        raise ContractError("CSI normalizer must be positive")
    return float(np.abs(np.diff(x)).sum() / normalizer_s)


def csi_gapped(values, normalizer_s: float) -> float:
    """CSI of a track with NaN gaps.

    Differences are only taken between adjacent defined frames; a gap ends
    one run and starts another, so no term spans an unvoiced stretch.
    """
    v = np.asarray(values, dtype=np.float64)
    if np.count_nonzero(~np.isnan(v)) < 2:
        raise InsufficientDataError("need at least two defined frames")
    if not normalizer_s > 0:
        raise ContractError("CSI normalizer must be positive")
    d = np.diff(v)
    return float(np.abs(d[~np.isnan(d)]).sum() / normalizer_s)


# --------------------------------------------------------------------------- interval features


def _classes(tier: AnnotationTier, class_map: PhonemeClassMap):
    return [class_map[iv.label] for iv in tier]


def speech_window(tier: AnnotationTier, class_map: PhonemeClassMap) -> tuple[float, float]:
    speech = [iv for iv, c in zip(tier, _classes(tier, class_map)) if c is not PhonemeClass.SILENCE]
    if not speech:
        raise InsufficientDataError("annotation contains no speech", "speech_duration_s")
    return speech[0].t_start_s, speech[-1].t_end_s


def speech_duration(tier: AnnotationTier, class_map: PhonemeClassMap) -> float:
    start, end = speech_window(tier, class_map)
    return end - start


def silence_to_speech_ratio(tier: AnnotationTier, class_map: PhonemeClassMap) -> float:
    """Silence inside the speech window (pauses, not lead-in/out) over speech duration."""
    start, end = speech_window(tier, class_map)
    silent = sum(
        iv.duration_s
        for iv in tier
        if class_map[iv.label] is PhonemeClass.SILENCE and iv.t_start_s >= start and iv.t_end_s <= end
    )
    return silent / (end - start)


def vowel_to_speech_ratio(tier: AnnotationTier, class_map: PhonemeClassMap) -> float:
    total = sum(iv.duration_s for iv in tier if class_map[iv.label] is PhonemeClass.VOWEL)
    return total / speech_duration(tier, class_map)


def csi_vowel_duration(tier: AnnotationTier, class_map: PhonemeClassMap) -> float:
    durations = [iv.duration_s for iv in tier if class_map[iv.label] is PhonemeClass.VOWEL]
    if len(durations) < 2:
        raise InsufficientDataError(f"{len(durations)} vowels, need 2", "csi_vowel_duration")
    return csi(durations, speech_duration(tier, class_map))


def unvoiced_stop_mean_duration(tier: AnnotationTier, class_map: PhonemeClassMap) -> float:
    """Mean /p t k c/ duration in milliseconds."""
    durations = [iv.duration_s for iv in tier if class_map[iv.label] is PhonemeClass.UNVOICED_STOP]
    if not durations:
        raise InsufficientDataError("no unvoiced stops", "unvoiced_stop_mean_ms")
    return 1000.0 * float(np.mean(durations))


# --------------------------------------------------------------------------- contour features


def f0_quantile_diff(f0: Contour) -> float:
    """Interquartile range of the voiced frames (linear (n-1)p interpolation)."""
    v = f0.values[f0.defined]
    if v.size < 4:
        raise InsufficientDataError(f"{v.size} voiced frames, need 4", "f0_quantile_diff")
    q1, q3 = np.quantile(v, [0.25, 0.75], method="linear")
    return float(q3 - q1)


def csi_f0(f0: Contour, speech_dur_s: float) -> float:
    try:
        return csi_gapped(f0.values, speech_dur_s)
    except InsufficientDataError as exc:
        raise InsufficientDataError(str(exc), "csi_f0") from None


def csi_intensity(intensity: Contour, speech_dur_s: float) -> float:
    try:
        return csi_gapped(intensity.values, speech_dur_s)
    except InsufficientDataError as exc:
        raise InsufficientDataError(str(exc), "csi_intensity") from None


# --------------------------------------------------------------------------- spectral features


def s_centroid_sd(w: Waveform, tier: AnnotationTier, class_map: PhonemeClassMap) -> float:
    """Sample SD (n-1) of the spectral centroids of all /s/ realizations.

    Intervals shorter than 10 ms cannot be analyzed and are skipped.
    """
    centroids = []
    for iv in tier:
        if class_map[iv.label] is not PhonemeClass.SIBILANT_S:
            continue
        end = min(iv.t_end_s, w.duration_s)
        if end - iv.t_start_s < MIN_INTERVAL_S:
            continue
        centroids.append(spectral_centroid(w, (iv.t_start_s, end)))
    if len(centroids) < 2:
        raise InsufficientDataError(f"{len(centroids)} usable /s/ intervals, need 2", "s_centroid_sd_hz")
    return float(np.std(centroids, ddof=1))


def formant_sds(
    w: Waveform,
    tier: AnnotationTier,
    class_map: PhonemeClassMap,
    cfg: FormantConfig = FormantConfig(),
    tracks=None,
) -> tuple[float, float, float]:
    """SD (n-1) of F1, F2 and F3 over all defined frames centered in a vowel.

    ``tracks`` may carry precomputed :func:`formant_tracks` output for ``w``.
    """
    vowels = [iv for iv in tier if class_map[iv.label] is PhonemeClass.VOWEL]
    if len(vowels) < 2:
        raise InsufficientDataError(f"{len(vowels)} vowels, need 2", "f1_sd_hz")
    if tracks is None:
        tracks = formant_tracks(w, cfg)
    starts = np.array([iv.t_start_s for iv in vowels])
    ends = np.array([iv.t_end_s for iv in vowels])
    pos = np.searchsorted(starts, tracks.times, side="right") - 1
    inside = (pos >= 0) & (tracks.times <= ends[np.clip(pos, 0, None)])
    sds = []
    for k in range(3):
        v = tracks.values[inside, k]
        v = v[~np.isnan(v)]
        if v.size < 2:
            raise InsufficientDataError(f"{v.size} defined frames inside vowels", f"f{k + 1}_sd_hz")
        sds.append(float(np.std(v, ddof=1)))
    return tuple(sds)


# --------------------------------------------------------------------------- all features


def extract_all(
    w: Waveform,
    tier: AnnotationTier,
    class_map: PhonemeClassMap | None = None,
    config: ExtractionConfig = ExtractionConfig(),
) -> FeatureSet:
    """Compute the full :class:`FeatureSet` for one recording.

    Raises:
        ValidationError: the annotation fails QC with an ERROR finding.
        InsufficientDataError: some feature lacks data; ``.feature`` names it.
    """
    class_map = class_map or default_czech_class_map()
    report = qc_check(tier, w.duration_s, class_map)
    if report.has_errors:
        raise ValidationError("; ".join(str(f) for f in report.findings))

    start, end = speech_window(tier, class_map)
    dur = end - start
    f0 = f0_contour(w, config.pitch).restrict(start, end)
    intensity = intensity_contour(
        w, config.intensity_window_s, config.intensity_time_step_s
    ).restrict(start, end)
    f1, f2, f3 = formant_sds(w, tier, class_map, config.formant)

    return FeatureSet(
        speech_duration_s=dur,
        silence_to_speech_ratio=silence_to_speech_ratio(tier, class_map),
        vowel_to_speech_ratio=vowel_to_speech_ratio(tier, class_map),
        csi_vowel_duration=csi_vowel_duration(tier, class_map),
        csi_f0=csi_f0(f0, dur),
        f0_quantile_diff=f0_quantile_diff(f0),
        unvoiced_stop_mean_ms=unvoiced_stop_mean_duration(tier, class_map),
        csi_intensity=csi_intensity(intensity, dur),
        s_centroid_sd_hz=s_centroid_sd(w, tier, class_map),
        f1_sd_hz=f1,
        f2_sd_hz=f2,
        f3_sd_hz=f3,
    )


def build_model_vector(fs: FeatureSet, age_years: float, gender_code: int) -> np.ndarray:
    """Order the validated features plus age and gender (female 0, male 1).

    Column names are in :data:`MODEL_VECTOR_COLUMNS`.
    """
    if gender_code not in (0, 1):
        raise ContractError(f"gender code must be 0 (female) or 1 (male), got {gender_code!r}")
    if not (math.isfinite(age_years) and age_years > 0):
        raise ContractError(f"age must be positive, got {age_years!r}")
    values = [getattr(fs, name) for name in VALIDATED_FEATURES]
    for name, value in zip(VALIDATED_FEATURES, values):
        if not math.isfinite(value):
            raise ContractError(f"feature {name} is not finite")
    return np.array(values + [float(age_years), float(gender_code)], dtype=np.float64)


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Transformer from (Waveform, AnnotationTier) pairs to feature rows.

    Stateless: ``fit`` only validates parameters. ``transform`` returns an
    array of shape (n_recordings, 12) with columns :data:`FEATURE_NAMES`.

    Parameters
    ----------
    class_map : PhonemeClassMap, optional
        Label classes; the Czech default when None.
    pitch : PitchConfig, optional
    formant : FormantConfig, optional
    intensity_window_s, intensity_time_step_s : float
    """

    def __init__(
        self,
        class_map=None,
        pitch=None,
        formant=None,
        intensity_window_s=0.032,
        intensity_time_step_s=0.008,
    ):
        self.class_map = class_map
        self.pitch = pitch
        self.formant = formant
        self.intensity_window_s = intensity_window_s
        self.intensity_time_step_s = intensity_time_step_s

    def _config(self) -> ExtractionConfig:
        return ExtractionConfig(
            pitch=self.pitch or PitchConfig(),
            formant=self.formant or FormantConfig(),
            intensity_window_s=self.intensity_window_s,
            intensity_time_step_s=self.intensity_time_step_s,
        )

    def fit(self, X=None, y=None):
        self._config()
        self.n_features_out_ = len(FEATURE_NAMES)
        return self

    def transform(self, X) -> np.ndarray:
        config = self._config()
        rows = [extract_all(w, tier, self.class_map, config).as_array() for w, tier in X]
        return np.vstack(rows) if rows else np.empty((0, len(FEATURE_NAMES)))

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)

    def _more_tags(self):
        return {"stateless": True, "requires_fit": False}
