"""Synthetic speech and annotations with controllable dysarthria-like effects.

A synthetic "reading" is a cycle of phoneme slots (stop, vowel, /s/, vowel,
optional pause) rendered with a source-filter model: an impulse train through
cascaded two-pole formant resonators for vowels, band-limited noise for /s/,
a silent closure plus a short noise burst for stops. The annotation tier is
built from the same integer sample boundaries used for synthesis.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .annotation import AnnotationTier, Interval, emit_textgrid
from .audio_io import Waveform, write_wav
from .exceptions import ContractError

MANIFEST_HEADER = ("subject_id", "cohort", "age_years", "gender_code", "wav_path", "annotation_path")

# (label, [(F1, B1), (F2, B2), (F3, B3)])
VOWELS = (
    ("a", ((730, 90), (1250, 100), (2600, 120))),
    ("e", ((500, 80), (1800, 100), (2550, 120))),
    ("i", ((320, 70), (2250, 100), (3000, 130))),
    ("o", ((520, 80), (900, 90), (2450, 120))),
    ("u", ((340, 70), (800, 90), (2350, 120))),
)
STOPS = ("p", "t", "k", "c")
BURST_S = 0.015
EDGE_SILENCE_S = 0.3
NOISE_FLOOR_RMS = 1e-4
SHIMMER_STEP_S = 0.025


@dataclass(frozen=True)
class SpeakerProfile:
    """Parameters of one synthetic speaker.

    Durations are in seconds, jitters are relative standard deviations
    (durations) or absolute ones (centroid, Hz). ``intensity_wobble_db`` is
    the SD of a random gain with 25 ms knots applied to the speech.
    """

    base_f0_hz: float = 120.0
    f0_range_semitones: float = 6.0
    vowel_duration_s: float = 0.09
    vowel_duration_jitter: float = 0.15
    stop_closure_s: float = 0.08
    stop_closure_jitter: float = 0.15
    s_duration_s: float = 0.10
    s_centroid_hz: float = 5000.0
    s_centroid_jitter_hz: float = 150.0
    s_bandwidth_hz: float = 1500.0
    pause_probability: float = 0.15
    pause_duration_s: float = 0.3
    intensity_wobble_db: float = 1.0
    n_slots: int = 60
    sample_rate_hz: int = 16000
    seed: int = 0

    def __post_init__(self):
        positive = (
            "base_f0_hz", "vowel_duration_s", "stop_closure_s", "s_duration_s",
            "s_centroid_hz", "s_bandwidth_hz", "pause_duration_s", "sample_rate_hz",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ContractError(f"{name} must be positive")
        for name in ("f0_range_semitones", "vowel_duration_jitter", "stop_closure_jitter",
                     "s_centroid_jitter_hz", "intensity_wobble_db"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be non-negative")
        if not 0 <= self.pause_probability <= 1:
            raise ContractError("pause probability must lie in [0, 1]")
        if self.n_slots < 8:
            raise ContractError("need at least 8 phoneme slots")


CONTROL_PROFILE = SpeakerProfile()
CASE_PROFILE = SpeakerProfile(
    f0_range_semitones=5.25,
    vowel_duration_s=0.10,
    vowel_duration_jitter=0.195,
    stop_closure_s=0.094,
    s_centroid_jitter_hz=190.0,
    pause_probability=0.22,
    intensity_wobble_db=5.5,
)


@dataclass(frozen=True)
class CohortSpec:
    """A synthetic two-cohort study.

    Each subject's profile is the cohort profile with speaking rate, pitch
    range and variability parameters perturbed by lognormal factors of
    spread ``between_subject_cv``; base f0 follows gender.
    """

    n_cases: int = 60
    n_controls: int = 60
    control_profile: SpeakerProfile = field(default_factory=lambda: CONTROL_PROFILE)
    case_profile: SpeakerProfile = field(default_factory=lambda: CASE_PROFILE)
    age_mean: float = 45.0
    age_sd: float = 11.0
    male_fraction: float = 0.37
    between_subject_cv: float = 0.15
    seed: int = 1

    def __post_init__(self):
        if self.n_cases < 2 or self.n_controls < 2:
            raise ContractError("each cohort needs at least 2 subjects")
        if not 0 <= self.male_fraction <= 1:
            raise ContractError("male fraction must lie in [0, 1]")

    @classmethod
    def from_json(cls, text: str) -> "CohortSpec":
        data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ContractError(f"unknown cohort spec keys: {sorted(unknown)}")
        for key, base in (("control_profile", CONTROL_PROFILE), ("case_profile", CASE_PROFILE)):
            if key in data:
                try:
                    data[key] = replace(base, **data[key])
                except TypeError as exc:
                    raise ContractError(f"bad {key}: {exc}") from None
        return cls(**data)


# --------------------------------------------------------------------------- primitives


def _raised_cosine_edges(x: np.ndarray, ramp_n: int) -> np.ndarray:
    ramp_n = min(ramp_n, len(x) // 2)
    if ramp_n > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * (np.arange(ramp_n) + 0.5) / ramp_n)
        x[:ramp_n] *= ramp
        x[len(x) - ramp_n :] *= ramp[::-1]
    return x


def synth_tone(freq_hz: float, duration_s: float, rate_hz: int, amplitude: float = 0.5) -> Waveform:
    """Sine with 10 ms raised-cosine onset and offset."""
    if not 0 < freq_hz < rate_hz / 2:
        raise ContractError(f"tone at {freq_hz} Hz aliases at {rate_hz} Hz sampling")
    if not 0 <= amplitude <= 1:
        raise ContractError("amplitude must lie in [0, 1]")
    n = int(round(duration_s * rate_hz))
    x = amplitude * np.sin(2 * np.pi * freq_hz * np.arange(n) / rate_hz)
    return Waveform(_raised_cosine_edges(x, int(round(0.01 * rate_hz))), rate_hz)


def _resonate(x: np.ndarray, formants, rate_hz: int) -> np.ndarray:
    for freq, bw in formants:
        r = np.exp(-np.pi * bw / rate_hz)
        c = 2 * r * np.cos(2 * np.pi * freq / rate_hz)
        x = lfilter([1 - c + r * r], [1, -c, r * r], x)
    return x


def _check_formants(formants, rate_hz):
    freqs = [f for f, _ in formants]
    if any(b <= 0 for _, b in formants):
        raise ContractError("formant bandwidths must be positive")
    if any(f2 <= f1 for f1, f2 in zip(freqs, freqs[1:])) or freqs[0] <= 0:
        raise ContractError(f"formants must be positive and ascending, got {freqs}")
    if freqs[-1] >= rate_hz / 2:
        raise ContractError("formants must lie below Nyquist")


def _impulse_train(f0_hz: np.ndarray, rate_hz: int, phase0: float = 0.0) -> np.ndarray:
    phase = phase0 + np.cumsum(f0_hz) / rate_hz
    src = np.zeros(len(f0_hz))
    src[1:][np.diff(np.floor(phase)) > 0] = 1.0
    return src


def _glottal_tilt(src: np.ndarray, rate_hz: int, corner_hz: float = 100.0) -> np.ndarray:
    """Critically damped two-pole lowpass giving the source a -12 dB/octave slope."""
    r = np.exp(-2 * np.pi * corner_hz / rate_hz)
    return lfilter([(1 - r) ** 2], [1, -2 * r, r * r], src)


def synth_vowel(f0_hz: float, formants, duration_s: float, rate_hz: int) -> Waveform:
    """Impulse train at ``f0_hz`` through cascaded resonators; peak 0.5."""
    _check_formants(formants, rate_hz)
    n = int(round(duration_s * rate_hz))
    src = _impulse_train(np.full(n, float(f0_hz)), rate_hz, phase0=0.999)
    y = _resonate(src, formants, rate_hz)
    peak = np.max(np.abs(y)) if n else 0.0
    return Waveform(0.5 * y / peak if peak > 0 else y, rate_hz)


def _band_noise(rng, n: int, center_hz: float, bandwidth_hz: float, rate_hz: int) -> np.ndarray:
    noise = rng.standard_normal(n)
    spec = np.fft.rfft(noise)
    freqs = np.fft.rfftfreq(n, 1.0 / rate_hz)
    spec[np.abs(freqs - center_hz) > bandwidth_hz / 2] = 0.0
    x = np.fft.irfft(spec, n)
    rms = np.sqrt(np.mean(x * x)) if n else 0.0
    return x / rms if rms > 0 else x


def synth_sibilant(
    center_hz: float, bandwidth_hz: float, duration_s: float, rate_hz: int, seed: int = 0
) -> Waveform:
    """Seeded white noise band-limited to center +/- bandwidth/2; RMS 0.1."""
    lo, hi = center_hz - bandwidth_hz / 2, center_hz + bandwidth_hz / 2
    if not (bandwidth_hz > 0 and lo > 0 and hi < rate_hz / 2):
        raise ContractError(f"band [{lo}, {hi}] Hz outside (0, {rate_hz / 2})")
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * rate_hz))
    x = 0.1 * _band_noise(rng, n, center_hz, bandwidth_hz, rate_hz)
    return Waveform(np.clip(x, -1, 1), rate_hz)


# --------------------------------------------------------------------------- reading


def _plan_slots(p: SpeakerProfile, rng):
    """Yield (kind, label, duration_s, extra) for the slot sequence."""
    slots = []
    pattern = ("stop", "vowel", "s", "vowel")
    vowel_i = stop_i = 0
    n_filled = 0
    while n_filled < p.n_slots:
        for kind in pattern:
            if kind == "vowel":
                label, formants = VOWELS[vowel_i % len(VOWELS)]
                vowel_i += 1
                dur = p.vowel_duration_s * max(0.3, 1 + p.vowel_duration_jitter * rng.standard_normal())
                gain_db = rng.normal(0.0, 1.0)
                slots.append(("vowel", label, dur, (formants, gain_db)))
            elif kind == "stop":
                label = STOPS[stop_i % len(STOPS)]
                stop_i += 1
                closure = p.stop_closure_s * max(0.3, 1 + p.stop_closure_jitter * rng.standard_normal())
                slots.append(("stop", label, closure + BURST_S, closure))
            else:
                centroid = p.s_centroid_hz + p.s_centroid_jitter_hz * rng.standard_normal()
                dur = p.s_duration_s * max(0.5, 1 + 0.1 * rng.standard_normal())
                slots.append(("s", "s", dur, centroid))
            n_filled += 1
        if n_filled < p.n_slots and rng.random() < p.pause_probability:
            dur = p.pause_duration_s * max(0.3, 1 + 0.3 * rng.standard_normal())
            slots.append(("pause", "", dur, None))
            n_filled += 1
    return slots


def synth_reading(profile: SpeakerProfile) -> tuple[Waveform, AnnotationTier]:
    """Render a synthetic read passage and its exact phoneme annotation."""
    p = profile
    fs = p.sample_rate_hz
    rng = np.random.default_rng(p.seed)
    slots = _plan_slots(p, rng)

    edge_n = int(round(EDGE_SILENCE_S * fs))
    lengths = [max(1, int(round(d * fs))) for _, _, d, _ in slots]
    bounds = np.concatenate([[edge_n], edge_n + np.cumsum(lengths)])
    total_n = int(bounds[-1]) + edge_n
    x = np.zeros(total_n)

    # slow intonation contour spanning the configured range (peak to peak)
    t = np.arange(total_n) / fs
    phase = rng.uniform(0, 2 * np.pi)
    semitones = 0.5 * p.f0_range_semitones * np.sin(2 * np.pi * t / 1.7 + phase)
    f0 = p.base_f0_hz * 2.0 ** (semitones / 12.0)
    source = _glottal_tilt(_impulse_train(f0, fs), fs)

    intervals = [Interval("sil", 0.0, edge_n / fs)]
    for (kind, label, _, extra), i0, i1 in zip(slots, bounds[:-1], bounds[1:]):
        i0, i1 = int(i0), int(i1)
        n = i1 - i0
        if kind == "vowel":
            formants, gain_db = extra
            seg = _resonate(source[i0:i1], formants, fs)
            peak = np.max(np.abs(seg))
            if peak > 0:
                seg = 0.3 * 10 ** (gain_db / 20) * seg / peak
            x[i0:i1] = _raised_cosine_edges(seg, int(0.005 * fs))
        elif kind == "s":
            centroid = float(np.clip(extra, 1000 + p.s_bandwidth_hz / 2, 0.45 * fs - p.s_bandwidth_hz / 2))
            seg = 0.05 * _band_noise(rng, n, centroid, p.s_bandwidth_hz, fs)
            x[i0:i1] = _raised_cosine_edges(seg, int(0.005 * fs))
        elif kind == "stop":
            burst_n = min(n, int(round(BURST_S * fs)))
            burst = 0.08 * rng.standard_normal(burst_n) * np.exp(-np.arange(burst_n) / (0.004 * fs))
            x[i1 - burst_n : i1] = burst
        intervals.append(Interval(label, i0 / fs, i1 / fs))
    intervals.append(Interval("sil", bounds[-1] / fs, total_n / fs))

    # slow random gain (shimmer), linearly interpolated between knots
    block = int(SHIMMER_STEP_S * fs)
    knots = rng.normal(0.0, p.intensity_wobble_db, total_n // block + 2)
    gain_db = np.interp(np.arange(total_n) / block, np.arange(len(knots)), knots)
    x *= 10 ** (gain_db / 20)

    x += NOISE_FLOOR_RMS * rng.standard_normal(total_n)
    x = np.clip(x, -1.0, 1.0)
    return Waveform(x, fs), AnnotationTier(tuple(intervals))


# --------------------------------------------------------------------------- cohorts


@dataclass(frozen=True)
class SyntheticSubject:
    subject_id: str
    cohort: str
    age_years: float
    gender_code: int
    profile: SpeakerProfile

    def render(self) -> tuple[Waveform, AnnotationTier]:
        return synth_reading(self.profile)


def _individualize(base: SpeakerProfile, rng, cv: float, male: bool, seed: int) -> SpeakerProfile:
    def jitter():
        return float(np.exp(cv * rng.standard_normal()))

    rate = jitter()
    return replace(
        base,
        base_f0_hz=(115.0 if male else 200.0) * 2 ** (rng.normal(0, 1.5) / 12),
        f0_range_semitones=base.f0_range_semitones * jitter(),
        vowel_duration_s=base.vowel_duration_s * rate,
        vowel_duration_jitter=base.vowel_duration_jitter * jitter(),
        stop_closure_s=base.stop_closure_s * rate * jitter(),
        s_duration_s=base.s_duration_s * rate,
        s_centroid_hz=base.s_centroid_hz * jitter(),
        s_centroid_jitter_hz=base.s_centroid_jitter_hz * jitter(),
        pause_probability=float(np.clip(base.pause_probability * jitter(), 0, 1)),
        pause_duration_s=base.pause_duration_s * rate,
        intensity_wobble_db=base.intensity_wobble_db * jitter(),
        seed=seed,
    )


def cohort_subjects(spec: CohortSpec) -> list[SyntheticSubject]:
    """Subjects of a cohort, cases first; each draws from its own seeded stream."""
    subjects = []
    groups = [("case", spec.n_cases, spec.case_profile), ("control", spec.n_controls, spec.control_profile)]
    index = 0
    for cohort, count, profile in groups:
        for _ in range(count):
            seq = np.random.SeedSequence([spec.seed, index])
            rng = np.random.default_rng(seq)
            male = bool(rng.random() < spec.male_fraction)
            age = float(np.clip(round(rng.normal(spec.age_mean, spec.age_sd)), 18, 85))
            sub_seed = int(seq.generate_state(1)[0])
            subjects.append(
                SyntheticSubject(
                    subject_id=f"S{index + 1:03d}",
                    cohort=cohort,
                    age_years=age,
                    gender_code=int(male),
                    profile=_individualize(profile, rng, spec.between_subject_cv, male, sub_seed),
                )
            )
            index += 1
    return subjects


def synth_cohort(spec: CohortSpec, out_dir) -> Path:
    """Write WAV + TextGrid per subject and a manifest CSV; return its path.

    Paths in the manifest are relative to ``out_dir``.
    """
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    (out_dir / "annotations").mkdir(parents=True, exist_ok=True)
    rows = []
    for subject in cohort_subjects(spec):
        w, tier = subject.render()
        wav_rel = f"wav/{subject.subject_id}.wav"
        ann_rel = f"annotations/{subject.subject_id}.TextGrid"
        write_wav(w, out_dir / wav_rel)
        (out_dir / ann_rel).write_text(emit_textgrid([("phones", tier)], w.duration_s), encoding="utf-8")
        rows.append([subject.subject_id, subject.cohort, repr(subject.age_years),
                     str(subject.gender_code), wav_rel, ann_rel])
    manifest = out_dir / "manifest.csv"
    with manifest.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)
    return manifest
