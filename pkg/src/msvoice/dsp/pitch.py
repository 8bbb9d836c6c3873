"""Autocorrelation pitch tracking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..audio_io import Waveform
from ..exceptions import ContractError
from ._framing import frames
from .contour import Contour


@dataclass(frozen=True)
class PitchConfig:
    """Pitch analysis settings.

    ``time_step_s`` defaults to 0.75 / floor_hz (10 ms at 75 Hz). Frames whose
    absolute peak is below ``silence_threshold`` times the global peak are
    unvoiced regardless of periodicity. ``octave_cost`` (per octave of lag)
    breaks near-ties between a period and its multiples in favour of the
    shorter lag.
    """

    floor_hz: float = 75.0
    ceiling_hz: float = 600.0
    time_step_s: float | None = None
    voicing_threshold: float = 0.45
    silence_threshold: float = 0.03
    octave_cost: float = 0.01

    def __post_init__(self):
        if not 0 < self.floor_hz < self.ceiling_hz:
            raise ContractError("pitch floor must be positive and below the ceiling")
        if self.time_step_s is not None and not self.time_step_s > 0:
            raise ContractError("pitch time step must be positive")

    @property
    def step_s(self) -> float:
        return self.time_step_s if self.time_step_s is not None else 0.75 / self.floor_hz


def hz_to_semitones(f_hz, ref_hz: float = 100.0):
    """12 * log2(f / ref). Works elementwise on arrays; NaN passes through."""
    f = np.asarray(f_hz, dtype=np.float64)
    if ref_hz <= 0 or np.any(f[~np.isnan(f)] <= 0):
        raise ContractError("frequencies must be positive to convert to semitones")
    st = 12.0 * np.log2(f / ref_hz)
    return float(st) if st.ndim == 0 else st


def _autocorr(x: np.ndarray, n_lags: int) -> np.ndarray:
    nfft = 1 << int(np.ceil(np.log2(x.shape[-1] + n_lags)))
    spec = np.fft.rfft(x, nfft)
    return np.fft.irfft(spec.real**2 + spec.imag**2, nfft)[..., :n_lags]


def f0_contour(w: Waveform, cfg: PitchConfig = PitchConfig()) -> Contour:
    """Fundamental frequency track in semitones re 100 Hz.

    Each frame spans three periods of the pitch floor, is mean-removed and
    Hann-weighted, and its autocorrelation is divided by that of the window.
    The strongest local maximum with lag in [1/ceiling, 1/floor] is refined
    by parabolic interpolation; the frame is voiced iff that peak reaches the
    voicing threshold. No path smoothing or octave-jump correction is done.
    """
    fs = w.sample_rate_hz
    if cfg.ceiling_hz >= fs / 2:
        raise ContractError(f"pitch ceiling {cfg.ceiling_hz} Hz must be below Nyquist {fs / 2}")
    if w.duration_s < 2.0 / cfg.floor_hz:
        raise ContractError(
            f"signal of {w.duration_s:.4f} s is shorter than two periods of the pitch floor"
        )

    win_n = min(int(round(3.0 * fs / cfg.floor_hz)), len(w))
    step_n = max(1, int(round(cfg.step_s * fs)))
    min_lag = max(2, int(np.ceil(fs / cfg.ceiling_hz)))
    max_lag = int(np.floor(fs / cfg.floor_hz))
    n_lags = max_lag + 2

    x, first = frames(w.samples, win_n, step_n)
    t0 = (first + win_n / 2) / fs
    values = np.full(len(x), np.nan)
    if len(x) == 0:
        return Contour(t0, step_n / fs, values)

    window = np.hanning(win_n + 2)[1:-1]
    rw = _autocorr(window, n_lags)
    rw = rw / rw[0]

    global_peak = np.max(np.abs(w.samples))
    local_peak = np.max(np.abs(x), axis=1)
    frame = (x - x.mean(axis=1, keepdims=True)) * window
    r = _autocorr(frame, n_lags)
    r0 = r[:, 0]
    active = (r0 > 0) & (local_peak >= cfg.silence_threshold * global_peak) & (global_peak > 0)
    r = r[active] / r0[active, None] / rw

    lags = np.arange(min_lag, max_lag + 1)
    mid, left, right = r[:, lags], r[:, lags - 1], r[:, lags + 1]
    is_peak = (mid > left) & (mid >= right)
    curv = left - 2 * mid + right
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = np.where(curv < 0, 0.5 * (left - right) / curv, 0.0)
    delta = np.clip(delta, -0.5, 0.5)
    height = mid - 0.25 * (left - right) * delta
    lag_s = (lags + delta) / fs
    score = np.where(is_peak, height - cfg.octave_cost * np.log2(cfg.floor_hz * lag_s), -np.inf)

    best = np.argmax(score, axis=1)
    rows = np.arange(len(best))
    has_peak = np.isfinite(score[rows, best])
    best_height = height[rows, best]
    f_hz = 1.0 / lag_s[rows, best]
    voiced = has_peak & (best_height >= cfg.voicing_threshold)

    active_values = np.full(len(best), np.nan)
    active_values[voiced] = 12.0 * np.log2(f_hz[voiced] / 100.0)
    values[active] = active_values
    return Contour(t0, step_n / fs, values)
