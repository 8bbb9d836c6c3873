from __future__ import annotations

import numpy as np

from ..audio_io import Waveform
from ..exceptions import ContractError, InsufficientDataError
from ._framing import sample_index

FRAME_S = 0.02
MIN_INTERVAL_S = 0.01


def average_spectrum(w: Waveform, interval: tuple[float, float]):
    """Mean magnitude spectrum over 50%-overlapped Hann frames in ``interval``.

    Returns (frequencies, magnitudes) for bins in (0, Nyquist].
    """
    t_start, t_end = interval
    if not (0 <= t_start < t_end <= w.duration_s + 0.5 / w.sample_rate_hz):
        raise ContractError(f"interval {interval} outside waveform of {w.duration_s} s")
    if t_end - t_start < MIN_INTERVAL_S:
        raise ContractError(f"interval {interval} shorter than {MIN_INTERVAL_S} s")
    fs = w.sample_rate_hz
    seg = w.samples[sample_index(t_start, fs) : sample_index(t_end, fs)]
    frame_n = min(int(round(FRAME_S * fs)), len(seg))
    hop = max(1, frame_n // 2)
    n_frames = (len(seg) - frame_n) // hop + 1
    idx = np.arange(frame_n)[None, :] + hop * np.arange(n_frames)[:, None]
    window = np.hanning(frame_n + 2)[1:-1]
    nfft = 1 << int(np.ceil(np.log2(frame_n)))
    mag = np.abs(np.fft.rfft(seg[idx] * window, nfft)).mean(axis=0)
    freqs = np.arange(len(mag)) * fs / nfft
    return freqs[1:], mag[1:]


def spectral_centroid(w: Waveform, interval: tuple[float, float]) -> float:
    """Magnitude-weighted mean frequency (Hz) of the averaged spectrum."""
    freqs, mag = average_spectrum(w, interval)
    total = mag.sum()
    if not total > 0:
        raise InsufficientDataError(f"no spectral energy in {interval}", "spectral_centroid")
    return float(freqs @ mag / total)
