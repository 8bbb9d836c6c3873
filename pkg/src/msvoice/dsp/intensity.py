from __future__ import annotations

import numpy as np

from ..audio_io import Waveform
from ..exceptions import ContractError
from ._framing import frames
from .contour import Contour

# (20 µPa)^2 with digital full scale taken as 1 Pa; a full-scale sine reads 91 dB.
REFERENCE_POWER = 4e-10


def intensity_contour(w: Waveform, window_s: float = 0.032, time_step_s: float = 0.008) -> Contour:
    """Short-time intensity in dB.

    Per frame: Hann-weighted mean square, 10*log10(power / 4e-10). Frames of
    exact digital silence are undefined (NaN).
    """
    if not (window_s > 0 and time_step_s > 0):
        raise ContractError("intensity window and step must be positive")
    if w.duration_s < window_s:
        raise ContractError(f"signal of {w.duration_s:.4f} s is shorter than the {window_s} s window")
    fs = w.sample_rate_hz
    win_n = max(1, int(round(window_s * fs)))
    step_n = max(1, int(round(time_step_s * fs)))
    x, first = frames(w.samples, win_n, step_n)
    window = np.hanning(win_n + 2)[1:-1]
    power = (x * x) @ window / window.sum()
    values = np.full(len(x), np.nan)
    nonzero = power > 0
    values[nonzero] = 10.0 * np.log10(power[nonzero] / REFERENCE_POWER)
    return Contour((first + win_n / 2) / fs, step_n / fs, values)
