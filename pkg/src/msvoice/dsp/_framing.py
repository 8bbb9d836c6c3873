"""Integer-sample frame layout shared by the contour analyses."""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..audio_io import Waveform
from ..exceptions import ContractError


def sample_index(t_s: float, rate_hz: int) -> int:
    """Nearest sample boundary to ``t_s``; exact ties go to the earlier sample."""
    return int(math.ceil(t_s * rate_hz - 0.5))


def frame_layout(n_samples: int, win_n: int, step_n: int) -> tuple[int, int]:
    """Return (first frame start, frame count) for centered framing.

    Frames are ``win_n`` samples long and ``step_n`` apart, with the leftover
    samples split evenly before the first and after the last frame.
    """
    if n_samples < win_n:
        return 0, 0
    n_frames = (n_samples - win_n) // step_n + 1
    first = (n_samples - win_n - (n_frames - 1) * step_n) // 2
    return first, n_frames


def frames(x: np.ndarray, win_n: int, step_n: int) -> tuple[np.ndarray, int]:
    """Frame matrix (n_frames x win_n), as a read-only view, plus first start."""
    first, n_frames = frame_layout(len(x), win_n, step_n)
    if n_frames == 0:
        return np.empty((0, win_n)), first
    view = sliding_window_view(x, win_n)
    return view[first : first + (n_frames - 1) * step_n + 1 : step_n], first


def slice_waveform(w: Waveform, t_start_s: float, t_end_s: float) -> Waveform:
    """Sample-aligned excerpt of ``w`` between two times in seconds.

    Boundaries round to the nearest sample (ties toward the earlier one), so
    adjacent slices partition the signal without overlap or loss.
    """
    half = 0.5 / w.sample_rate_hz
    if not (0 <= t_start_s < t_end_s <= w.duration_s + half):
        raise ContractError(
            f"slice [{t_start_s}, {t_end_s}] outside waveform of {w.duration_s} s"
        )
    i0 = sample_index(t_start_s, w.sample_rate_hz)
    i1 = min(sample_index(t_end_s, w.sample_rate_hz), len(w))
    return Waveform(w.samples[i0:i1], w.sample_rate_hz)
