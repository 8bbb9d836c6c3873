"""Formant tracking by Burg linear prediction."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

from ..audio_io import Waveform
from ..exceptions import ContractError
from ._framing import frames

MIN_FORMANT_HZ = 50.0
MAX_BANDWIDTH_HZ = 400.0


@dataclass(frozen=True)
class FormantConfig:
    """Formant analysis settings.

    The analysis window is Gaussian with total length ``2 * window_s`` (so
    ``window_s`` is its effective duration). ``lpc_order`` defaults to twice
    the number of formants.
    """

    max_formant_hz: float = 5500.0
    n_formants: int = 5
    lpc_order: int | None = None
    window_s: float = 0.025
    time_step_s: float = 0.00625
    preemphasis_from_hz: float = 50.0

    def __post_init__(self):
        order = self.order
        if order % 2 or order < 2 * self.n_formants:
            raise ContractError("LPC order must be even and at least twice the formant count")
        if not self.window_s > self.time_step_s > 0:
            raise ContractError("formant window must exceed the (positive) time step")
        if not self.max_formant_hz > 2 * MIN_FORMANT_HZ:
            raise ContractError("max formant frequency too low")

    @property
    def order(self) -> int:
        return self.lpc_order if self.lpc_order is not None else 2 * self.n_formants


@dataclass(frozen=True)
class FormantFrame:
    t_s: float
    f1_hz: float
    f2_hz: float
    f3_hz: float


class FormantTracks(Sequence):
    """Per-frame F1-F3 (Hz, NaN where undefined); a sequence of FormantFrame."""

    def __init__(self, times: np.ndarray, values: np.ndarray):
        self.times = np.asarray(times, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64).reshape(-1, 3)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return FormantTracks(self.times[i], self.values[i])
        f1, f2, f3 = self.values[i]
        return FormantFrame(float(self.times[i]), float(f1), float(f2), float(f3))

    def formant(self, k: int) -> np.ndarray:
        """Track of formant ``k`` (1-based)."""
        return self.values[:, k - 1]


def burg_lpc(x: np.ndarray, order: int) -> np.ndarray:
    """Burg prediction polynomials [1, a1, ..., a_order] for each row of ``x``.

    Rows with no energy yield NaN coefficients.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n_rows, n = x.shape
    if n <= order:
        raise ContractError(f"need more than {order} samples for order-{order} LPC")
    a = np.zeros((n_rows, order + 1))
    a[:, 0] = 1.0
    f = x[:, 1:].copy()
    b = x[:, :-1].copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        for m in range(order):
            num = -2.0 * np.einsum("ij,ij->i", f, b)
            den = np.einsum("ij,ij->i", f, f) + np.einsum("ij,ij->i", b, b)
            k = (num / den)[:, None]
            a[:, : m + 2] = a[:, : m + 2] + k * a[:, m + 1 :: -1][:, : m + 2]
            f, b = (f + k * b)[:, 1:], (b + k * f)[:, :-1]
    return a


def lpc_roots(a: np.ndarray) -> np.ndarray:
    """Roots of each prediction polynomial via batched companion matrices."""
    a = np.atleast_2d(a)
    p = a.shape[1] - 1
    comp = np.zeros((len(a), p, p))
    comp[:, 0, :] = -a[:, 1:] / a[:, :1]
    comp[:, np.arange(1, p), np.arange(p - 1)] = 1.0
    return np.linalg.eigvals(comp)


def _gaussian_window(n: int) -> np.ndarray:
    edge = np.exp(-12.0)
    pos = (np.arange(n) + 0.5) / n - 0.5
    return (np.exp(-48.0 * pos**2) - edge) / (1.0 - edge)


def _resample(x: np.ndarray, rate: int, target: float) -> tuple[np.ndarray, float]:
    ratio = Fraction(target / rate).limit_denominator(1000)
    if ratio >= 1:
        return x, float(rate)
    return resample_poly(x, ratio.numerator, ratio.denominator), rate * float(ratio)


def roots_to_formants(roots: np.ndarray, fs: float, max_formant_hz: float) -> np.ndarray:
    """Lowest three admissible resonances per row of roots (NaN if missing)."""
    mag = np.abs(roots)
    # reflect unstable poles inside the unit circle
    roots = np.where(mag > 1.0, roots / np.maximum(mag, 1e-300) ** 2, roots)
    with np.errstate(divide="ignore"):
        bw = -np.log(np.abs(roots)) * fs / np.pi
    freq = np.angle(roots) * fs / (2 * np.pi)
    ok = (
        (roots.imag > 0)
        & (freq > MIN_FORMANT_HZ)
        & (freq < max_formant_hz)
        & (bw < MAX_BANDWIDTH_HZ)
    )
    cand = np.sort(np.where(ok, freq, np.inf), axis=1)[:, :3]
    out = np.full((len(roots), 3), np.nan)
    out[:, : cand.shape[1]] = np.where(np.isfinite(cand), cand, np.nan)
    return out


def formant_tracks(w: Waveform, cfg: FormantConfig = FormantConfig()) -> FormantTracks:
    """F1-F3 tracks from Burg LPC.

    The signal is resampled to twice ``max_formant_hz``, pre-emphasized from
    ``preemphasis_from_hz`` and cut into Gaussian-windowed frames. Poles of
    each frame's order-``lpc_order`` predictor with 50 Hz < f < max formant
    and bandwidth below 400 Hz are sorted by frequency and the lowest three
    become F1-F3. Silent or numerically unstable frames are left undefined.
    """
    if w.duration_s < cfg.window_s:
        raise ContractError(f"signal of {w.duration_s:.4f} s shorter than the formant window")
    x, fs = _resample(w.samples, w.sample_rate_hz, 2 * cfg.max_formant_hz)
    alpha = np.exp(-2 * np.pi * cfg.preemphasis_from_hz / fs)
    x = np.concatenate([x[:1], x[1:] - alpha * x[:-1]])

    win_n = min(int(round(2 * cfg.window_s * fs)), len(x))
    step_n = max(1, int(round(cfg.time_step_s * fs)))
    fr, first = frames(x, win_n, step_n)
    times = (first + win_n / 2 + step_n * np.arange(len(fr))) / fs
    values = np.full((len(fr), 3), np.nan)
    if len(fr) == 0:
        return FormantTracks(times, values)

    windowed = fr * _gaussian_window(win_n)
    energy = np.einsum("ij,ij->i", windowed, windowed)
    live = np.flatnonzero(energy > 0)
    if live.size:
        a = burg_lpc(windowed[live], cfg.order)
        stable = np.all(np.isfinite(a), axis=1)
        live, a = live[stable], a[stable]
        if live.size:
            values[live] = roots_to_formants(lpc_roots(a), fs, cfg.max_formant_hz)
    return FormantTracks(times, values)
