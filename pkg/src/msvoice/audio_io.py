"""16-bit PCM WAV decoding and encoding."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ContractError, CorruptFileError, FormatError

_PCM = 1
_EXTENSIBLE = 0xFFFE
_SCALE = 32768.0


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono audio with samples normalized to [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ContractError("waveform samples must be one-dimensional")
        if int(self.sample_rate_hz) <= 0:
            raise ContractError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise ContractError("waveform contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, Waveform):
            return NotImplemented
        return self.sample_rate_hz == other.sample_rate_hz and np.array_equal(
            self.samples, other.samples
        )

    __hash__ = None


def _iter_chunks(data: bytes):
    pos = 12
    while pos < len(data):
        if pos + 8 > len(data):
            raise CorruptFileError("truncated chunk header")
        chunk_id, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise CorruptFileError(f"chunk {chunk_id!r} truncated: {len(body)} of {size} bytes")
        yield chunk_id, body
        pos += 8 + size + (size & 1)


def decode_wav(data: bytes) -> Waveform:
    """Decode an in-memory RIFF/WAVE byte string; see :func:`read_wav`."""
    if len(data) < 12:
        raise CorruptFileError("file shorter than RIFF header")
    riff, _, wave = struct.unpack_from("<4sI4s", data, 0)
    if riff != b"RIFF" or wave != b"WAVE":
        raise FormatError("not a RIFF/WAVE file")

    fmt = None
    pcm = None
    for chunk_id, body in _iter_chunks(data):
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise CorruptFileError("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
            if fmt[0] == _EXTENSIBLE and len(body) >= 26:
                # WAVE_FORMAT_EXTENSIBLE carries the real format code in the subformat GUID
                fmt = (struct.unpack_from("<H", body, 24)[0],) + fmt[1:]
        elif chunk_id == b"data":
            pcm = body
    if fmt is None:
        raise CorruptFileError("missing fmt chunk")
    if pcm is None:
        raise CorruptFileError("missing data chunk")

    audio_format, n_channels, rate, _, block_align, bits = fmt
    if audio_format != _PCM or bits != 16:
        raise FormatError(
            f"only 16-bit integer PCM is supported (format {audio_format}, {bits} bits)"
        )
    if n_channels < 1 or block_align != 2 * n_channels:
        raise CorruptFileError(f"inconsistent channel layout ({n_channels} ch, block {block_align})")
    if rate <= 0:
        raise CorruptFileError("sample rate is zero")

    n_frames = len(pcm) // block_align
    frames = np.frombuffer(pcm, dtype="<i2", count=n_frames * n_channels)
    channel0 = frames.reshape(n_frames, n_channels)[:, 0]
    return Waveform(channel0.astype(np.float64) / _SCALE, rate)


def read_wav(path) -> Waveform:
    """Read a 16-bit PCM WAV file and return its first channel.

    Samples are scaled by 1/32768, so full negative scale maps to exactly -1.0.

    Raises:
        FormatError: the file is not RIFF/WAVE or not 16-bit integer PCM.
        CorruptFileError: a chunk is truncated or required chunks are missing.
    """
    return decode_wav(Path(path).read_bytes())


def encode_wav(w: Waveform) -> bytes:
    samples = w.samples
    if samples.size and (samples.min() < -1.0 or samples.max() > 1.0):
        raise ContractError("samples must lie in [-1, 1] before encoding")
    ints = np.clip(np.round(samples * _SCALE), -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        _PCM,
        1,
        w.sample_rate_hz,
        w.sample_rate_hz * 2,
        2,
        16,
        b"data",
        len(payload),
    )
    return header + payload


def write_wav(w: Waveform, path) -> None:
    """Write ``w`` as a mono 16-bit PCM file.

    Values are rounded to the nearest step of 1/32768; +1.0 saturates at 32767.
    """
    Path(path).write_bytes(encode_wav(w))
