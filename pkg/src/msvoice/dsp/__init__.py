"""Signal-level primitives: pitch, intensity, spectral centroid, formants."""

from ._framing import slice_waveform
from .contour import Contour
from .formants import (
    FormantConfig,
    FormantFrame,
    FormantTracks,
    burg_lpc,
    formant_tracks,
)
from .intensity import intensity_contour
from .pitch import PitchConfig, f0_contour, hz_to_semitones
from .spectrum import average_spectrum, spectral_centroid

slice = slice_waveform  # noqa: A001

__all__ = [
    "Contour",
    "FormantConfig",
    "FormantFrame",
    "FormantTracks",
    "PitchConfig",
    "average_spectrum",
    "burg_lpc",
    "f0_contour",
    "formant_tracks",
    "hz_to_semitones",
    "intensity_contour",
    "slice",
    "slice_waveform",
    "spectral_centroid",
]
