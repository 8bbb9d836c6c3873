"""Automated acoustic analysis of read speech for dysarthria screening.

The pipeline runs from 16-bit WAV audio plus phoneme interval annotations to
twelve acoustic features, the univariate/multivariate statistics over a
cohort, and a battery of binary classifiers evaluated by holdout accuracy and
cross-validated ROC AUC.
"""

from .audio_io import Waveform, read_wav, write_wav
from .annotation import (
    AnnotationTier,
    Interval,
    PhonemeClass,
    PhonemeClassMap,
    default_czech_class_map,
    emit_textgrid,
    parse_interval_csv,
    parse_textgrid,
    qc_check,
)
from .features import FeatureExtractor, FeatureSet, build_model_vector, extract_all

__version__ = "0.1.0"

__all__ = [
    "AnnotationTier",
    "FeatureExtractor",
    "FeatureSet",
    "Interval",
    "PhonemeClass",
    "PhonemeClassMap",
    "Waveform",
    "build_model_vector",
    "default_czech_class_map",
    "emit_textgrid",
    "extract_all",
    "parse_interval_csv",
    "parse_textgrid",
    "qc_check",
    "read_wav",
    "write_wav",
]
