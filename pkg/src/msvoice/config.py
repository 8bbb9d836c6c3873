"""Run configuration: a flat ``key = value`` text file.

Blank lines and lines starting with ``#`` or ``;`` are ignored. Keys:

============================  ==========================================
class_map                     JSON phoneme class map (path)
seed                          integer, default 0
models                        comma list, default the four required models
format                        csv | json
pitch_floor_hz                default 75
pitch_ceiling_hz              default 600
pitch_time_step_s             default 0.75 / floor
voicing_threshold             default 0.45
silence_threshold             default 0.03
octave_cost                   default 0.01
max_formant_hz                default 5500
n_formants                    default 5
formant_window_s              default 0.025
formant_time_step_s           default 0.00625
intensity_window_s            default 0.032
intensity_time_step_s         default 0.008
n_folds                       default 5
holdout_fraction              default 0.2
============================  ==========================================

Relative ``class_map`` paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .annotation import PhonemeClassMap, default_czech_class_map
from .dsp import FormantConfig, PitchConfig
from .exceptions import ConfigError
from .features import ExtractionConfig
from .ml import ALL_MODELS, REQUIRED_MODELS, CVConfig

_FLOAT_KEYS = {
    "pitch_floor_hz": ("pitch", "floor_hz"),
    "pitch_ceiling_hz": ("pitch", "ceiling_hz"),
    "pitch_time_step_s": ("pitch", "time_step_s"),
    "voicing_threshold": ("pitch", "voicing_threshold"),
    "silence_threshold": ("pitch", "silence_threshold"),
    "octave_cost": ("pitch", "octave_cost"),
    "max_formant_hz": ("formant", "max_formant_hz"),
    "formant_window_s": ("formant", "window_s"),
    "formant_time_step_s": ("formant", "time_step_s"),
    "intensity_window_s": ("extraction", "intensity_window_s"),
    "intensity_time_step_s": ("extraction", "intensity_time_step_s"),
    "holdout_fraction": ("cv", "holdout_fraction"),
}
_INT_KEYS = {
    "n_formants": ("formant", "n_formants"),
    "n_folds": ("cv", "n_folds"),
    "seed": ("run", "seed"),
}
KNOWN_KEYS = frozenset(_FLOAT_KEYS) | frozenset(_INT_KEYS) | {"class_map", "models", "format"}


@dataclass(frozen=True)
class RunConfig:
    class_map_path: Path | None = None
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    seed: int = 0
    models: tuple = REQUIRED_MODELS
    output_format: str = "csv"
    n_folds: int = 5
    holdout_fraction: float = 0.2

    def class_map(self) -> PhonemeClassMap:
        if self.class_map_path is None:
            return default_czech_class_map()
        try:
            return PhonemeClassMap.load(self.class_map_path)
        except OSError as exc:
            raise ConfigError(f"cannot read class map {self.class_map_path}: {exc.strerror}") from None

    def cv_config(self) -> CVConfig:
        return CVConfig(seed=self.seed, n_folds=self.n_folds, holdout_fraction=self.holdout_fraction)


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), interpolation=None, strict=True
    )
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if parser.sections() != ["run"]:
        raise ConfigError("config must be flat key = value lines without [sections]")
    values = dict(parser["run"])
    unknown = sorted(set(values) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")

    parts = {"pitch": {}, "formant": {}, "extraction": {}, "cv": {}, "run": {}}
    for key, raw in values.items():
        if key in _FLOAT_KEYS:
            group, name = _FLOAT_KEYS[key]
            try:
                parts[group][name] = float(raw)
            except ValueError:
                raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
        elif key in _INT_KEYS:
            group, name = _INT_KEYS[key]
            try:
                parts[group][name] = int(raw)
            except ValueError:
                raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None

    kwargs = {}
    if "class_map" in values:
        path = Path(values["class_map"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        kwargs["class_map_path"] = path
    if "models" in values:
        models = tuple(m.strip() for m in values["models"].split(",") if m.strip())
        bad = [m for m in models if m not in ALL_MODELS]
        if bad or not models:
            raise ConfigError(f"models: unknown {bad}; choose from {', '.join(ALL_MODELS)}")
        kwargs["models"] = models
    if "format" in values:
        if values["format"] not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        kwargs["output_format"] = values["format"]
    try:
        pitch = replace(PitchConfig(), **parts["pitch"])
        formant = replace(FormantConfig(), **parts["formant"])
        extraction = ExtractionConfig(pitch=pitch, formant=formant, **parts["extraction"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid analysis setting: {exc}") from None
    cfg = RunConfig(extraction=extraction, **parts["run"], **parts["cv"], **kwargs)
    try:
        cfg.cv_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path.parent)
