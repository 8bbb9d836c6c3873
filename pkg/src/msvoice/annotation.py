"""Phoneme interval annotations: parsing, serialization, label classes and QC.

Annotations arrive as long-format Praat TextGrids (the usual output of forced
aligners) or as a three-column CSV. Labels are mapped onto the handful of
phoneme classes the features care about through a :class:`PhonemeClassMap`.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .exceptions import ContractError, ParseError, ValidationError

QC_TOLERANCE_S = 0.010
QC_MIN_COVERAGE = 0.60
CSV_HEADER = ["label", "t_start_s", "t_end_s"]


@dataclass(frozen=True)
class Interval:
    label: str
    t_start_s: float
    t_end_s: float

    def __post_init__(self):
        if not (math.isfinite(self.t_start_s) and math.isfinite(self.t_end_s)):
            raise ValidationError(f"non-finite interval times for {self.label!r}")
        if self.t_start_s < 0:
            raise ValidationError(f"negative start time {self.t_start_s} for {self.label!r}")
        if not self.t_start_s < self.t_end_s:
            raise ValidationError(
                f"interval {self.label!r} has start {self.t_start_s} >= end {self.t_end_s}"
            )

    @property
    def duration_s(self) -> float:
        return self.t_end_s - self.t_start_s


@dataclass(frozen=True)
class AnnotationTier:
    """Time-ordered, non-overlapping intervals of one recording."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        intervals = tuple(self.intervals)
        for i in range(1, len(intervals)):
            prev, cur = intervals[i - 1], intervals[i]
            if cur.t_start_s < prev.t_end_s:
                raise ValidationError(
                    f"interval {i + 1} ({cur.label!r}) starts at {cur.t_start_s} before "
                    f"interval {i} ends at {prev.t_end_s}"
                )
        object.__setattr__(self, "intervals", intervals)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __getitem__(self, i):
        return self.intervals[i]


class PhonemeClass(enum.Enum):
    VOWEL = "vowel"
    UNVOICED_STOP = "unvoiced_stop"
    SIBILANT_S = "sibilant_s"
    OTHER_CONSONANT = "other_consonant"
    SILENCE = "silence"


_JSON_KEYS = {
    "vowels": PhonemeClass.VOWEL,
    "unvoiced_stops": PhonemeClass.UNVOICED_STOP,
    "sibilant_s": PhonemeClass.SIBILANT_S,
    "silence": PhonemeClass.SILENCE,
    "other_consonants": PhonemeClass.OTHER_CONSONANT,
}


@dataclass(frozen=True)
class PhonemeClassMap:
    """Total mapping from phoneme label to :class:`PhonemeClass`.

    Labels absent from ``mapping`` fall back to ``default`` so that any
    aligner output can be classified. Labels are compared after stripping
    surrounding whitespace.
    """

    mapping: Mapping[str, PhonemeClass] = field(default_factory=dict)
    default: PhonemeClass = PhonemeClass.OTHER_CONSONANT

    def __getitem__(self, label: str) -> PhonemeClass:
        return self.mapping.get(label.strip(), self.default)

    def classify(self, label: str) -> PhonemeClass:
        return self[label]

    def labels_of(self, cls: PhonemeClass) -> list[str]:
        return sorted(lab for lab, c in self.mapping.items() if c is cls)

    @classmethod
    def from_groups(cls, groups: Mapping[str, Iterable[str]]) -> "PhonemeClassMap":
        mapping: dict[str, PhonemeClass] = {}
        for key, labels in groups.items():
            if key not in _JSON_KEYS:
                raise ValidationError(f"unknown class-map key {key!r}")
            for label in labels:
                label = str(label).strip()
                if label in mapping and mapping[label] is not _JSON_KEYS[key]:
                    raise ValidationError(f"label {label!r} assigned to two classes")
                mapping[label] = _JSON_KEYS[key]
        return cls(mapping)

    @classmethod
    def from_json(cls, text: str) -> "PhonemeClassMap":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValidationError("class-map JSON must be an object")
        return cls.from_groups(data)

    @classmethod
    def load(cls, path) -> "PhonemeClassMap":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


CZECH_VOWELS = ("a", "e", "i", "o", "u", "a:", "e:", "i:", "o:", "u:", "ou", "au", "eu")
CZECH_UNVOICED_STOPS = ("p", "t", "k", "c")
CZECH_SIBILANT_S = ("s",)
SILENCE_LABELS = ("", "sil", "#", "<sil>")
# ASCII stand-ins for the remaining Czech consonants (length mark ':' as for vowels).
CZECH_OTHER_CONSONANTS = (
    "b", "d", "dj", "g", "f", "v", "z", "sh", "zh", "ch", "x", "h", "j", "l",
    "m", "n", "nj", "ng", "mg", "r", "rzh", "rsh", "ts", "dz", "tsh", "dzh",
    "r:", "l:", "?",
)


def default_czech_class_map() -> PhonemeClassMap:
    """Class map for an ASCII rendering of the Czech phoneme inventory."""
    return PhonemeClassMap.from_groups(
        {
            "vowels": CZECH_VOWELS,
            "unvoiced_stops": CZECH_UNVOICED_STOPS,
            "sibilant_s": CZECH_SIBILANT_S,
            "silence": SILENCE_LABELS,
            "other_consonants": CZECH_OTHER_CONSONANTS,
        }
    )


# --------------------------------------------------------------------------- TextGrid

class _Lines:
    """Cursor over the non-blank lines of a TextGrid."""

    def __init__(self, text: str):
        self.lines = [
            (n, line.strip()) for n, line in enumerate(text.splitlines(), start=1) if line.strip()
        ]
        self.pos = 0

    def peek(self):
        return self.lines[self.pos] if self.pos < len(self.lines) else (None, None)

    def next(self):
        if self.pos >= len(self.lines):
            last = self.lines[-1][0] if self.lines else 1
            raise ParseError("unexpected end of file", last)
        item = self.lines[self.pos]
        self.pos += 1
        return item

    def expect(self, key: str):
        """Consume ``key = value`` and return (value, line number)."""
        n, line = self.next()
        m = re.match(r"^" + re.escape(key) + r"\s*=\s*(.*)$", line)
        if not m:
            raise ParseError(f"expected '{key} = ...', found {line!r}", n)
        return m.group(1).strip(), n

    def expect_header(self, pattern: str):
        n, line = self.next()
        if not re.match(pattern, line):
            raise ParseError(f"expected {pattern!r}, found {line!r}", n)
        return n, line


def _number(value: str, n: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ParseError(f"expected a number, found {value!r}", n) from None
    if not math.isfinite(x):
        raise ParseError(f"non-finite number {value!r}", n)
    return x


def _integer(value: str, n: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"expected an integer, found {value!r}", n) from None


def _string(value: str, n: int) -> str:
    if len(value) < 2 or value[0] != '"' or value[-1] != '"':
        raise ParseError(f"expected a quoted string, found {value!r}", n)
    body = value[1:-1]
    if '"' in body.replace('""', ""):
        raise ParseError(f"unescaped quote in {value!r}", n)
    return body.replace('""', '"')


def _quote(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def _parse_interval_tier(lines: _Lines, name: str, tier_xmin: float, tier_xmax: float):
    size_value, n = lines.expect("intervals: size")
    size = _integer(size_value, n)
    intervals = []
    prev_end = tier_xmin
    for i in range(1, size + 1):
        lines.expect_header(r"^intervals\s*\[\s*%d\s*\]\s*:?$" % i)
        xmin, n_min = lines.expect("xmin")
        xmax, n_max = lines.expect("xmax")
        text, n_text = lines.expect("text")
        t0, t1 = _number(xmin, n_min), _number(xmax, n_max)
        if t0 >= t1:
            raise ParseError(f"interval {i} of tier {name!r} has xmin >= xmax", n_max)
        if t0 < prev_end - 1e-12:
            raise ParseError(f"interval {i} of tier {name!r} starts before previous end", n_min)
        if t0 < 0:
            raise ParseError(f"interval {i} of tier {name!r} starts before 0", n_min)
        intervals.append(Interval(_string(text, n_text), t0, t1))
        prev_end = t1
    if intervals and prev_end > tier_xmax + 1e-9:
        raise ParseError(f"tier {name!r} has intervals beyond its xmax")
    return AnnotationTier(tuple(intervals))


def _skip_point_tier(lines: _Lines):
    size_value, n = lines.expect("points: size")
    for i in range(1, _integer(size_value, n) + 1):
        lines.expect_header(r"^points\s*\[\s*%d\s*\]\s*:?$" % i)
        n_t, line = lines.next()
        if not re.match(r"^(number|time)\s*=", line):
            raise ParseError(f"expected point time, found {line!r}", n_t)
        lines.expect("mark")


def parse_textgrid(text: str) -> list[tuple[str, AnnotationTier]]:
    """Parse a long-format TextGrid.

    Returns ``(name, tier)`` pairs for every IntervalTier in file order.
    Point tiers (``TextTier``) are skipped.

    Raises:
        ParseError: malformed header, unknown tier class, non-monotone or
            degenerate intervals. The message carries the offending line.
    """
    if text.startswith("﻿"):
        text = text[1:]
    lines = _Lines(text)
    value, n = lines.expect("File type")
    if _string(value, n) != "ooTextFile":
        raise ParseError("not an ooTextFile", n)
    value, n = lines.expect("Object class")
    if _string(value, n) != "TextGrid":
        raise ParseError("object class is not TextGrid", n)

    value, n = lines.expect("xmin")
    xmin = _number(value, n)
    value, n = lines.expect("xmax")
    xmax = _number(value, n)
    if xmin >= xmax:
        raise ParseError("file xmin >= xmax", n)

    n, line = lines.next()
    if line.replace(" ", "") == "tiers?<absent>":
        return []
    if line.replace(" ", "") != "tiers?<exists>":
        if re.match(r"^\d", line) or line.startswith('"'):
            raise ParseError("short-format TextGrid is not supported", n)
        raise ParseError(f"expected 'tiers? <exists>', found {line!r}", n)
    value, n = lines.expect("size")
    n_tiers = _integer(value, n)
    lines.expect_header(r"^item\s*\[\s*\]\s*:?$")

    tiers = []
    for k in range(1, n_tiers + 1):
        lines.expect_header(r"^item\s*\[\s*%d\s*\]\s*:?$" % k)
        value, n_cls = lines.expect("class")
        tier_class = _string(value, n_cls)
        value, n = lines.expect("name")
        name = _string(value, n)
        value, n = lines.expect("xmin")
        t_xmin = _number(value, n)
        value, n = lines.expect("xmax")
        t_xmax = _number(value, n)
        if t_xmin >= t_xmax:
            raise ParseError(f"tier {name!r} has xmin >= xmax", n)
        if tier_class == "IntervalTier":
            tiers.append((name, _parse_interval_tier(lines, name, t_xmin, t_xmax)))
        elif tier_class == "TextTier":
            _skip_point_tier(lines)
        else:
            raise ParseError(f"unknown tier class {tier_class!r}", n_cls)

    n, line = lines.peek()
    if line is not None:
        raise ParseError(f"trailing content {line!r}", n)
    return tiers


def emit_textgrid(tiers: list[tuple[str, AnnotationTier]], total_duration_s: float) -> str:
    """Serialize interval tiers as a long-format TextGrid.

    Intervals are written as given; gaps between them are not filled.
    Times are written with ``repr`` so parsing restores them exactly.
    """
    if not total_duration_s > 0:
        raise ContractError("total duration must be positive")
    for name, tier in tiers:
        for iv in tier:
            if iv.t_end_s > total_duration_s:
                raise ContractError(
                    f"interval {iv.label!r} of tier {name!r} ends at {iv.t_end_s} "
                    f"beyond total duration {total_duration_s}"
                )

    out = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        "xmin = 0.0 ",
        f"xmax = {float(total_duration_s)!r} ",
    ]
    if not tiers:
        out.append("tiers? <absent> ")
        return "\n".join(out) + "\n"
    out += ["tiers? <exists> ", f"size = {len(tiers)} ", "item []: "]
    for k, (name, tier) in enumerate(tiers, start=1):
        out += [
            f"    item [{k}]:",
            '        class = "IntervalTier" ',
            f"        name = {_quote(name)} ",
            "        xmin = 0.0 ",
            f"        xmax = {float(total_duration_s)!r} ",
            f"        intervals: size = {len(tier)} ",
        ]
        for i, iv in enumerate(tier, start=1):
            out += [
                f"        intervals [{i}]:",
                f"            xmin = {float(iv.t_start_s)!r} ",
                f"            xmax = {float(iv.t_end_s)!r} ",
                f"            text = {_quote(iv.label)} ",
            ]
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------- CSV


def parse_interval_csv(text: str) -> AnnotationTier:
    """Parse CSV with the exact header ``label,t_start_s,t_end_s``.

    Rows keep file order. A reversed, degenerate or overlapping row raises
    :class:`ValidationError` naming the 1-based data row.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty interval CSV", 1) from None
    if [h.strip() for h in header] != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)!r}, found {header!r}", 1)
    intervals: list[Interval] = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"row {row_no}: expected 3 columns, found {len(row)}", row_no + 1)
        label, t0, t1 = row
        try:
            start, end = float(t0), float(t1)
        except ValueError:
            raise ParseError(f"row {row_no}: non-numeric time", row_no + 1) from None
        try:
            iv = Interval(label, start, end)
        except ValidationError as exc:
            raise ValidationError(f"row {row_no}: {exc}") from None
        if intervals and iv.t_start_s < intervals[-1].t_end_s:
            raise ValidationError(
                f"row {row_no}: interval {label!r} starts at {start} before previous end "
                f"{intervals[-1].t_end_s}"
            )
        intervals.append(iv)
    return AnnotationTier(tuple(intervals))


def emit_interval_csv(tier: AnnotationTier) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for iv in tier:
        writer.writerow([iv.label, repr(float(iv.t_start_s)), repr(float(iv.t_end_s))])
    return buf.getvalue()


def load_tier(path, tier_name: str | None = None) -> AnnotationTier:
    """Load an annotation file, dispatching on extension (.csv or TextGrid).

    For TextGrids the tier called ``tier_name`` is used; by default a tier
    named ``phones``/``phonemes`` if present, else the first interval tier.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        return parse_interval_csv(text)
    tiers = parse_textgrid(text)
    if not tiers:
        raise ValidationError(f"{path}: no interval tiers")
    by_name = dict(tiers)
    if tier_name is not None:
        if tier_name not in by_name:
            raise ValidationError(f"{path}: no tier named {tier_name!r}")
        return by_name[tier_name]
    for preferred in ("phones", "phonemes"):
        if preferred in by_name:
            return by_name[preferred]
    return tiers[0][1]


# --------------------------------------------------------------------------- QC


class Severity(enum.Enum):
    WARNING = "WARNING"
    ERROR = "ERROR"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    message: str

    def __str__(self):
        return f"{self.severity.value}: {self.message}"


@dataclass(frozen=True)
class QCReport:
    findings: tuple[Finding, ...] = ()

    @property
    def has_errors(self) -> bool:
        return any(f.severity is Severity.ERROR for f in self.findings)

    @property
    def has_warnings(self) -> bool:
        return any(f.severity is Severity.WARNING for f in self.findings)

    def __len__(self):
        return len(self.findings)

    def __iter__(self):
        return iter(self.findings)


def qc_check(
    tier: AnnotationTier,
    audio_duration_s: float,
    class_map: PhonemeClassMap | None = None,
    min_coverage: float = QC_MIN_COVERAGE,
) -> QCReport:
    """Sanity-check an annotation against the length of its audio.

    An ERROR is raised for boundaries past the end of the audio (10 ms
    slack). A WARNING flags annotations whose speech span (first to last
    non-silence interval) covers less than ``min_coverage`` of the audio,
    which is what a prematurely terminated alignment looks like.
    """
    class_map = class_map or default_czech_class_map()
    findings = []
    limit = audio_duration_s + QC_TOLERANCE_S
    late = [iv for iv in tier if iv.t_end_s > limit]
    if late:
        findings.append(
            Finding(
                Severity.ERROR,
                f"{len(late)} boundaries exceed audio duration {audio_duration_s:.3f} s "
                f"(latest {max(iv.t_end_s for iv in late):.3f} s)",
            )
        )
    speech = [iv for iv in tier if class_map[iv.label] is not PhonemeClass.SILENCE]
    span = speech[-1].t_end_s - speech[0].t_start_s if speech else 0.0
    coverage = span / audio_duration_s if audio_duration_s > 0 else 0.0
    if coverage < min_coverage:
        findings.append(
            Finding(
                Severity.WARNING,
                f"annotated speech covers {100 * coverage:.1f}% of the recording "
                f"(< {100 * min_coverage:.0f}%); alignment may have stopped early",
            )
        )
    return QCReport(tuple(findings))
