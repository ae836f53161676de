"""Corpus statistics: totals, per-year tables, snippet histograms, on-screen
fractions and face-pose distributions, emitted as JSON plus per-figure CSV.

All aggregations are order-independent, standard deviations are population
(the corpus is the whole population, not a sample), and label totals are
accumulated in integer milliseconds so they are exact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import CorpusManifest
from .diarize import OnscreenEvidence
from .errors import ValidationError
from .snippeter import Snippet

__all__ = [
    "SegmentLabel",
    "SEGMENT_LABELS",
    "Histogram",
    "MomentSummary",
    "RunningMoments",
    "moments",
    "CorpusTotals",
    "YearStats",
    "SnippetStats",
    "OnscreenReport",
    "PoseReport",
    "corpus_overview",
    "per_year_stats",
    "snippet_histograms",
    "onscreen_fractions",
    "pose_distributions",
    "write_report",
]

SEGMENT_LABELS = ("speech", "silence", "jingle", "music")


@dataclass(frozen=True)
class SegmentLabel:
    start_ms: int
    end_ms: int
    label: str

    def __post_init__(self):
        if self.start_ms >= self.end_ms:
            raise ValidationError(f"segment [{self.start_ms}, {self.end_ms}) is empty")
        if self.label not in SEGMENT_LABELS:
            raise ValidationError(f"unknown segment label {self.label!r}")


# --------------------------------------------------------------------------
# moments: two-pass and streaming, which must agree

def moments(values) -> tuple[float, float]:
    """Two-pass mean and population stddev with compensated summation."""
    values = list(values)
    if not values:
        return 0.0, 0.0
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


class RunningMoments:
    """Single-pass Welford accumulator (population stddev)."""

    def __init__(self):
        self.n = 0
        self._mean = 0.0
        self._m2 = 0.0

    def push(self, value: float) -> None:
        self.n += 1
        delta = value - self._mean
        self._mean += delta / self.n
        self._m2 += delta * (value - self._mean)

    @property
    def mean(self) -> float:
        return self._mean if self.n else 0.0

    @property
    def std(self) -> float:
        return math.sqrt(self._m2 / self.n) if self.n else 0.0


@dataclass(frozen=True)
class MomentSummary:
    n: int
    mean: float
    std: float

    def to_json(self) -> dict:
        return {"n": self.n, "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class Histogram:
    """Fixed-bin histogram whose counts always sum to the sample count."""

    edges: tuple[float, ...]
    counts: tuple[int, ...]

    def to_json(self) -> dict:
        return {"edges": list(self.edges), "counts": list(self.counts)}


def build_histogram(values, nbins: int = 30, lo: float | None = None, hi: float | None = None) -> Histogram:
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        edges = np.linspace(lo if lo is not None else 0.0, hi if hi is not None else 1.0, nbins + 1)
        return Histogram(tuple(edges), tuple([0] * nbins))
    lo = float(values.min()) if lo is None else lo
    hi = float(values.max()) if hi is None else hi
    if hi <= lo:
        hi = lo + 1.0
    clipped = np.clip(values, lo, hi)  # out-of-range mass lands in the end bins
    counts, edges = np.histogram(clipped, bins=nbins, range=(lo, hi))
    return Histogram(tuple(edges), tuple(int(c) for c in counts))


# --------------------------------------------------------------------------
# corpus totals

@dataclass(frozen=True)
class CorpusTotals:
    total_h: float
    hours_by_label: dict[str, float]
    unlabeled_h: float

    def to_json(self) -> dict:
        return {
            "total_h": self.total_h,
            "hours_by_label": dict(self.hours_by_label),
            "unlabeled_h": self.unlabeled_h,
        }


def _check_non_overlapping(segments: list[SegmentLabel], record_id: str) -> None:
    ordered = sorted(segments, key=lambda s: s.start_ms)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start_ms < prev.end_ms:
            raise ValidationError(
                f"record {record_id}: segments overlap at {cur.start_ms} ms"
            )


def corpus_overview(
    manifest: CorpusManifest, segments: dict[str, list[SegmentLabel]]
) -> CorpusTotals:
    """Total hours and per-label hours; the unlabeled remainder is explicit."""
    for record in manifest.records:
        if record.duration_s is None:
            raise ValidationError(f"record {record.id}: duration_s required for totals")
    total_s = math.fsum(r.duration_s for r in manifest.records)
    label_ms = {label: 0 for label in SEGMENT_LABELS}
    for record_id, segs in segments.items():
        _check_non_overlapping(segs, record_id)
        for seg in segs:
            label_ms[seg.label] += seg.end_ms - seg.start_ms
    hours = {label: ms / 3_600_000 for label, ms in label_ms.items()}
    unlabeled_h = total_s / 3600 - sum(hours.values())
    return CorpusTotals(total_h=total_s / 3600, hours_by_label=hours, unlabeled_h=unlabeled_h)


@dataclass(frozen=True)
class YearStats:
    count: int
    mean_dur_s: float
    std_dur_s: float

    def to_json(self) -> dict:
        return {"count": self.count, "mean_dur_s": self.mean_dur_s, "std_dur_s": self.std_dur_s}


def per_year_stats(manifest: CorpusManifest) -> dict[int, YearStats]:
    """Per calendar year: recording count, mean and population stddev of duration."""
    by_year: dict[int, list[float]] = {}
    counts: dict[int, int] = {}
    for record in manifest.records:
        year = record.date.year
        counts[year] = counts.get(year, 0) + 1
        if record.duration_s is not None:
            by_year.setdefault(year, []).append(record.duration_s)
    out = {}
    for year in sorted(counts):
        mean, std = moments(by_year.get(year, []))
        out[year] = YearStats(count=counts[year], mean_dur_s=mean, std_dur_s=std)
    return out


# --------------------------------------------------------------------------
# snippet-level distributions

@dataclass(frozen=True)
class SnippetStats:
    count: int
    empty_text_count: int
    duration_s: MomentSummary
    text_chars: MomentSummary
    tempo_s_per_char: MomentSummary
    tempo_chars_per_s: MomentSummary
    duration_hist: Histogram
    text_hist: Histogram
    tempo_hist: Histogram

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "empty_text_count": self.empty_text_count,
            "duration_s": self.duration_s.to_json(),
            "text_chars": self.text_chars.to_json(),
            "tempo_s_per_char": self.tempo_s_per_char.to_json(),
            "tempo_chars_per_s": self.tempo_chars_per_s.to_json(),
            "duration_hist": self.duration_hist.to_json(),
            "text_hist": self.text_hist.to_json(),
            "tempo_hist": self.tempo_hist.to_json(),
        }


def snippet_histograms(
    snippets: list[Snippet], nbins: int = 30, include_overlap: bool = False
) -> SnippetStats:
    """Histograms and moments for duration, text length and tempo.

    Tempo is seconds per character (the inverse is also summarized).
    Overlapping augmentation windows are excluded unless asked for, and
    snippets with empty text are excluded from tempo and counted.
    """
    pool = [s for s in snippets if include_overlap or s.overlap_group is None]
    durations = [(s.end_ms - s.start_ms) / 1000.0 for s in pool]
    chars = [len(s.text) for s in pool]
    with_text = [(d, c) for d, c in zip(durations, chars) if c > 0]
    tempo = [d / c for d, c in with_text]
    inverse = [c / d for d, c in with_text if d > 0]

    def summarize(values) -> MomentSummary:
        mean, std = moments(values)
        return MomentSummary(n=len(values), mean=mean, std=std)

    return SnippetStats(
        count=len(pool),
        empty_text_count=len(pool) - len(with_text),
        duration_s=summarize(durations),
        text_chars=summarize(chars),
        tempo_s_per_char=summarize(tempo),
        tempo_chars_per_s=summarize(inverse),
        duration_hist=build_histogram(durations, nbins),
        text_hist=build_histogram(chars, nbins),
        tempo_hist=build_histogram(tempo, nbins),
    )


# --------------------------------------------------------------------------
# on-screen fractions

@dataclass(frozen=True)
class OnscreenReport:
    visible_fraction: float
    active_fraction: float
    listening_hours: float
    visible_fraction_speech: float | None = None
    active_fraction_speech: float | None = None

    def to_json(self) -> dict:
        data = {
            "visible_fraction": self.visible_fraction,
            "active_fraction": self.active_fraction,
            "listening_hours": self.listening_hours,
        }
        if self.visible_fraction_speech is not None:
            data["visible_fraction_speech"] = self.visible_fraction_speech
            data["active_fraction_speech"] = self.active_fraction_speech
        return data


def onscreen_fractions(
    evidence: list[OnscreenEvidence],
    total_duration_s: float,
    speech_duration_s: float | None = None,
) -> OnscreenReport:
    """Fractions of time the target is on screen / on-screen speaking.

    Whether such fractions should be taken over all material or over speech
    only is a judgement call, so when a speech-only duration is supplied
    the report carries both denominators.
    """
    visible_s = 0.0
    active_s = 0.0
    for item in evidence:
        frame_s = 1.0 / item.fps
        for visible, speaking in zip(item.visible, item.speaking):
            if visible:
                visible_s += frame_s
                if speaking:
                    active_s += frame_s
    if total_duration_s <= 0:
        return OnscreenReport(0.0, 0.0, 0.0)
    report = OnscreenReport(
        visible_fraction=visible_s / total_duration_s,
        active_fraction=active_s / total_duration_s,
        listening_hours=(visible_s - active_s) / 3600.0,
        visible_fraction_speech=(visible_s / speech_duration_s) if speech_duration_s else None,
        active_fraction_speech=(active_s / speech_duration_s) if speech_duration_s else None,
    )
    return report


# --------------------------------------------------------------------------
# pose distributions

POSE_AXES = ("yaw", "pitch", "roll")
_QUANTILES = (5, 25, 50, 75, 95)


@dataclass(frozen=True)
class PoseReport:
    quantiles: dict[str, dict[str, float]]
    histograms: dict[str, Histogram] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "quantiles": {axis: dict(q) for axis, q in self.quantiles.items()},
            "histograms": {axis: h.to_json() for axis, h in self.histograms.items()},
        }


def pose_distributions(angles: list[dict]) -> PoseReport:
    """Quantiles and 1-degree histograms (-90..90) per face-angle axis.

    Multimodality (distinct camera positions show up as extra yaw peaks) is
    left visible in the histogram rather than detected automatically.
    """
    for index, entry in enumerate(angles):
        for axis in POSE_AXES:
            value = entry.get(axis, 0.0)
            if not math.isfinite(value):
                raise ValidationError(f"non-finite {axis} at index {index}")
    quantiles: dict[str, dict[str, float]] = {}
    histograms: dict[str, Histogram] = {}
    for axis in POSE_AXES:
        values = np.array([entry.get(axis, 0.0) for entry in angles], dtype=np.float64)
        if values.size:
            qs = np.percentile(values, _QUANTILES)
        else:
            qs = np.zeros(len(_QUANTILES))
        quantiles[axis] = {f"p{q}": float(v) for q, v in zip(_QUANTILES, qs)}
        histograms[axis] = build_histogram(values, nbins=180, lo=-90.0, hi=90.0)
    return PoseReport(quantiles=quantiles, histograms=histograms)


# --------------------------------------------------------------------------
# report files

def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _hist_rows(hist: Histogram):
    return [
        (hist.edges[i], hist.edges[i + 1], hist.counts[i]) for i in range(len(hist.counts))
    ]


def write_report(
    out_dir: str | Path,
    totals: CorpusTotals | None = None,
    years: dict[int, YearStats] | None = None,
    snippet_stats: SnippetStats | None = None,
    onscreen: OnscreenReport | None = None,
    poses: PoseReport | None = None,
) -> Path:
    """Write report.json plus per-figure CSV tables; returns the JSON path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {}
    if totals is not None:
        report["totals"] = totals.to_json()
    if years is not None:
        report["per_year"] = {str(y): s.to_json() for y, s in sorted(years.items())}
        _write_csv(
            out_dir / "fig2.csv",
            ["year", "count", "mean_dur_s", "std_dur_s"],
            [(y, s.count, s.mean_dur_s, s.std_dur_s) for y, s in sorted(years.items())],
        )
    if snippet_stats is not None:
        report["snippets"] = snippet_stats.to_json()
        for name, hist in (
            ("duration", snippet_stats.duration_hist),
            ("chars", snippet_stats.text_hist),
            ("tempo", snippet_stats.tempo_hist),
        ):
            _write_csv(out_dir / f"fig3_{name}.csv", ["bin_lo", "bin_hi", "count"], _hist_rows(hist))
    if onscreen is not None:
        report["onscreen"] = onscreen.to_json()
    if poses is not None:
        report["pose"] = poses.to_json()
        for axis, hist in poses.histograms.items():
            _write_csv(out_dir / f"fig4_{axis}.csv", ["bin_lo", "bin_hi", "count"], _hist_rows(hist))
    path = out_dir / "report.json"
    path.write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path
