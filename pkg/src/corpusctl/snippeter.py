"""Cut timed material into audio/video/text snippets.

Snippets are time spans, not media files: they carry the span, the joined
text and enough provenance to cut the actual media later. Units (words,
inter-pausal units, sentences, or subtitle cues) are packed left to right
into snippets no longer than a duration budget, cutting only at pauses.
"""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import SUBTITLE_ERA_START, PodcastRecord
from .errors import ValidationError
from .textio import SubtitleCue, WordAlignment

__all__ = [
    "Unit",
    "Snippet",
    "UnusableRecordError",
    "segment_units",
    "merge_units",
    "snippets_from_subtitles",
    "select_source",
    "DEFAULT_PAUSE_MS",
    "DEFAULT_MAX_DURATION_S",
]

DEFAULT_PAUSE_MS = 200
DEFAULT_MAX_DURATION_S = 10.0

UNIT_KINDS = ("word", "ipu", "sentence", "cue")


class UnusableRecordError(ValidationError):
    """The record has neither usable subtitles nor a transcript to align."""


@dataclass(frozen=True)
class Unit:
    kind: str
    start_ms: int
    end_ms: int
    text: str
    source: str  # "alignment" | "subtitle"

    def __post_init__(self):
        if self.start_ms >= self.end_ms:
            raise ValidationError(f"unit span [{self.start_ms}, {self.end_ms}) is empty")


@dataclass(frozen=True)
class Snippet:
    id: str
    podcast_id: str
    start_ms: int
    end_ms: int
    text: str
    unit_count: int
    source: str
    overlap_group: int | None = None

    def to_json(self) -> dict:
        data = {
            "id": self.id,
            "podcast_id": self.podcast_id,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "text": self.text,
            "unit_count": self.unit_count,
            "source": self.source,
        }
        if self.overlap_group is not None:
            data["overlap_group"] = self.overlap_group
        return data

    @classmethod
    def from_json(cls, data: dict) -> "Snippet":
        return cls(
            id=data["id"],
            podcast_id=data.get("podcast_id", ""),
            start_ms=data["start_ms"],
            end_ms=data["end_ms"],
            text=data.get("text", ""),
            unit_count=data.get("unit_count", 1),
            source=data.get("source", "alignment"),
            overlap_group=data.get("overlap_group"),
        )


def _check_units(units: list[Unit]) -> None:
    for prev, cur in zip(units, units[1:]):
        if cur.start_ms < prev.end_ms:
            raise ValidationError(
                f"units overlap or are out of order at {prev.end_ms} -> {cur.start_ms}"
            )


def segment_units(
    alignments: list[WordAlignment], pause_ms: int = DEFAULT_PAUSE_MS, kind: str = "ipu"
) -> list[Unit]:
    """Turn timed words of kept sentences into minimal units.

    kind="word" maps each timed word to a unit; kind="ipu" merges runs of
    adjacent timed words whose inter-word gap is below ``pause_ms`` (an
    untimed word breaks the run, since we cannot place a cut inside it);
    kind="sentence" spans each sentence from its first to its last timed
    word, keeping the full sentence text.
    """
    if kind not in ("word", "ipu", "sentence"):
        raise ValueError(f"unknown unit kind {kind!r}")
    if pause_ms <= 0:
        raise ValueError("pause_ms must be > 0")
    if not alignments:
        return []

    if kind == "sentence":
        units = []
        sentences: dict[int, list[WordAlignment]] = {}
        for word in alignments:
            sentences.setdefault(word.sentence_idx, []).append(word)
        for idx in sorted(sentences):
            words = sorted(sentences[idx], key=lambda w: w.word_idx_in_sentence)
            timed = [w for w in words if w.timed]
            if not timed:
                continue
            units.append(
                Unit(
                    kind="sentence",
                    start_ms=timed[0].start_ms,
                    end_ms=timed[-1].end_ms,
                    text=" ".join(w.word for w in words),
                    source="alignment",
                )
            )
        units.sort(key=lambda u: u.start_ms)
        _check_units(units)
        return units

    if kind == "word":
        units = [
            Unit("word", w.start_ms, w.end_ms, w.word, "alignment")
            for w in alignments
            if w.timed
        ]
        units.sort(key=lambda u: u.start_ms)
        _check_units(units)
        return units

    # inter-pausal units: maximal runs of consecutive timed words with
    # gaps below the pause threshold
    units = []
    run: list[WordAlignment] = []

    def flush():
        if run:
            units.append(
                Unit(
                    kind="ipu",
                    start_ms=run[0].start_ms,
                    end_ms=run[-1].end_ms,
                    text=" ".join(w.word for w in run),
                    source="alignment",
                )
            )
            run.clear()

    for word in alignments:
        if not word.timed:
            flush()
            continue
        if run and word.start_ms - run[-1].end_ms >= pause_ms:
            flush()
        run.append(word)
    flush()
    units.sort(key=lambda u: u.start_ms)
    _check_units(units)
    return units


def _pack_window(units: list[Unit], start: int, budget_ms: int, max_gap_ms: int | None) -> int:
    """Greedy extension: last index (inclusive) of the window starting at ``start``."""
    end = start
    while end + 1 < len(units):
        nxt = units[end + 1]
        if max_gap_ms is not None and nxt.start_ms - units[end].end_ms >= max_gap_ms:
            break
        if nxt.end_ms - units[start].start_ms > budget_ms:
            break
        end += 1
    return end


def _make_snippet(
    units: list[Unit], start: int, end: int, podcast_id: str, group: int | None
) -> Snippet:
    span = units[start : end + 1]
    start_ms, end_ms = span[0].start_ms, span[-1].end_ms
    return Snippet(
        id=f"{podcast_id}_{start_ms}_{end_ms}" if podcast_id else f"snippet_{start_ms}_{end_ms}",
        podcast_id=podcast_id,
        start_ms=start_ms,
        end_ms=end_ms,
        text=" ".join(u.text for u in span),
        unit_count=len(span),
        source=span[0].source,
        overlap_group=group,
    )


def _pack(
    units: list[Unit],
    max_duration_s: float,
    stride_units: int | None,
    max_gap_ms: int | None,
    podcast_id: str,
) -> list[Snippet]:
    if max_duration_s <= 0:
        raise ValueError("max_duration_s must be > 0")
    if stride_units is not None and stride_units < 1:
        raise ValueError("stride_units must be >= 1")
    _check_units(units)
    budget_ms = round(max_duration_s * 1000)

    snippets: list[Snippet] = []
    start = 0
    group = 0
    while start < len(units):
        end = _pack_window(units, start, budget_ms, max_gap_ms)
        snippets.append(
            _make_snippet(units, start, end, podcast_id, group if stride_units else None)
        )
        if stride_units is None:
            start = end + 1
        else:
            # overlapping windows every stride_units units, but never skip a
            # unit: the next window starts no later than right after this one
            start = min(start + stride_units, end + 1)
            group += 1
    return snippets


def merge_units(
    units: list[Unit],
    max_duration_s: float = DEFAULT_MAX_DURATION_S,
    stride_units: int | None = None,
    podcast_id: str = "",
) -> list[Snippet]:
    """Pack units left to right into snippets within a duration budget.

    The budget covers the whole span (pauses between merged units count); a
    single unit longer than the budget still becomes a snippet of its own.
    Without ``stride_units`` the snippets partition the unit list. With it,
    overlapping windows start every ``stride_units`` units (for data
    augmentation) and ``overlap_group`` numbers the windows.
    """
    return _pack(units, max_duration_s, stride_units, None, podcast_id)


def snippets_from_subtitles(
    cues: list[SubtitleCue],
    max_duration_s: float = DEFAULT_MAX_DURATION_S,
    max_gap_ms: int = 1000,
    podcast_id: str = "",
) -> list[Snippet]:
    """Pack subtitle cues into snippets; a gap >= max_gap_ms always cuts."""
    units = [Unit("cue", c.start_ms, c.end_ms, c.text, "subtitle") for c in cues]
    return _pack(units, max_duration_s, None, max_gap_ms, podcast_id)


def select_source(record: PodcastRecord) -> str:
    """Pick "subtitle" or "alignment" for a record.

    Subtitles win when present and the record is from the subtitle era
    (2013 on, or explicitly overridden); otherwise fall back to the forced
    alignment of the transcript.
    """
    subtitle_ok = record.subtitle_path is not None and (
        record.date >= SUBTITLE_ERA_START or record.subtitle_override
    )
    if subtitle_ok:
        return "subtitle"
    if record.transcript_path is not None:
        return "alignment"
    raise UnusableRecordError(
        f"record {record.id}: no usable subtitle or transcript source"
    )
