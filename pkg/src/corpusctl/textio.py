"""Timed-text I/O: subtitles, transcripts and word alignments.

Parses WebVTT/SRT subtitle files and the word-level TSV emitted by a forced
aligner, tokenizes German transcripts into sentences, and computes the two
quality metrics the pipeline is steered by: how much of the text the aligner
managed to time, and how far subtitle timings drift from aligned word
boundaries.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

from .errors import ParseError, ValidationError

__all__ = [
    "SubtitleCue",
    "WordAlignment",
    "AlignmentCoverage",
    "MaeResult",
    "SubtitleOverlapWarning",
    "parse_subtitles",
    "parse_alignment",
    "tokenize_sentences",
    "normalize_token",
    "filter_alignment",
    "alignment_coverage",
    "subtitle_alignment_mae",
]


class SubtitleOverlapWarning(UserWarning):
    """Emitted once per cue pair clipped at the midpoint of their overlap."""


@dataclass(frozen=True)
class SubtitleCue:
    """One subtitle cue. ``index`` is the 0-based post-parse ordinal."""

    index: int
    start_ms: int
    end_ms: int
    text: str


@dataclass(frozen=True)
class WordAlignment:
    """One transcript word with optional aligner timing.

    A word counts as *timed* only when both stamps are present; the aligner
    leaves fields empty for words it could not place.
    """

    word: str
    start_ms: int | None
    end_ms: int | None
    sentence_idx: int
    word_idx_in_sentence: int

    @property
    def timed(self) -> bool:
        return self.start_ms is not None and self.end_ms is not None


@dataclass(frozen=True)
class AlignmentCoverage:
    word_coverage: float
    sentence_boundary_coverage: float
    discarded_sentences: int


@dataclass(frozen=True)
class MaeResult:
    """Subtitle-vs-alignment timing error.

    ``mae_ms`` is None when no cue could be matched to timed boundary words
    ("no overlap" is distinct from a perfect 0 ms error).
    """

    mae_ms: float | None
    outlier_count: int
    contribution_count: int
    matched_cues: int
    unmatched_cues: int


# --------------------------------------------------------------------------
# subtitle parsing

_VTT_TS = re.compile(r"^(?:(\d{1,2}):)?(\d{2}):(\d{2})\.(\d{3})$")
_SRT_TS = re.compile(r"^(\d{1,2}):(\d{2}):(\d{2}),(\d{3})$")
_TAG = re.compile(r"<[^>]*>|\{\\[^}]*\}")


def _parse_ts(token: str, pattern: re.Pattern, lineno: int) -> int:
    m = pattern.match(token.strip())
    if m is None:
        raise ParseError(f"malformed timestamp {token.strip()!r}", line=lineno)
    h, mi, s, ms = m.groups()
    hours = int(h) if h is not None else 0
    return ((hours * 60 + int(mi)) * 60 + int(s)) * 1000 + int(ms)


def _strip_tags(text: str) -> str:
    return re.sub(r"\s+", " ", _TAG.sub("", text)).strip()


def _detect_format(text: str) -> str:
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("WEBVTT"):
            return "webvtt"
        break
    for line in text.splitlines():
        if "-->" in line:
            left = line.split("-->")[0].strip()
            if _SRT_TS.match(left):
                return "srt"
            if _VTT_TS.match(left):
                return "webvtt"
    raise ParseError("cannot auto-detect subtitle format (neither WEBVTT header nor SRT timestamps)")


def _iter_cue_blocks(lines: list[str], start: int):
    """Yield (first_lineno, block_lines) for blank-line separated blocks."""
    block: list[tuple[int, str]] = []
    for i in range(start, len(lines)):
        line = lines[i]
        if line.strip():
            block.append((i + 1, line))
        elif block:
            yield block
            block = []
    if block:
        yield block


def parse_subtitles(data: bytes, fmt: str = "auto") -> list[SubtitleCue]:
    """Parse ``.vtt``/``.srt`` bytes into clean, ordered cues.

    Cues are sorted by start time; overlapping neighbours are clipped at the
    midpoint of the overlap (one SubtitleOverlapWarning per clip) and cues
    that collapse to zero duration are dropped. Styling tags are stripped and
    intra-cue newlines become single spaces.
    """
    if fmt not in ("webvtt", "srt", "auto"):
        raise ValueError(f"unknown subtitle format {fmt!r}")
    text = data.decode("utf-8-sig")
    if fmt == "auto":
        fmt = _detect_format(text)

    lines = text.splitlines()
    ts_pattern = _VTT_TS if fmt == "webvtt" else _SRT_TS
    start = 0
    if fmt == "webvtt":
        if not lines or not lines[0].strip().startswith("WEBVTT"):
            raise ParseError("missing WEBVTT header", line=1)
        start = 1

    raw: list[tuple[int, int, str]] = []
    for block in _iter_cue_blocks(lines, start):
        if fmt == "webvtt" and block[0][1].strip().startswith(("NOTE", "STYLE", "REGION")):
            continue
        ts_pos = next((k for k, (_, line) in enumerate(block) if "-->" in line), None)
        if ts_pos is None:
            continue  # stray identifier or numbering block without a cue
        lineno, ts_line = block[ts_pos]
        left, _, right = ts_line.partition("-->")
        right = right.strip().split(" ")[0]  # drop cue settings
        start_ms = _parse_ts(left, ts_pattern, lineno)
        end_ms = _parse_ts(right, ts_pattern, lineno)
        if start_ms >= end_ms:
            raise ParseError(f"cue start {start_ms} ms is not before end {end_ms} ms", line=lineno)
        body = _strip_tags(" ".join(line for _, line in block[ts_pos + 1 :]))
        raw.append((start_ms, end_ms, body))

    raw.sort(key=lambda c: (c[0], c[1]))
    clipped: list[list] = []
    for start_ms, end_ms, body in raw:
        # clip at the overlap midpoint; a cue collapsed by clipping is
        # dropped and the new start re-checked against its predecessor
        while clipped and start_ms < clipped[-1][1]:
            prev = clipped[-1]
            mid = (start_ms + prev[1]) // 2
            warnings.warn(
                f"cues overlap by {prev[1] - start_ms} ms; clipping both at {mid} ms",
                SubtitleOverlapWarning,
                stacklevel=2,
            )
            prev[1] = mid
            start_ms = mid
            if prev[0] >= prev[1]:
                clipped.pop()
        if start_ms < end_ms:
            clipped.append([start_ms, end_ms, body])
        else:
            warnings.warn(
                "cue collapsed to zero duration after overlap clipping; dropped",
                SubtitleOverlapWarning,
                stacklevel=2,
            )
    return [SubtitleCue(i, s, e, t) for i, (s, e, t) in enumerate(clipped)]


# --------------------------------------------------------------------------
# transcripts and alignment TSV

# German abbreviations that end with a period but do not end a sentence.
ABBREVIATIONS = frozenset(
    {
        "bzw.", "usw.", "dr.", "nr.", "ca.", "vgl.", "ggf.", "evtl.",
        "inkl.", "prof.", "sog.", "bspw.", "etc.", "str.", "abs.",
    }
)

_SINGLE_INITIAL = re.compile(r"^\w\.$", re.UNICODE)
_ORDINAL = re.compile(r"^\d+\.$")
_TRAILING_CLOSERS = "\"'»«)]"


def _ends_sentence(token: str) -> bool:
    core = token.rstrip(_TRAILING_CLOSERS)
    if not core:
        return False
    if core[-1] in "!?":
        return True
    if not core.endswith("."):
        return False
    low = core.lower()
    if low in ABBREVIATIONS or _SINGLE_INITIAL.match(low) or _ORDINAL.match(low):
        return False
    return True


def tokenize_sentences(text: str) -> list[list[str]]:
    """Split a plain-text transcript into sentences of whitespace tokens.

    Sentences end at ``.``, ``!`` or ``?`` followed by whitespace, except
    after known German abbreviations, single-letter initials (covers
    "z. B.", "u. a.") and ordinals like "3.".
    """
    sentences: list[list[str]] = []
    current: list[str] = []
    for token in text.split():
        current.append(token)
        if _ends_sentence(token):
            sentences.append(current)
            current = []
    if current:
        sentences.append(current)
    return sentences


def normalize_token(token: str) -> str:
    """Lowercase and strip punctuation; empty result means "ignore me"."""
    return re.sub(r"[^\w]|_", "", token, flags=re.UNICODE).casefold()


def _parse_ms_field(field: str, lineno: int) -> int | None:
    field = field.strip()
    if not field:
        return None
    try:
        return int(field)
    except ValueError:
        raise ParseError(f"bad millisecond value {field!r}", line=lineno) from None


def parse_alignment(data: bytes) -> list[WordAlignment]:
    """Parse the five-column alignment TSV.

    Columns: ``sentence_idx  word_idx  word  start_ms  end_ms``; empty timing
    fields mean the aligner failed on that word. An optional header row
    (first field ``sentence_idx``) is skipped. Within each sentence the
    present start times must be non-decreasing.
    """
    words: list[WordAlignment] = []
    text = data.decode("utf-8-sig")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if lineno == 1 and fields[0].strip() == "sentence_idx":
            continue
        if len(fields) != 5:
            raise ParseError(f"expected 5 tab-separated fields, got {len(fields)}", line=lineno)
        try:
            sentence_idx = int(fields[0])
            word_idx = int(fields[1])
        except ValueError:
            raise ParseError(f"bad index field in {line!r}", line=lineno) from None
        start_ms = _parse_ms_field(fields[3], lineno)
        end_ms = _parse_ms_field(fields[4], lineno)
        if start_ms is not None and end_ms is not None and start_ms >= end_ms:
            raise ValidationError(
                f"line {lineno}: word {fields[2]!r} has start_ms {start_ms} >= end_ms {end_ms}"
            )
        words.append(WordAlignment(fields[2], start_ms, end_ms, sentence_idx, word_idx))

    last_start: dict[int, int] = {}
    for w in words:
        if w.start_ms is None:
            continue
        prev = last_start.get(w.sentence_idx)
        if prev is not None and w.start_ms < prev:
            raise ValidationError(
                f"sentence {w.sentence_idx}: start times go backwards "
                f"({prev} -> {w.start_ms} at word {w.word!r})"
            )
        last_start[w.sentence_idx] = w.start_ms
    return words


# --------------------------------------------------------------------------
# alignment quality metrics

def _by_sentence(alignments: list[WordAlignment]) -> dict[int, list[WordAlignment]]:
    sentences: dict[int, list[WordAlignment]] = {}
    for w in alignments:
        sentences.setdefault(w.sentence_idx, []).append(w)
    for sent in sentences.values():
        sent.sort(key=lambda w: w.word_idx_in_sentence)
    return sentences


def filter_alignment(
    alignments: list[WordAlignment], max_interior_gap_fraction: float = 0.2
) -> tuple[list[int], list[int]]:
    """Split sentence indices into (kept, dropped).

    A sentence is kept iff its first and last words are timed and the
    fraction of untimed *interior* words is at most the threshold (0 when
    the sentence has no interior words).
    """
    kept: list[int] = []
    dropped: list[int] = []
    for idx, sent in sorted(_by_sentence(alignments).items()):
        if not (sent[0].timed and sent[-1].timed):
            dropped.append(idx)
            continue
        interior = sent[1:-1]
        absent = sum(1 for w in interior if not w.timed)
        fraction = absent / len(interior) if interior else 0.0
        (kept if fraction <= max_interior_gap_fraction else dropped).append(idx)
    return kept, dropped


def alignment_coverage(alignments: list[WordAlignment]) -> AlignmentCoverage:
    """Fraction of timed words and of boundary-complete sentences."""
    if not alignments:
        return AlignmentCoverage(0.0, 0.0, 0)
    timed = sum(1 for w in alignments if w.timed)
    sentences = _by_sentence(alignments)
    complete = sum(1 for sent in sentences.values() if sent[0].timed and sent[-1].timed)
    kept, dropped = filter_alignment(alignments)
    return AlignmentCoverage(
        word_coverage=timed / len(alignments),
        sentence_boundary_coverage=complete / len(sentences),
        discarded_sentences=len(dropped),
    )


def _match_cue_span(
    tokens: list[str], norm_words: list[str], cursor: int
) -> tuple[int, int, int] | None:
    """Greedy subsequence match of cue tokens into the word list.

    Returns (first_idx, last_idx, next_cursor) over word positions, or None
    when no token matches. Unmatchable tokens are skipped, which tolerates
    the mild editing subtitles undergo relative to the transcript.
    """
    first = last = None
    pos = cursor
    for token in tokens:
        try:
            idx = norm_words.index(token, pos)
        except ValueError:
            continue
        if first is None:
            first = idx
        last = idx
        pos = idx + 1
    if first is None or last is None:
        return None
    return first, last, last + 1


def subtitle_alignment_mae(
    cues: list[SubtitleCue], alignments: list[WordAlignment], outlier_ms: int = 1000
) -> MaeResult:
    """Mean absolute error between cue boundaries and aligned word times.

    Each cue whose first matched word has a start time and whose last matched
    word has an end time contributes two absolute differences (cue start vs
    word start, cue end vs word end). Cues whose text finds no words are
    counted as unmatched; if nothing matches the result carries mae_ms=None.
    """
    norm_words = [normalize_token(w.word) for w in alignments]
    contributions: list[int] = []
    matched = unmatched = 0
    cursor = 0
    for cue in sorted(cues, key=lambda c: c.start_ms):
        tokens = [t for t in (normalize_token(tok) for tok in cue.text.split()) if t]
        span = _match_cue_span(tokens, norm_words, cursor) if tokens else None
        if span is None:
            unmatched += 1
            continue
        first_idx, last_idx, cursor = span
        matched += 1
        first, last = alignments[first_idx], alignments[last_idx]
        if first.start_ms is None or last.end_ms is None:
            continue
        contributions.append(abs(cue.start_ms - first.start_ms))
        contributions.append(abs(cue.end_ms - last.end_ms))
    if not contributions:
        return MaeResult(None, 0, 0, matched, unmatched)
    return MaeResult(
        mae_ms=sum(contributions) / len(contributions),
        outlier_count=sum(1 for c in contributions if c > outlier_ms),
        contribution_count=len(contributions),
        matched_cues=matched,
        unmatched_cues=unmatched,
    )
