"""Cut aligned speech into snippets: units, pause cuts, duration budgets.

The same word material snippeted three ways (words, inter-pausal units,
sentences), then packed under a duration budget, with and without
overlapping augmentation windows.
"""

from corpusctl.snippeter import merge_units, segment_units, snippets_from_subtitles
from corpusctl.textio import SubtitleCue, WordAlignment

# one sentence with a clear mid-sentence pause, then a second sentence
WORDS = [
    WordAlignment("Wir", 0, 250, 0, 0),
    WordAlignment("haben", 300, 620, 0, 1),
    WordAlignment("heute", 660, 1010, 0, 2),
    WordAlignment("viel", 1700, 1950, 0, 3),     # 690 ms pause before this
    WordAlignment("vor", 2000, 2260, 0, 4),
    WordAlignment("Deshalb", 3400, 3800, 1, 0),  # new sentence after 1.1 s
    WordAlignment("beginnen", 3850, 4300, 1, 1),
    WordAlignment("wir", 4350, 4500, 1, 2),
]

for kind in ("word", "ipu", "sentence"):
    units = segment_units(WORDS, pause_ms=400, kind=kind)
    print(f"{kind:>8}: " + " | ".join(f"[{u.start_ms}-{u.end_ms}] {u.text}" for u in units))

units = segment_units(WORDS, pause_ms=400, kind="ipu")
print("\npacking those IPUs under a 3 s budget:")
for snippet in merge_units(units, max_duration_s=3.0, podcast_id="ep1"):
    print(f"  {snippet.id}: {snippet.unit_count} units, '{snippet.text}'")

print("\nsame with stride 1 (overlapping windows for augmentation):")
for snippet in merge_units(units, max_duration_s=3.0, stride_units=1, podcast_id="ep1"):
    print(f"  group {snippet.overlap_group}: [{snippet.start_ms}-{snippet.end_ms}] '{snippet.text}'")

print("\nsnippets can come straight from subtitle cues instead:")
cues = [
    SubtitleCue(0, 0, 2260, "Wir haben heute viel vor."),
    SubtitleCue(1, 3400, 4500, "Deshalb beginnen wir."),
]
for snippet in snippets_from_subtitles(cues, max_duration_s=10.0, max_gap_ms=800, podcast_id="ep1"):
    print(f"  [{snippet.start_ms}-{snippet.end_ms}] ({snippet.source}) '{snippet.text}'")
