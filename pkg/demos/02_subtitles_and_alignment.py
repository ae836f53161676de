"""Parse subtitles and forced-alignment output; measure their agreement.

Shows the two text timing sources side by side: WebVTT cues (lightly
edited, reliable timing) and aligner TSV (faithful text, patchy timing),
plus the coverage and timing-error metrics that drive the choice between
them.
"""

from corpusctl.textio import (
    alignment_coverage,
    filter_alignment,
    parse_alignment,
    parse_subtitles,
    subtitle_alignment_mae,
)

VTT = b"""WEBVTT

00:00:00.300 --> 00:00:01.900
Guten Tag, liebe <b>Zuschauer</b>

00:00:02.100 --> 00:00:04.200
heute sprechen wir von Bildung
"""

# sentence_idx  word_idx  word  start_ms  end_ms (empty = aligner failed)
TSV = b"""0\t0\tGuten\t310\t650
0\t1\tTag\t700\t1050
0\t2\tliebe\t1100\t1400
0\t3\tZuschauer\t1450\t1880
1\t0\theute\t2150\t2500
1\t1\tsprechen\t2550\t2980
1\t2\twir\t\t
1\t3\tvon\t3300\t3480
1\t4\tBildung\t3550\t4150
2\t0\tDieser\t\t
2\t1\tSatz\t5000\t5400
2\t2\tfehlt\t5450\t5900
"""

cues = parse_subtitles(VTT)
print("cues:")
for cue in cues:
    print(f"  [{cue.start_ms:>6} - {cue.end_ms:>6}] {cue.text}")

words = parse_alignment(TSV)
kept, dropped = filter_alignment(words)
print(f"\nsentences kept: {kept}, dropped: {dropped} (boundary words must be timed)")

coverage = alignment_coverage(words)
print(
    f"word coverage {coverage.word_coverage:.0%}, "
    f"boundary-complete sentences {coverage.sentence_boundary_coverage:.0%}"
)

mae = subtitle_alignment_mae(cues, words)
print(
    f"\nsubtitle timing error: MAE {mae.mae_ms:.0f} ms over {mae.contribution_count} "
    f"boundary contributions, {mae.outlier_count} above 1 s"
)
