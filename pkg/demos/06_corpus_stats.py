"""Corpus statistics over a constructed corpus: totals, per-year tables,
snippet histograms, on-screen fractions, pose distributions.

Also writes the report.json + per-figure CSV bundle to a temp directory.
"""

import tempfile
from datetime import date

import numpy as np

from corpusctl.catalog import CorpusManifest, PodcastRecord
from corpusctl.diarize import OnscreenEvidence
from corpusctl.snippeter import Snippet
from corpusctl.stats import (
    SegmentLabel,
    corpus_overview,
    onscreen_fractions,
    per_year_stats,
    pose_distributions,
    snippet_histograms,
    write_report,
)

rng = np.random.default_rng(0)

records = []
segments = {}
for k in range(120):
    year = 2006 + k % 16
    interview_era = 2012 <= year <= 2017
    duration = float(rng.normal(330 if interview_era else 210, 30))
    rid = f"r{k:03d}"
    records.append(
        PodcastRecord(
            id=rid, date=date(year, 1 + k % 12, 1 + k % 28), title=rid,
            format="interview" if interview_era else "speech",
            media_path=f"media/{rid}.mp4", duration_s=duration,
        )
    )
    jingle = 4000
    silence = 5000
    total_ms = int(duration * 1000)
    segments[rid] = [
        SegmentLabel(0, jingle, "jingle"),
        SegmentLabel(jingle, jingle + silence, "silence"),
        SegmentLabel(jingle + silence, total_ms, "speech"),
    ]

manifest = CorpusManifest.build(records)
totals = corpus_overview(manifest, segments)
print(f"total {totals.total_h:.2f} h; by label "
      + ", ".join(f"{k} {v:.2f} h" for k, v in totals.hours_by_label.items() if v))

years = per_year_stats(manifest)
print("\nper-year means (the interview era runs longer):")
for year in (2009, 2014):
    row = years[year]
    print(f"  {year}: n={row.count}, mean {row.mean_dur_s:.0f} s, std {row.std_dur_s:.0f} s")

snippets = [
    Snippet(f"s{k}", "r000", 0, int(max(400, rng.gamma(2.2, 3000))), "x" * int(rng.gamma(2.0, 60)),
            1, "subtitle")
    for k in range(2000)
]
snip_stats = snippet_histograms(snippets)
print(
    f"\nsnippets: duration {snip_stats.duration_s.mean:.1f} +/- {snip_stats.duration_s.std:.1f} s, "
    f"text {snip_stats.text_chars.mean:.0f} +/- {snip_stats.text_chars.std:.0f} chars, "
    f"tempo {snip_stats.tempo_s_per_char.mean * 1000:.0f} ms/char"
)

evidence = []
for k in range(50):
    frames = 250
    visible = [bool(rng.random() < 0.66) for _ in range(frames)]
    speaking = [v and rng.random() < 0.88 for v in visible]
    evidence.append(OnscreenEvidence(f"s{k}", 25.0, visible, speaking))
onscreen = onscreen_fractions(evidence, total_duration_s=50 * 10.0)
print(
    f"on-screen: visible {onscreen.visible_fraction:.0%}, active speaker "
    f"{onscreen.active_fraction:.0%}, listening {onscreen.listening_hours * 3600:.0f} s"
)

angles = []
for camera_yaw, share in ((-35.0, 0.2), (0.0, 0.6), (35.0, 0.2)):
    for _ in range(int(3000 * share)):
        angles.append({
            "yaw": camera_yaw + float(rng.normal(0, 6)),
            "pitch": float(rng.normal(4, 5)),
            "roll": float(rng.normal(0, 6)),
        })
poses = pose_distributions(angles)
print("\nyaw quantiles (three camera positions show as spread):", poses.quantiles["yaw"])

out_dir = tempfile.mkdtemp(prefix="corpusctl-report-")
path = write_report(out_dir, totals=totals, years=years, snippet_stats=snip_stats,
                    onscreen=onscreen, poses=poses)
print(f"\nreport bundle written to {path.parent}")
