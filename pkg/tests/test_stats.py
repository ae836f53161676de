import math

import numpy as np
import pytest

from corpusctl.diarize import OnscreenEvidence
from corpusctl.errors import ValidationError
from corpusctl.snippeter import Snippet
from corpusctl.stats import (
    RunningMoments,
    SegmentLabel,
    corpus_overview,
    moments,
    onscreen_fractions,
    per_year_stats,
    pose_distributions,
    snippet_histograms,
    write_report,
)

from conftest import make_manifest, make_record


def snippet(snippet_id, duration_s, text, overlap_group=None):
    return Snippet(
        id=snippet_id,
        podcast_id="p",
        start_ms=0,
        end_ms=int(round(duration_s * 1000)),
        text=text,
        unit_count=1,
        source="subtitle",
        overlap_group=overlap_group,
    )


class TestCorpusOverview:
    def reference_totals_fixture(self):
        # 480 recordings of 360 s = 48.0 h; per recording the segments
        # label 20.25 s jingle, 21 s silence, the rest speech
        records = []
        segments = {}
        for k in range(480):
            rid = f"r{k:03d}"
            records.append(make_record(rid, f"20{10 + k % 10:02d}-01-01", duration_s=360.0))
            segments[rid] = [
                SegmentLabel(0, 20_250, "jingle"),
                SegmentLabel(20_250, 41_250, "silence"),
                SegmentLabel(41_250, 360_000, "speech"),
            ]
        return make_manifest(records), segments

    def test_reference_totals_by_construction(self):
        manifest, segments = self.reference_totals_fixture()
        totals = corpus_overview(manifest, segments)
        assert totals.total_h == pytest.approx(48.0, abs=1e-9)
        assert totals.hours_by_label["jingle"] == pytest.approx(2.7, abs=1e-9)
        assert totals.hours_by_label["silence"] == pytest.approx(2.8, abs=1e-9)
        # 1 ms over 48 h is ~2.8e-7 h
        assert totals.hours_by_label["speech"] == pytest.approx(42.5, abs=1e-3 / 3600)

    def test_label_plus_unlabeled_is_total(self):
        manifest, segments = self.reference_totals_fixture()
        totals = corpus_overview(manifest, segments)
        together = sum(totals.hours_by_label.values()) + totals.unlabeled_h
        assert together == pytest.approx(totals.total_h, abs=1e-3 / 3600)

    def test_empty_manifest_all_zero(self):
        totals = corpus_overview(make_manifest([]), {})
        assert totals.total_h == 0.0
        assert all(v == 0.0 for v in totals.hours_by_label.values())

    def test_minute_of_speech(self):
        manifest = make_manifest([make_record("a", duration_s=60.0)])
        totals = corpus_overview(manifest, {"a": [SegmentLabel(0, 60_000, "speech")]})
        assert totals.hours_by_label["speech"] == pytest.approx(1 / 60)

    def test_overlapping_segments_rejected(self):
        manifest = make_manifest([make_record("a", duration_s=60.0)])
        segments = {"a": [SegmentLabel(0, 30_000, "speech"), SegmentLabel(29_000, 60_000, "silence")]}
        with pytest.raises(ValidationError):
            corpus_overview(manifest, segments)

    def test_missing_duration_rejected(self):
        manifest = make_manifest([make_record("a")])
        with pytest.raises(ValidationError):
            corpus_overview(manifest, {})


class TestPerYearStats:
    def test_mean_and_population_std(self):
        manifest = make_manifest(
            [
                make_record("a", "2014-02-01", duration_s=300.0),
                make_record("b", "2014-08-01", duration_s=420.0),
            ]
        )
        table = per_year_stats(manifest)
        assert table[2014].count == 2
        assert table[2014].mean_dur_s == pytest.approx(360.0)
        assert table[2014].std_dur_s == pytest.approx(60.0)

    def test_single_recording_std_zero(self):
        table = per_year_stats(make_manifest([make_record("a", "2010-01-01", duration_s=200.0)]))
        assert table[2010].std_dur_s == 0.0

    def test_interview_years_have_longer_means(self):
        records = []
        for k in range(10):
            records.append(make_record(f"s{k}", f"2009-0{1 + k % 9}-01", duration_s=200.0 + k))
            records.append(make_record(f"i{k}", f"2014-0{1 + k % 9}-01", duration_s=330.0 + k))
        table = per_year_stats(make_manifest(records))
        assert table[2014].mean_dur_s > table[2009].mean_dur_s

    def test_permutation_invariance(self):
        records = [make_record(f"r{k}", f"201{k % 3}-03-01", duration_s=100.0 + k) for k in range(9)]
        forward = per_year_stats(make_manifest(records))
        backward = per_year_stats(make_manifest(list(reversed(records))))
        assert forward == backward


class TestSnippetHistograms:
    def test_tempo_arithmetic(self):
        stats = snippet_histograms([snippet("a", 5.0, "x" * 100)])
        assert stats.tempo_s_per_char.mean == pytest.approx(0.05)
        assert stats.tempo_chars_per_s.mean == pytest.approx(20.0)

    def test_constructed_moments_reproduced_within_one_percent(self):
        # two-point distribution has exactly the target moments
        snippets = []
        for k in range(200):
            duration = 1.0 if k % 2 else 13.4  # mean 7.2, std 6.2
            chars = 20 if k % 2 else 228  # mean 124, std 104
            snippets.append(snippet(f"s{k}", duration, "x" * chars))
        stats = snippet_histograms(snippets)
        assert stats.duration_s.mean == pytest.approx(7.2, rel=0.01)
        assert stats.duration_s.std == pytest.approx(6.2, rel=0.01)
        assert stats.text_chars.mean == pytest.approx(124.0, rel=0.01)
        assert stats.text_chars.std == pytest.approx(104.0, rel=0.01)

    def test_empty_list(self):
        stats = snippet_histograms([])
        assert stats.count == 0
        assert sum(stats.duration_hist.counts) == 0

    def test_histogram_mass_equals_sample_count(self):
        rng = np.random.default_rng(8)
        snippets = [
            snippet(f"s{k}", float(rng.uniform(0.5, 30)), "x" * int(rng.integers(1, 300)))
            for k in range(137)
        ]
        stats = snippet_histograms(snippets)
        assert sum(stats.duration_hist.counts) == 137
        assert sum(stats.text_hist.counts) == 137
        assert sum(stats.tempo_hist.counts) == 137

    def test_empty_text_excluded_from_tempo_and_reported(self):
        stats = snippet_histograms([snippet("a", 5.0, ""), snippet("b", 5.0, "ab")])
        assert stats.empty_text_count == 1
        assert stats.tempo_s_per_char.n == 1

    def test_overlap_windows_excluded_by_default(self):
        snippets = [snippet("a", 5.0, "ab"), snippet("b", 5.0, "ab", overlap_group=1)]
        assert snippet_histograms(snippets).count == 1
        assert snippet_histograms(snippets, include_overlap=True).count == 2


class TestOnscreenFractions:
    def evidence(self, visible, speaking, fps=25.0, snippet_id="s"):
        return OnscreenEvidence(snippet_id, fps, visible, speaking)

    def test_scripted_fractions_exact(self):
        # 10000 frames at 25 fps: 6600 visible, 5800 of those speaking
        visible = [k < 6600 for k in range(10000)]
        speaking = [k < 5800 for k in range(10000)]
        total_s = 10000 / 25.0
        report = onscreen_fractions([self.evidence(visible, speaking)], total_s)
        assert report.visible_fraction == pytest.approx(0.66, abs=1 / 10000)
        assert report.active_fraction == pytest.approx(0.58, abs=1 / 10000)

    def test_target_never_visible(self):
        report = onscreen_fractions([self.evidence([False] * 100, [False] * 100)], 4.0)
        assert (report.visible_fraction, report.active_fraction, report.listening_hours) == (0, 0, 0)

    def test_listening_hours_corollary(self):
        # visible 10 h, speaking 6.2 h of it -> 3.8 h listening
        fps = 1.0
        visible_frames = 36000
        speaking_frames = 22320
        visible = [True] * visible_frames
        speaking = [k < speaking_frames for k in range(visible_frames)]
        report = onscreen_fractions([self.evidence(visible, speaking, fps=fps)], 50_000.0)
        assert report.listening_hours == pytest.approx(3.8, abs=1e-9)

    def test_both_denominators_emitted(self):
        report = onscreen_fractions(
            [self.evidence([True] * 50, [True] * 50, fps=1.0)], 100.0, speech_duration_s=80.0
        )
        assert report.visible_fraction == pytest.approx(0.5)
        assert report.visible_fraction_speech == pytest.approx(50 / 80)


class TestPoseDistributions:
    def test_all_zero(self):
        report = pose_distributions([{"yaw": 0.0, "pitch": 0.0, "roll": 0.0}] * 10)
        assert all(v == 0.0 for v in report.quantiles["yaw"].values())

    def test_single_sample(self):
        report = pose_distributions([{"yaw": 10.0, "pitch": 10.0, "roll": 10.0}])
        assert all(v == 10.0 for axis in report.quantiles.values() for v in axis.values())

    def test_three_camera_positions_show_three_modes(self):
        rng = np.random.default_rng(9)
        angles = []
        for center, count in ((-40.0, 300), (0.0, 500), (40.0, 300)):
            for _ in range(count):
                angles.append({"yaw": center + float(rng.normal(0, 1.5)), "pitch": 0.0, "roll": 0.0})
        hist = pose_distributions(angles).histograms["yaw"]
        counts = np.array(hist.counts)
        edges = np.array(hist.edges)
        centers = (edges[:-1] + edges[1:]) / 2
        for mode in (-40, 0, 40):
            near = counts[np.abs(centers - mode) <= 3]
            far = counts[(np.abs(centers - mode) > 8) & (np.abs(centers - mode) < 15)]
            assert near.max() > 20
            assert near.max() > (far.max() if far.size else 0)

    def test_non_finite_rejected_with_index(self):
        angles = [{"yaw": 0.0, "pitch": 0.0, "roll": 0.0}, {"yaw": math.inf, "pitch": 0.0, "roll": 0.0}]
        with pytest.raises(ValidationError) as err:
            pose_distributions(angles)
        assert "index 1" in str(err.value)

    def test_histogram_mass(self):
        rng = np.random.default_rng(10)
        angles = [
            {"yaw": float(rng.normal(0, 30)), "pitch": 0.0, "roll": 0.0} for _ in range(321)
        ]
        report = pose_distributions(angles)
        assert sum(report.histograms["yaw"].counts) == 321


class TestMoments:
    def test_streaming_matches_two_pass(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            values = rng.normal(1e6, 50, size=int(rng.integers(1, 500)))
            mean2, std2 = moments(values.tolist())
            running = RunningMoments()
            for v in values:
                running.push(float(v))
            assert abs(running.mean - mean2) <= 1e-9 * max(1.0, abs(mean2))
            assert abs(running.std - std2) <= 1e-9 * max(1.0, abs(std2))

    def test_empty(self):
        assert moments([]) == (0.0, 0.0)
        empty = RunningMoments()
        assert (empty.mean, empty.std) == (0.0, 0.0)


def test_write_report_emits_figure_tables(tmp_path):
    manifest = make_manifest([make_record("a", "2014-01-01", duration_s=60.0)])
    totals = corpus_overview(manifest, {"a": [SegmentLabel(0, 60_000, "speech")]})
    years = per_year_stats(manifest)
    stats = snippet_histograms([snippet("s", 5.0, "hello")])
    poses = pose_distributions([{"yaw": 1.0, "pitch": 2.0, "roll": 3.0}])
    report_path = write_report(tmp_path, totals=totals, years=years, snippet_stats=stats, poses=poses)
    assert report_path.is_file()
    for name in ("fig2.csv", "fig3_duration.csv", "fig3_chars.csv", "fig3_tempo.csv",
                 "fig4_yaw.csv", "fig4_pitch.csv", "fig4_roll.csv"):
        assert (tmp_path / name).is_file(), name
