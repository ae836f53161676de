"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints a PASS line once its assertions hold, so a verbose run
reads as a checklist. Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import json
import sys
import threading
import time
import warnings

import numpy as np
import pytest

from corpusctl.agenet import EmbeddingSample, SoftmaxModel, evaluate, grad_check, softmax, stratified_split, train
from corpusctl.backends import BackendSession
from corpusctl.backends.synth import build_validation_scenario, listening_interview_scenario, scenario_truth, target_anchor
from corpusctl.diarize import DiarizeConfig, evaluate_pipeline, run_snippet
from corpusctl.reviewsvc import ReviewDecision, ReviewItem, ReviewStore
from corpusctl.snippeter import Unit, merge_units, segment_units
from corpusctl.stats import SegmentLabel, corpus_overview, snippet_histograms
from corpusctl.textio import SubtitleCue, WordAlignment, alignment_coverage, parse_subtitles, subtitle_alignment_mae
from corpusctl.video import CropPlan, CropRect, Scene, detect_scenes, read_y4m, render_crops, write_y4m

from conftest import DATA_DIR, make_manifest, make_record, solid_frame, make_stream
from test_agenet import gaussian_classes
from test_backends import scenario_scenes, synth_command, write_scenario
from test_diarize import box as face_box
from test_snippeter import oracle_pack, random_units
from test_stats import snippet as make_snippet
from test_textio import sentence_words


def report(name: str) -> None:
    print(f"[ACCEPTANCE] PASS {name}")


# ---------------------------------------------------------------------------

def test_snippeter_oracle_equivalence():
    """merge_units equals the exhaustive packer on 1,000 seeded unit lists."""
    rng = np.random.default_rng(1234)
    started = time.monotonic()
    for k in range(1000):
        units = random_units(rng)
        budget = float(rng.uniform(0.5, 20.0))
        stride = None if k % 2 == 0 else int(rng.integers(1, 4))
        assert merge_units(units, budget, stride_units=stride, podcast_id="p") == oracle_pack(
            units, budget, stride_units=stride, podcast_id="p"
        )
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f} s"
    report(f"snippeter oracle equivalence (1000 cases, {elapsed:.2f} s)")


def test_snippeter_property_suite_on_fuzzed_inputs():
    """Budget, pause-cut and partition invariants on 10,000 fuzzed inputs."""
    rng = np.random.default_rng(4321)
    for _ in range(5000):
        units = random_units(rng)
        budget_s = float(rng.uniform(0.5, 20.0))
        budget_ms = round(budget_s * 1000)
        snippets = merge_units(units, budget_s)
        consumed = []
        for snippet in snippets:
            if snippet.unit_count > 1:
                assert snippet.end_ms - snippet.start_ms <= budget_ms
            members = [
                u for u in units
                if snippet.start_ms <= u.start_ms and u.end_ms <= snippet.end_ms
            ]
            assert len(members) == snippet.unit_count
            consumed.extend(members)
        assert consumed == units  # partition: no loss, no duplication, in order
    for _ in range(5000):
        spans = []
        cursor = 0
        for _ in range(int(rng.integers(1, 20))):
            cursor += int(rng.integers(0, 800))
            duration = int(rng.integers(50, 1200))
            spans.append((cursor, cursor + duration))
            cursor += duration
        words = [WordAlignment(f"w{k}", s, e, 0, k) for k, (s, e) in enumerate(spans)]
        pause = int(rng.integers(50, 600))
        units = segment_units(words, pause_ms=pause, kind="ipu")
        for prev, cur in zip(units, units[1:]):
            assert cur.start_ms - prev.end_ms >= pause  # cuts only at pauses
    report("snippeter property suite (10,000 fuzzed inputs)")


# ---------------------------------------------------------------------------

def _solid_scene_stream(rng, n_cuts, min_len=15):
    levels = [0, 96, 192, 255]
    lengths = [int(rng.integers(min_len, 40)) for _ in range(n_cuts + 1)]
    frames = []
    cuts = []
    position = 0
    for index, length in enumerate(lengths):
        level = levels[index % 2 * 3]  # alternate 0 / 255
        frames += [solid_frame(32, 32, level)] * length
        position += length
        if index < n_cuts:
            cuts.append(position)
    return frames, cuts


def test_scene_detection_recovers_known_cuts_exactly():
    rng = np.random.default_rng(99)
    for n_cuts in list(range(0, 21, 4)) + [1, 7, 13, 20]:
        frames, cuts = _solid_scene_stream(rng, n_cuts)
        data = write_y4m(make_stream(frames, 32, 32))
        scenes = detect_scenes(read_y4m(data), threshold=27.0, min_scene_frames=15)
        got_cuts = [scene.start_frame for scene in scenes[1:]]
        assert got_cuts == cuts, f"K={n_cuts}: {got_cuts} != {cuts}"
        assert scenes[0].start_frame == 0
        assert scenes[-1].end_frame == len(frames)
    report("scene detection: exact cut recovery for K <= 20")


def test_scene_detection_threshold_monotonicity():
    rng = np.random.default_rng(100)
    for _ in range(100):
        count = int(rng.integers(2, 30))
        frames = []
        for _ in range(count):
            base = solid_frame(16, 16, 0)
            frames.append(
                type(base)(
                    y=rng.integers(0, 256, (16, 16), dtype=np.uint8), u=base.u, v=base.v
                )
            )
        counts = [
            len(detect_scenes(make_stream(frames, 16, 16), threshold, 2))
            for threshold in (5.0, 15.0, 40.0, 90.0, 200.0)
        ]
        assert counts == sorted(counts, reverse=True)
    report("scene detection: monotonicity in threshold on 100 random streams")


# ---------------------------------------------------------------------------

def _run_validation(tmp_path, sigma_asd, sigma_emb, sigma_box, seed):
    scenario = build_validation_scenario(
        100, seed=7, sigma_asd=sigma_asd, sigma_emb=sigma_emb, sigma_box=sigma_box
    )
    path = write_scenario(tmp_path, scenario, name=f"val_{seed}.json")
    truth = scenario_truth(scenario)
    reference = [target_anchor(128)]
    decisions = []
    with BackendSession(synth_command(path, seed=seed)) as session:
        for snippet in scenario["snippets"]:
            scenes = scenario_scenes(scenario, snippet["id"])
            result = run_snippet(session, snippet["id"], scenes, reference, DiarizeConfig())
            decisions.append(result.decision)
    return evaluate_pipeline(decisions, truth)


def test_diarization_validation_analog(tmp_path):
    """100-snippet calibrated-noise analog of the validation protocol."""
    started = time.monotonic()
    noisy = _run_validation(tmp_path, sigma_asd=0.15, sigma_emb=0.1, sigma_box=0.5, seed=11)
    assert noisy.precision == 1.0, noisy
    assert noisy.accuracy >= 0.94, noisy
    clean = _run_validation(tmp_path, sigma_asd=0.0, sigma_emb=0.0, sigma_box=0.0, seed=11)
    assert clean.precision == 1.0 and clean.recall == 1.0, clean
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"validation runs took {elapsed:.1f} s"
    report(
        "diarization validation analog "
        f"(noisy: acc={noisy.accuracy:.2f} prec={noisy.precision:.2f}; "
        f"sigma=0: prec=rec=1.0; {elapsed:.1f} s)"
    )


def test_listening_interview_discards_snippet(tmp_path):
    scenario = listening_interview_scenario()
    path = write_scenario(tmp_path, scenario)
    with BackendSession(synth_command(path)) as session:
        result = run_snippet(
            session, "interview_listening", scenario_scenes(scenario, "interview_listening"),
            [target_anchor(128)], DiarizeConfig(),
        )
    assert not result.decision.accepted
    assert result.decision.reason == "scene_without_valid_face"
    report("interview scenario: listening scene discards the whole snippet")


# ---------------------------------------------------------------------------

def test_subtitle_mae_280ms_offset_fixture():
    words = []
    cues = []
    base = 0
    for sid in range(25):
        tokens = [f"wort{sid}_{k}" for k in range(4)]
        for k, token in enumerate(tokens):
            start = base + k * 500
            words.append(WordAlignment(token, start, start + 400, sid, k))
        cues.append(SubtitleCue(sid, base + 280, base + 3 * 500 + 400 + 280, " ".join(tokens)))
        base += 4000
    result = subtitle_alignment_mae(cues, words)
    assert result.mae_ms == pytest.approx(280.0, abs=0.5)
    assert result.outlier_count == 0
    report(f"subtitle timing MAE fixture (mae={result.mae_ms:.1f} ms, outliers=0)")


def test_alignment_coverage_62_54_exact():
    words = []
    sid = 0
    for _ in range(54):
        words += sentence_words(sid, [(0, 10), (20, 30), (40, 50), (60, 70)])
        sid += 1
    for _ in range(32):
        words += sentence_words(sid, [None, (20, 30), None, None])
        sid += 1
    for _ in range(14):
        words += sentence_words(sid, [None, None, None, None])
        sid += 1
    coverage = alignment_coverage(words)
    assert coverage.word_coverage == 0.62
    assert coverage.sentence_boundary_coverage == 0.54
    report("alignment coverage fixture: exactly (0.62, 0.54)")


# ---------------------------------------------------------------------------

def test_stats_self_consistency():
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
    totals = corpus_overview(make_manifest(records), segments)
    one_ms_h = 1e-3 / 3600
    assert totals.total_h == pytest.approx(48.0, abs=one_ms_h)
    assert totals.hours_by_label["jingle"] == pytest.approx(2.7, abs=one_ms_h)
    assert totals.hours_by_label["silence"] == pytest.approx(2.8, abs=one_ms_h)
    assert totals.hours_by_label["speech"] == pytest.approx(42.5, abs=one_ms_h)

    snippets = []
    for k in range(400):
        duration = 1.0 if k % 2 else 13.4
        chars = 20 if k % 2 else 228
        snippets.append(make_snippet(f"s{k}", duration, "x" * chars))
    stats = snippet_histograms(snippets)
    assert stats.duration_s.mean == pytest.approx(7.2, rel=0.01)
    assert stats.duration_s.std == pytest.approx(6.2, rel=0.01)
    report("stats self-consistency (speech 42.5 h exact; snippet moments within 1%)")


# ---------------------------------------------------------------------------

def test_agenet_gradients_and_synthetic_16_class():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        n_classes = int(rng.integers(2, 6))
        dim = int(rng.integers(1, 8))
        samples = [
            EmbeddingSample(rng.normal(size=dim), 2006 + int(rng.integers(0, n_classes)))
            for _ in range(int(rng.integers(n_classes, 30)))
        ]
        years = tuple(sorted({s.year for s in samples}))
        model = SoftmaxModel(rng.normal(size=(len(years), dim)), rng.normal(size=len(years)), years)
        worst = max(worst, grad_check(model, samples, epsilon=1e-5))
    assert worst < 1e-4

    logits = rng.normal(0, 30, size=(500, 16))
    assert np.all(np.abs(softmax(logits).sum(axis=1) - 1.0) < 1e-12)

    samples = gaussian_classes(16, 30, 24, seed=5)
    train_set, test_set = stratified_split(samples, 0.2, seed=0)
    model, _ = train(train_set, learning_rate=1.0, epochs=400, l2=1e-4, seed=0)
    metrics = evaluate(model, test_set)
    assert metrics.macro_f1 >= 0.9
    assert metrics.r_squared >= 0.9
    report(
        "year probe: grad check "
        f"max_rel_err={worst:.2e}; 16-class macro-F1={metrics.macro_f1:.2f}, "
        f"R2={metrics.r_squared:.2f}"
    )


# ---------------------------------------------------------------------------

def test_subtitle_fixture_corpus_byte_for_byte():
    fixture_dir = DATA_DIR / "subtitles"
    fixtures = sorted(p for p in fixture_dir.iterdir() if not p.name.endswith(".expected.json"))
    assert len(fixtures) == 10
    for path in fixtures:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cues = parse_subtitles(path.read_bytes())
        rows = [
            {"index": c.index, "start_ms": c.start_ms, "end_ms": c.end_ms, "text": c.text}
            for c in cues
        ]
        got = (json.dumps(rows, ensure_ascii=False, indent=2) + "\n").encode("utf-8")
        expected = (fixture_dir / (path.name + ".expected.json")).read_bytes()
        assert got == expected, f"{path.name} parse mismatch"
    report("subtitle parser fixtures (10 files, byte-for-byte)")


def test_y4m_identity_roundtrip_bitwise():
    rng = np.random.default_rng(31)
    frames = []
    for _ in range(4):
        base = solid_frame(16, 16, 0)
        frames.append(
            type(base)(
                y=rng.integers(0, 256, (16, 16), dtype=np.uint8),
                u=rng.integers(0, 256, (8, 8), dtype=np.uint8),
                v=rng.integers(0, 256, (8, 8), dtype=np.uint8),
            )
        )
    original = write_y4m(make_stream(frames, 16, 16))
    stream = read_y4m(original)
    plan = CropPlan({k: CropRect(0, 0, 16, 16) for k in range(4)})
    rendered = render_crops(stream, plan, 16)
    assert write_y4m(rendered) == original
    report("y4m read -> identity crop -> write is bitwise lossless")


# ---------------------------------------------------------------------------

def test_review_service_replay_and_conflicts(tmp_path):
    def fresh_items():
        return [
            ReviewItem(snippet_id=f"s{k}", text=f"t{k}", podcast_date="2014-03-07", start_ms=k)
            for k in range(25)
        ]

    ledger = tmp_path / "ledger.ndjson"
    store = ReviewStore(ledger, fresh_items())
    rng = np.random.default_rng(52)
    for _ in range(1000):
        sid = f"s{int(rng.integers(0, 25))}"
        store.submit_decision(
            ReviewDecision(
                snippet_id=sid,
                base_revision=store.get(sid).revision,
                verdict="accept" if rng.random() < 0.5 else "reject",
                corrected_text=None if rng.random() < 0.5 else f"edit {int(rng.integers(1e6))}",
                reviewer="storm",
            )
        )
    rebuilt = ReviewStore(ledger, fresh_items())
    assert rebuilt.state_snapshot() == store.state_snapshot()

    conflict_store = ReviewStore(tmp_path / "conflict.ndjson", fresh_items())
    barrier = threading.Barrier(2)
    outcomes = []

    def submit(verdict):
        barrier.wait()
        try:
            conflict_store.submit_decision(
                ReviewDecision(snippet_id="s0", base_revision=0, verdict=verdict)
            )
            outcomes.append("won")
        except Exception:
            outcomes.append("conflict")

    threads = [threading.Thread(target=submit, args=(v,)) for v in ("accept", "reject")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(outcomes) == ["conflict", "won"]
    report("review service: 1000-decision replay determinism; single conflict winner")
