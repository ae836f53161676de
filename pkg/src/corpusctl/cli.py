"""The ``corpusctl`` command line.

Commands mirror the pipeline stages: fetch/verify the catalog, measure
text/alignment quality, cut snippets, detect scenes and render crops,
diarize against a backend, aggregate statistics, train the year probe, and
serve the human review loop. Multi-word commands are spelled naturally
(``corpusctl text mae ...``, ``corpusctl diarize eval ...``).
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import agenet, catalog, config, diarize, snippeter, stats, textio, video
from .backends.session import BackendSession
from .errors import ConfigurationError, CorpusctlError

_GROUPS = {
    "text": {"coverage", "mae"},
    "video": {"scenes", "crop"},
    "diarize": {"eval"},
    "backend": {"synth"},
    "age": {"train", "eval", "gradcheck"},
    "review": {"serve", "items"},
}


def _read_ndjson(path):
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


def _write_ndjson(path, rows):
    with Path(path).open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def _emit(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False))


def _load_settings(args) -> dict:
    if getattr(args, "config", None):
        return config.load_config(args.config)
    return {}


# --------------------------------------------------------------------------
# catalog

def cmd_fetch(args) -> int:
    settings = _load_settings(args)
    result = catalog.fetch_catalog(
        args.base_url,
        page_limit=args.pages,
        concurrency=args.concurrency or settings.get("fetch.concurrency", 4),
        cache_dir=config.cache_dir(),
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = catalog.CorpusManifest.build(result.records, source_url=args.base_url)
    catalog.save_manifest(manifest, out_dir / "manifest.ndjson")
    _emit(
        {
            "records": len(result.records),
            "skipped": [s.__dict__ for s in result.skipped],
            "pages": result.pages,
            "manifest": str(out_dir / "manifest.ndjson"),
        }
    )
    return 0


def cmd_verify(args) -> int:
    manifest = catalog.load_manifest(args.manifest)
    report = catalog.verify_assets(manifest, args.root)
    _emit(
        {
            "counts": {status.value: count for status, count in report.counts.items()},
            "not_ok": {
                record_id: status.value
                for record_id, status in report.statuses.items()
                if status is not catalog.AssetStatus.OK
            },
        }
    )
    return 0 if report.ok else 1


# --------------------------------------------------------------------------
# text metrics

def cmd_text_coverage(args) -> int:
    alignments = textio.parse_alignment(Path(args.alignment).read_bytes())
    coverage = textio.alignment_coverage(alignments)
    _emit(
        {
            "word_coverage": coverage.word_coverage,
            "sentence_boundary_coverage": coverage.sentence_boundary_coverage,
            "discarded_sentences": coverage.discarded_sentences,
        }
    )
    return 0


def cmd_text_mae(args) -> int:
    cues = textio.parse_subtitles(Path(args.subs).read_bytes())
    alignments = textio.parse_alignment(Path(args.alignment).read_bytes())
    result = textio.subtitle_alignment_mae(cues, alignments)
    _emit(
        {
            "mae_ms": result.mae_ms,
            "outliers_gt_1s": result.outlier_count,
            "contributions": result.contribution_count,
            "matched_cues": result.matched_cues,
            "unmatched_cues": result.unmatched_cues,
        }
    )
    return 0


# --------------------------------------------------------------------------
# snippeting

def _alignment_path_for(record: catalog.PodcastRecord) -> str:
    # documented convention: the aligner writes <transcript_path>.align.tsv
    return f"{record.transcript_path}.align.tsv"


def cmd_snippet(args) -> int:
    settings = _load_settings(args)
    manifest = catalog.load_manifest(args.manifest)
    root = Path(args.root)
    pause_ms = args.pause_ms or settings.get("snippet.pause_ms", snippeter.DEFAULT_PAUSE_MS)
    max_dur = args.max_dur or settings.get("snippet.max_duration_s", snippeter.DEFAULT_MAX_DURATION_S)
    rows = []
    skipped = []
    for record in manifest.records:
        try:
            source = snippeter.select_source(record)
        except snippeter.UnusableRecordError:
            skipped.append(record.id)
            continue
        if source == "subtitle":
            cues = textio.parse_subtitles((root / record.subtitle_path).read_bytes())
            snippets = snippeter.snippets_from_subtitles(
                cues, max_duration_s=max_dur, max_gap_ms=args.max_gap_ms, podcast_id=record.id
            )
        else:
            alignment_file = root / _alignment_path_for(record)
            if not alignment_file.is_file():
                skipped.append(record.id)
                continue
            alignments = textio.parse_alignment(alignment_file.read_bytes())
            kept, _ = textio.filter_alignment(alignments)
            kept_set = set(kept)
            words = [w for w in alignments if w.sentence_idx in kept_set]
            units = snippeter.segment_units(words, pause_ms=pause_ms, kind=args.unit)
            snippets = snippeter.merge_units(
                units, max_duration_s=max_dur, stride_units=args.stride, podcast_id=record.id
            )
        rows.extend(s.to_json() for s in snippets)
    out = Path(args.out)
    _write_ndjson(out, rows)
    _emit({"snippets": len(rows), "skipped_records": skipped, "out": str(out)})
    return 0


# --------------------------------------------------------------------------
# video

def _open_in(path: str):
    return sys.stdin.buffer if path == "-" else open(path, "rb")


def _open_out(path: str):
    return sys.stdout.buffer if path == "-" else open(path, "wb")


def cmd_video_scenes(args) -> int:
    with _open_in(args.infile) as handle:
        stream = video.read_y4m(handle)
        scenes = video.detect_scenes(stream, args.threshold, args.min_scene_frames)
    _emit([s.to_json() for s in scenes])
    return 0


def cmd_video_crop(args) -> int:
    plan = video.CropPlan.load(args.plan)
    with _open_in(args.infile) as src, _open_out(args.out) as dst:
        stream = video.read_y4m(src)
        video.write_y4m(video.render_crops(stream, plan, args.out_size), dst)
    return 0


# --------------------------------------------------------------------------
# diarization

def _diarize_config(args, settings: dict) -> diarize.DiarizeConfig:
    values = {}
    for field in dataclass_fields(diarize.DiarizeConfig):
        cli_value = getattr(args, field.name, None)
        if cli_value is not None:
            values[field.name] = cli_value
        elif f"diarize.{field.name}" in settings:
            values[field.name] = settings[f"diarize.{field.name}"]
    return diarize.DiarizeConfig(**values)


def _load_reference(path) -> list[np.ndarray]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "vectors" in data:
        vectors = [np.asarray(v, dtype=np.float64) for v in data["vectors"]]
    elif "promotions" in data:
        vectors = [
            np.asarray(p["embedding"], dtype=np.float64)
            for p in data["promotions"]
            if "embedding" in p
        ]
    else:
        raise ConfigurationError(
            f"reference file {path} has neither 'vectors' nor 'promotions'"
        )
    if not vectors:
        raise ConfigurationError(f"reference file {path} contains no usable embeddings")
    return vectors


def cmd_diarize_run(args) -> int:
    settings = _load_settings(args)
    cfg = _diarize_config(args, settings)
    snippets = [snippeter.Snippet.from_json(r) for r in _read_ndjson(args.snippets)]
    reference = _load_reference(args.reference)
    scenes_map: dict[str, list[video.Scene]] = {}
    if args.scenes:
        raw = json.loads(Path(args.scenes).read_text(encoding="utf-8"))
        scenes_map = {
            sid: [video.Scene.from_json(s) for s in scene_list]
            for sid, scene_list in raw.items()
        }
    out_dir = Path(args.out)
    (out_dir / "plans").mkdir(parents=True, exist_ok=True)
    rows = []
    accepted = 0
    with BackendSession(shlex.split(args.backend), timeout=args.timeout) as session:
        for snippet in snippets:
            scenes = scenes_map.get(snippet.id)
            if scenes is None:
                # fall back to one scene spanning the whole snippet
                frame_count = max(1, round((snippet.end_ms - snippet.start_ms) / 1000 * args.fps))
                scenes = [video.Scene(0, frame_count)]
            result = diarize.run_snippet(
                session, snippet.id, scenes, reference, cfg,
                fps=args.fps, collect_evidence=True,
            )
            rows.append(result.to_json())
            if result.decision.accepted:
                accepted += 1
                face_plan, lip_plan = diarize.build_recombination(
                    result.decision, result.tracks, args.frame_width, args.frame_height,
                    cfg.smoothing_window, cfg.pad,
                )
                (out_dir / "plans" / f"{snippet.id}.face.json").write_text(
                    json.dumps(face_plan.to_json()), encoding="utf-8"
                )
                (out_dir / "plans" / f"{snippet.id}.lip.json").write_text(
                    json.dumps(lip_plan.to_json()), encoding="utf-8"
                )
    _write_ndjson(out_dir / "decisions.ndjson", rows)
    _emit({"snippets": len(rows), "accepted": accepted, "out": str(out_dir)})
    return 0


def cmd_diarize_eval(args) -> int:
    decisions = [
        diarize.SnippetDecision(r["snippet_id"], bool(r["accepted"]), (), r.get("reason", ""))
        for r in _read_ndjson(args.decisions)
    ]
    truth = {r["snippet_id"]: bool(r["target_speaking"]) for r in _read_ndjson(args.truth)}
    metrics = diarize.evaluate_pipeline(decisions, truth)
    _emit(metrics.to_json())
    return 0


# --------------------------------------------------------------------------
# backend, stats, agenet, review

def cmd_backend_synth(args) -> int:
    from .backends import synth

    return synth.serve(args.scenario, args.seed)


def cmd_stats(args) -> int:
    manifest = catalog.load_manifest(args.manifest) if args.manifest else None
    totals = None
    years = None
    if manifest is not None:
        segments: dict[str, list[stats.SegmentLabel]] = {}
        if args.segments:
            for row in _read_ndjson(args.segments):
                record_id = row.get("record_id") or row.get("podcast_id")
                segments.setdefault(record_id, []).append(
                    stats.SegmentLabel(row["start_ms"], row["end_ms"], row["label"])
                )
        totals = stats.corpus_overview(manifest, segments)
        years = stats.per_year_stats(manifest)
    snippet_stats = None
    if args.snippets:
        snippets = [snippeter.Snippet.from_json(r) for r in _read_ndjson(args.snippets)]
        snippet_stats = stats.snippet_histograms(snippets)
    onscreen = None
    if args.decisions and totals is not None:
        evidence = [
            diarize.OnscreenEvidence.from_json(r["evidence"])
            for r in _read_ndjson(args.decisions)
            if "evidence" in r
        ]
        speech_h = totals.hours_by_label.get("speech", 0.0)
        onscreen = stats.onscreen_fractions(
            evidence, totals.total_h * 3600, speech_h * 3600 if speech_h else None
        )
    poses = None
    if args.poses:
        poses = stats.pose_distributions(_read_ndjson(args.poses))
    path = stats.write_report(
        args.out, totals=totals, years=years, snippet_stats=snippet_stats,
        onscreen=onscreen, poses=poses,
    )
    _emit({"report": str(path)})
    return 0


def cmd_age_train(args) -> int:
    samples = agenet.load_embeddings(args.embeddings)
    model, trace = agenet.train(
        samples, learning_rate=args.lr, epochs=args.epochs, l2=args.l2, seed=args.seed
    )
    model.save(args.out)
    _emit({"model": str(args.out), "epochs_run": len(trace) - 1, "final_loss": trace[-1]})
    return 0


def cmd_age_eval(args) -> int:
    model = agenet.SoftmaxModel.load(args.model)
    samples = agenet.load_embeddings(args.embeddings)
    _emit(agenet.evaluate(model, samples).to_json())
    return 0


def cmd_age_gradcheck(args) -> int:
    samples = agenet.load_embeddings(args.embeddings)
    # check at a random point: at a trained optimum every entry is ~0 and
    # the relative error would just compare noise against noise
    years = tuple(sorted({s.year for s in samples}))
    rng = np.random.default_rng(args.seed)
    dim = len(samples[0].vector)
    model = agenet.SoftmaxModel(
        weights=rng.normal(size=(len(years), dim)),
        bias=rng.normal(size=len(years)),
        class_years=years,
    )
    error = agenet.grad_check(model, samples, epsilon=args.epsilon)
    _emit({"max_rel_error": error, "epsilon": args.epsilon})
    return 0


def cmd_review_serve(args) -> int:
    from . import reviewsvc

    reviewsvc.serve(
        ledger=args.ledger,
        media_dir=args.media,
        port=args.port,
        items_path=args.items,
        host=args.host,
    )
    return 0


def cmd_review_items(args) -> int:
    from . import reviewsvc

    manifest = catalog.load_manifest(args.manifest) if args.manifest else None
    snippets = {
        s.id: s
        for s in (snippeter.Snippet.from_json(r) for r in _read_ndjson(args.snippets))
    }
    items = reviewsvc.build_items(_read_ndjson(args.decisions), snippets, manifest)
    _write_ndjson(args.out, [i.to_json() for i in items])
    _emit({"items": len(items), "out": str(args.out)})
    return 0


# --------------------------------------------------------------------------
# parser wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corpusctl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--config", help="key-value config file", default=None)
        return p

    p = add("fetch", cmd_fetch, help="scrape the catalog into a manifest")
    p.add_argument("--base-url", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pages", type=int, default=50)
    p.add_argument("--concurrency", type=int, default=None)

    p = add("verify", cmd_verify, help="verify on-disk assets against the manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", required=True)

    p = add("text-coverage", cmd_text_coverage, help="alignment coverage metrics")
    p.add_argument("--alignment", required=True)

    p = add("text-mae", cmd_text_mae, help="subtitle-vs-alignment timing error")
    p.add_argument("--subs", required=True)
    p.add_argument("--alignment", required=True)

    p = add("snippet", cmd_snippet, help="cut snippets from subtitles/alignments")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--unit", choices=["word", "ipu", "sentence"], default="ipu")
    p.add_argument("--pause-ms", type=int, default=None)
    p.add_argument("--max-dur", type=float, default=None)
    p.add_argument("--max-gap-ms", type=int, default=1000)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--out", default="snippets.ndjson")

    p = add("video-scenes", cmd_video_scenes, help="detect hard cuts in a y4m stream")
    p.add_argument("--in", dest="infile", default="-")
    p.add_argument("--threshold", type=float, default=video.DEFAULT_SCENE_THRESHOLD)
    p.add_argument("--min-scene-frames", type=int, default=video.DEFAULT_MIN_SCENE_FRAMES)

    p = add("video-crop", cmd_video_crop, help="render a crop plan over a y4m stream")
    p.add_argument("--in", dest="infile", default="-")
    p.add_argument("--plan", required=True)
    p.add_argument("--out-size", type=int, default=224)
    p.add_argument("--out", default="-")

    p = add("diarize-run", cmd_diarize_run, help="run target-speaker selection")
    p.add_argument("--manifest", required=False)
    p.add_argument("--snippets", required=True)
    p.add_argument("--backend", required=True, help="backend command line")
    p.add_argument("--reference", required=True, help="reference vectors or promotion descriptor")
    p.add_argument("--out", required=True)
    p.add_argument("--scenes", default=None, help="JSON {snippet_id: [scene, ...]}")
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--frame-width", type=int, default=640)
    p.add_argument("--frame-height", type=int, default=360)
    p.add_argument("--timeout", type=float, default=30.0)
    for name in ("tau_asd", "tau_face", "iou_min", "pad"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=None)
    for name in ("max_gap", "min_track_frames", "smoothing_window"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, default=None)

    p = add("diarize-eval", cmd_diarize_eval, help="score decisions against ground truth")
    p.add_argument("--decisions", required=True)
    p.add_argument("--truth", required=True)

    p = add("backend-synth", cmd_backend_synth, help="run the synthetic scripted backend")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("stats", cmd_stats, help="corpus statistics reports")
    p.add_argument("--manifest", default=None)
    p.add_argument("--snippets", default=None)
    p.add_argument("--decisions", default=None)
    p.add_argument("--segments", default=None)
    p.add_argument("--poses", default=None)
    p.add_argument("--out", required=True)

    p = add("age-train", cmd_age_train, help="train the year regression probe")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)

    p = add("age-eval", cmd_age_eval, help="evaluate a trained year probe")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)

    p = add("age-gradcheck", cmd_age_gradcheck, help="verify gradients by central differences")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)

    p = add("review-serve", cmd_review_serve, help="serve the human review API")
    p.add_argument("--ledger", required=True)
    p.add_argument("--media", default=None)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--items", default=None)
    p.add_argument("--host", default="127.0.0.1")

    p = add("review-items", cmd_review_items, help="build review items from diarize output")
    p.add_argument("--decisions", required=True)
    p.add_argument("--snippets", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in _GROUPS:
        if len(argv) > 1 and argv[1] in _GROUPS[argv[0]]:
            argv = [f"{argv[0]}-{argv[1]}"] + argv[2:]
        elif argv[0] == "diarize":
            argv = ["diarize-run"] + argv[1:]
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CorpusctlError as exc:
        print(f"corpusctl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
