"""Target-speaker selection over face tracks.

Per snippet: build face tracks inside each scene, ask a backend for
active-speaker scores and face embeddings, gate each track on "speaking?"
and "is the target?", pick the best double-passer per scene, and accept the
snippet only when every scene has a valid face. Accepted snippets get crop
plans that recombine the chosen per-scene faces into one continuous
face-cropped (and lip-cropped) video.

Everything here is a pure function of its inputs and thresholds; the neural
evidence arrives through the backend protocol.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, ValidationError
from .video import CropPlan, CropRect, Scene

__all__ = [
    "FaceBox",
    "FaceTrack",
    "CandidateScore",
    "SceneDecision",
    "SnippetDecision",
    "DiarizeConfig",
    "PipelineMetrics",
    "OnscreenEvidence",
    "SnippetRunResult",
    "iou",
    "track_faces",
    "score_candidates",
    "decide_scene",
    "decide_snippet",
    "build_recombination",
    "evaluate_pipeline",
    "run_snippet",
]


@dataclass(frozen=True)
class DiarizeConfig:
    """Gating thresholds and geometry defaults, biased toward precision."""

    tau_asd: float = 0.5
    tau_face: float = 0.6
    iou_min: float = 0.5
    max_gap: int = 10
    min_track_frames: int = 12
    smoothing_window: int = 13
    pad: float = 0.2
    min_score_coverage: float = 0.5


@dataclass(frozen=True)
class FaceBox:
    frame: int
    x: float
    y: float
    w: float
    h: float
    confidence: float = 1.0

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValidationError(f"face box at frame {self.frame} has non-positive size")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"face box confidence {self.confidence} outside [0, 1]")


@dataclass
class FaceTrack:
    id: int
    scene: Scene
    boxes: list[FaceBox]

    @property
    def mean_area(self) -> float:
        return float(np.mean([b.w * b.h for b in self.boxes]))

    @property
    def first_frame(self) -> int:
        return self.boxes[0].frame

    @property
    def last_frame(self) -> int:
        return self.boxes[-1].frame

    @property
    def span(self) -> int:
        return self.last_frame - self.first_frame + 1


@dataclass(frozen=True)
class CandidateScore:
    track_id: int
    asd_mean: float
    face_distance: float
    passes_asd: bool
    passes_face: bool
    mean_area: float

    def to_json(self) -> dict:
        return {
            "track_id": self.track_id,
            "asd_mean": self.asd_mean,
            "face_distance": self.face_distance,
            "passes_asd": self.passes_asd,
            "passes_face": self.passes_face,
            "mean_area": self.mean_area,
        }


@dataclass(frozen=True)
class SceneDecision:
    scene: Scene
    chosen_track: int | None
    candidates: tuple[CandidateScore, ...]

    def to_json(self) -> dict:
        return {
            "scene": self.scene.to_json(),
            "chosen_track": self.chosen_track,
            "candidates": [c.to_json() for c in self.candidates],
        }


REASON_OK = "ok"
REASON_SCENE_WITHOUT_VALID_FACE = "scene_without_valid_face"
REASON_NO_FACES = "no_faces"


@dataclass(frozen=True)
class SnippetDecision:
    snippet_id: str
    accepted: bool
    scene_decisions: tuple[SceneDecision, ...]
    reason: str

    def to_json(self) -> dict:
        return {
            "snippet_id": self.snippet_id,
            "accepted": self.accepted,
            "reason": self.reason,
            "scenes": [d.to_json() for d in self.scene_decisions],
        }


@dataclass(frozen=True)
class PipelineMetrics:
    accuracy: float
    precision: float
    recall: float
    tp: int
    fp: int
    tn: int
    fn: int

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
        }


def iou(a: FaceBox, b: FaceBox) -> float:
    """Intersection over union of two boxes (frame indices ignored)."""
    ix = max(0.0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0.0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    union = a.w * a.h + b.w * b.h - inter
    return inter / union if union > 0 else 0.0


def track_faces(
    boxes: list[FaceBox],
    scene: Scene,
    iou_min: float = DiarizeConfig.iou_min,
    max_gap: int = DiarizeConfig.max_gap,
    min_track_frames: int = DiarizeConfig.min_track_frames,
) -> list[FaceTrack]:
    """Greedy frame-to-frame association of detections into tracks.

    Walking frames in order, each detection joins the open track whose last
    box overlaps it most (IoU >= iou_min; ties go to the lower track id, and
    a track takes at most one detection per frame); otherwise it starts a
    new track. A track missing from more than ``max_gap`` consecutive
    frames is closed, and tracks spanning fewer than ``min_track_frames``
    frames are dropped.
    """
    per_frame: dict[int, list[FaceBox]] = {}
    for box in boxes:
        if not scene.start_frame <= box.frame < scene.end_frame:
            raise ValidationError(
                f"box at frame {box.frame} outside scene "
                f"[{scene.start_frame}, {scene.end_frame})"
            )
        per_frame.setdefault(box.frame, []).append(box)

    tracks: list[FaceTrack] = []
    open_ids: list[int] = []
    for frame in sorted(per_frame):
        open_ids = [
            tid for tid in open_ids if frame - tracks[tid].last_frame - 1 <= max_gap
        ]
        for box in per_frame[frame]:
            best_id = None
            best_iou = 0.0
            # open_ids is in ascending id order, so keeping strict ">" below
            # resolves IoU ties to the lower track id
            for tid in open_ids:
                if tracks[tid].last_frame == frame:
                    continue  # one detection per track per frame
                overlap = iou(tracks[tid].boxes[-1], box)
                if overlap >= iou_min and (best_id is None or overlap > best_iou):
                    best_iou = overlap
                    best_id = tid
            if best_id is not None:
                tracks[best_id].boxes.append(box)
            else:
                tracks.append(FaceTrack(id=len(tracks), scene=scene, boxes=[box]))
                open_ids.append(len(tracks) - 1)
    return [t for t in tracks if t.span >= min_track_frames]


def score_candidates(
    tracks: list[FaceTrack],
    asd_scores: dict[int, dict[int, float]],
    embeddings: dict[int, np.ndarray | list[np.ndarray]],
    reference_set: list[np.ndarray],
    config: DiarizeConfig = DiarizeConfig(),
) -> list[CandidateScore]:
    """Fuse active-speaker and face-identity evidence per track.

    asd_mean averages the per-frame speaking scores where the backend
    produced one; face_distance is the smallest Euclidean distance between
    any of the track's embeddings and any reference embedding. Tracks with
    per-frame score coverage below ``min_score_coverage`` are excluded with
    a warning rather than judged on too little evidence.
    """
    if not reference_set:
        raise ConfigurationError("reference_set is empty; promote reference snippets first")
    references = [np.asarray(r, dtype=np.float64) for r in reference_set]
    out: list[CandidateScore] = []
    for track in tracks:
        scores = asd_scores.get(track.id, {})
        coverage = len(scores) / len(track.boxes) if track.boxes else 0.0
        if coverage < config.min_score_coverage:
            warnings.warn(
                f"track {track.id}: only {coverage:.0%} of frames scored; excluded",
                stacklevel=2,
            )
            continue
        asd_mean = float(np.mean(list(scores.values())))
        vectors = embeddings.get(track.id)
        if vectors is None:
            warnings.warn(f"track {track.id}: no embedding from backend; excluded", stacklevel=2)
            continue
        if isinstance(vectors, np.ndarray) and vectors.ndim == 1:
            vectors = [vectors]
        distance = min(
            float(np.linalg.norm(np.asarray(v, dtype=np.float64) - r))
            for v in vectors
            for r in references
        )
        out.append(
            CandidateScore(
                track_id=track.id,
                asd_mean=asd_mean,
                face_distance=distance,
                passes_asd=asd_mean >= config.tau_asd,
                passes_face=distance <= config.tau_face,
                mean_area=track.mean_area,
            )
        )
    return out


def decide_scene(scene: Scene, candidates: list[CandidateScore]) -> SceneDecision:
    """Pick the best double-passing candidate for a scene, if any.

    Highest asd_mean wins; ties fall to smaller face_distance, then larger
    mean_area, then lower track id.
    """
    passing = [c for c in candidates if c.passes_asd and c.passes_face]
    chosen = None
    if passing:
        chosen = min(
            passing, key=lambda c: (-c.asd_mean, c.face_distance, -c.mean_area, c.track_id)
        ).track_id
    return SceneDecision(scene=scene, chosen_track=chosen, candidates=tuple(candidates))


def decide_snippet(snippet_id: str, scene_decisions: list[SceneDecision]) -> SnippetDecision:
    """Accept a snippet iff every one of its scenes has a chosen track."""
    if not scene_decisions:
        return SnippetDecision(snippet_id, False, (), REASON_NO_FACES)
    if all(d.chosen_track is not None for d in scene_decisions):
        reason = REASON_OK
        accepted = True
    else:
        reason = REASON_SCENE_WITHOUT_VALID_FACE
        accepted = False
    return SnippetDecision(snippet_id, accepted, tuple(scene_decisions), reason)


# --------------------------------------------------------------------------
# recombination crop plans

def _interpolate_box(track: FaceTrack, frame: int) -> tuple[float, float, float, float]:
    boxes = track.boxes
    if frame <= boxes[0].frame:
        b = boxes[0]
        return b.x, b.y, b.w, b.h
    if frame >= boxes[-1].frame:
        b = boxes[-1]
        return b.x, b.y, b.w, b.h
    for prev, nxt in zip(boxes, boxes[1:]):
        if prev.frame <= frame <= nxt.frame:
            if nxt.frame == prev.frame:
                break
            t = (frame - prev.frame) / (nxt.frame - prev.frame)
            return (
                prev.x + t * (nxt.x - prev.x),
                prev.y + t * (nxt.y - prev.y),
                prev.w + t * (nxt.w - prev.w),
                prev.h + t * (nxt.h - prev.h),
            )
    b = boxes[-1]
    return b.x, b.y, b.w, b.h


def _moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks at the edges."""
    if window <= 1 or len(values) <= 1:
        return values.astype(np.float64)
    half = window // 2
    out = np.empty(len(values), dtype=np.float64)
    for i in range(len(values)):
        lo = max(0, i - half)
        hi = min(len(values), i + half + 1)
        out[i] = values[lo:hi].mean()
    return out


def build_recombination(
    decision: SnippetDecision,
    tracks: dict[int, FaceTrack],
    frame_width: int,
    frame_height: int,
    smoothing_window: int = DiarizeConfig.smoothing_window,
    pad: float = DiarizeConfig.pad,
) -> tuple[CropPlan, CropPlan]:
    """Build (face, lip) crop plans covering every frame of the snippet.

    Per scene, the chosen track's box is linearly interpolated across its
    gaps, held at the ends, smoothed per coordinate with a centered moving
    average (smoothing stays inside the scene: crossing a cut would blend
    different faces), then expanded by ``pad`` on each side. The face rect
    is that box squared to max(w, h) and clamped inside the frame; the lip
    rect is the bottom half of the unsquared padded box.
    """
    if not decision.accepted:
        raise ValidationError(
            f"snippet {decision.snippet_id}: recombination requires an accepted decision"
        )
    face_rects: dict[int, CropRect] = {}
    lip_rects: dict[int, CropRect] = {}
    for scene_decision in decision.scene_decisions:
        track = tracks[scene_decision.chosen_track]
        scene = scene_decision.scene
        frames = range(scene.start_frame, scene.end_frame)
        raw = np.array([_interpolate_box(track, f) for f in frames], dtype=np.float64)
        smooth = np.column_stack([_moving_average(raw[:, k], smoothing_window) for k in range(4)])
        for offset, frame in enumerate(frames):
            x, y, w, h = smooth[offset]
            x -= w * pad
            y -= h * pad
            w *= 1 + 2 * pad
            h *= 1 + 2 * pad

            side = min(max(w, h), float(frame_width), float(frame_height))
            fx = min(max(x + w / 2 - side / 2, 0.0), frame_width - side)
            fy = min(max(y + h / 2 - side / 2, 0.0), frame_height - side)
            iside = max(2, round(side))
            face_rects[frame] = CropRect(
                x=min(round(fx), frame_width - iside),
                y=min(round(fy), frame_height - iside),
                w=iside,
                h=iside,
            )

            lx, ly, lw, lh = round(x), round(y), round(w), round(h)
            lip = CropRect(x=lx, y=ly + lh // 2, w=max(1, lw), h=max(1, lh - lh // 2))
            lip_rects[frame] = lip.clamped(frame_width, frame_height)
    return CropPlan(rects=face_rects), CropPlan(rects=lip_rects)


# --------------------------------------------------------------------------
# validation against ground truth

def evaluate_pipeline(
    decisions: list[SnippetDecision], ground_truth: dict[str, bool]
) -> PipelineMetrics:
    """Binary classification metrics, treating an accepted snippet as positive.

    Ratios with an empty denominator are reported as 0.0.
    """
    decision_ids = {d.snippet_id for d in decisions}
    truth_ids = set(ground_truth)
    if decision_ids != truth_ids:
        missing = sorted(truth_ids - decision_ids)
        extra = sorted(decision_ids - truth_ids)
        raise ValidationError(
            f"snippet id mismatch: missing decisions for {missing}, unexpected {extra}"
        )
    tp = fp = tn = fn = 0
    for decision in decisions:
        truth = ground_truth[decision.snippet_id]
        if decision.accepted and truth:
            tp += 1
        elif decision.accepted and not truth:
            fp += 1
        elif not decision.accepted and truth:
            fn += 1
        else:
            tn += 1
    total = tp + fp + tn + fn
    return PipelineMetrics(
        accuracy=(tp + tn) / total if total else 0.0,
        precision=tp / (tp + fp) if tp + fp else 0.0,
        recall=tp / (tp + fn) if tp + fn else 0.0,
        tp=tp, fp=fp, tn=tn, fn=fn,
    )


# --------------------------------------------------------------------------
# backend-driven per-snippet pipeline

@dataclass
class OnscreenEvidence:
    """Per-frame target flags for one snippet, for on-screen statistics."""

    snippet_id: str
    fps: float
    visible: list[bool] = field(default_factory=list)
    speaking: list[bool] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "snippet_id": self.snippet_id,
            "fps": self.fps,
            "visible": [int(v) for v in self.visible],
            "speaking": [int(s) for s in self.speaking],
        }

    @classmethod
    def from_json(cls, data: dict) -> "OnscreenEvidence":
        return cls(
            snippet_id=data["snippet_id"],
            fps=data["fps"],
            visible=[bool(v) for v in data["visible"]],
            speaking=[bool(s) for s in data["speaking"]],
        )


def _track_payload(track: FaceTrack) -> dict:
    return {
        "id": track.id,
        "boxes": [[b.frame, b.x, b.y, b.w, b.h] for b in track.boxes],
    }


@dataclass
class SnippetRunResult:
    decision: SnippetDecision
    tracks: dict[int, FaceTrack]
    embeddings: dict[int, np.ndarray]
    evidence: OnscreenEvidence | None = None

    def to_json(self) -> dict:
        row = self.decision.to_json()
        for scene_decision, scene_json in zip(self.decision.scene_decisions, row["scenes"]):
            scene_json["embeddings"] = {
                str(c.track_id): [round(float(v), 6) for v in self.embeddings[c.track_id]]
                for c in scene_decision.candidates
                if c.track_id in self.embeddings
            }
        if self.evidence is not None:
            row["evidence"] = self.evidence.to_json()
        return row


def run_snippet(
    session,
    snippet_id: str,
    scenes: list[Scene],
    reference_set: list[np.ndarray],
    config: DiarizeConfig = DiarizeConfig(),
    fps: float = 25.0,
    collect_evidence: bool = False,
) -> SnippetRunResult:
    """Run the per-snippet selection pipeline against a backend session.

    Scenes are processed in order; each issues one face_detect request and,
    per surviving track, one asd_score and one face_embed request. Track
    ids are unique across the snippet. When ``collect_evidence`` is set the
    result also carries per-frame target-visible / target-speaking flags
    derived from the face gate and the per-frame speaking scores.
    """
    scene_decisions: list[SceneDecision] = []
    all_tracks: dict[int, FaceTrack] = {}
    all_embeddings: dict[int, np.ndarray] = {}
    total_frames = max((s.end_frame for s in scenes), default=0)
    evidence = OnscreenEvidence(
        snippet_id, fps, [False] * total_frames, [False] * total_frames
    )
    next_track_id = 0
    for scene in scenes:
        response = session.call(
            "face_detect",
            {"snippet_id": snippet_id, "frames": [scene.start_frame, scene.end_frame]},
        )
        boxes = [
            FaceBox(frame=b["frame"], x=b["x"], y=b["y"], w=b["w"], h=b["h"],
                    confidence=b.get("confidence", 1.0))
            for b in response.payload["boxes"]
        ]
        tracks = track_faces(boxes, scene, config.iou_min, config.max_gap, config.min_track_frames)
        # renumber so track ids stay unique across the snippet's scenes
        tracks = [replace(t, id=next_track_id + k) for k, t in enumerate(tracks)]
        next_track_id += len(tracks)
        asd: dict[int, dict[int, float]] = {}
        embeddings: dict[int, np.ndarray] = {}
        for track in tracks:
            all_tracks[track.id] = track
            scored = session.call(
                "asd_score", {"snippet_id": snippet_id, "track": _track_payload(track)}
            )
            asd[track.id] = {e["frame"]: e["score"] for e in scored.payload["scores"]}
            embedded = session.call(
                "face_embed", {"snippet_id": snippet_id, "track": _track_payload(track)}
            )
            embeddings[track.id] = np.asarray(embedded.payload["vector"], dtype=np.float64)
        all_embeddings.update(embeddings)
        candidates = score_candidates(tracks, asd, embeddings, reference_set, config)
        scene_decisions.append(decide_scene(scene, candidates))
        if collect_evidence:
            passing_face = {c.track_id for c in candidates if c.passes_face}
            for track in tracks:
                if track.id not in passing_face:
                    continue
                for box in track.boxes:
                    evidence.visible[box.frame] = True
                    if asd[track.id].get(box.frame, 0.0) >= config.tau_asd:
                        evidence.speaking[box.frame] = True
    decision = decide_snippet(snippet_id, scene_decisions)
    return SnippetRunResult(
        decision=decision,
        tracks=all_tracks,
        embeddings=all_embeddings,
        evidence=evidence if collect_evidence else None,
    )
