"""Deterministic scripted backend for tests, demos and calibration.

Runs as a real child process speaking protocol v1, but every answer is
fabricated from a scenario script with known ground truth: which actors are
on screen per scene, who is the target, who is speaking, where their face
box sits. Gaussian noise of configurable magnitude is layered on top, and
all of it is derived from (seed, request content), so the same scenario and
seed produce byte-identical responses in any request order.

Identity geometry: target faces embed at ``target_anchor`` (unit vector),
everyone else at ``far_vector`` (Euclidean distance 2.0 from the anchor);
the embedding perturbation has *norm* ~ |N(0, sigma_emb)| so the noise
scale is distance-calibrated, independent of the embedding dimension.

Run standalone: ``python -m corpusctl.backends.synth --scenario F --seed N``
(also exposed as ``corpusctl backend synth``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .protocol import (
    CAPABILITIES,
    BackendResponse,
    Handshake,
    parse_request,
    serialize,
)

__all__ = [
    "SynthBackend",
    "load_scenario",
    "scenario_truth",
    "target_anchor",
    "far_vector",
    "build_validation_scenario",
    "listening_interview_scenario",
    "main",
]


def target_anchor(dim: int) -> np.ndarray:
    anchor = np.zeros(dim)
    anchor[0] = 1.0
    return anchor


def far_vector(dim: int) -> np.ndarray:
    return -target_anchor(dim)


def load_scenario(path_or_dict) -> dict:
    """Load and validate a scenario script."""
    if isinstance(path_or_dict, (str, Path)):
        with open(path_or_dict, "r", encoding="utf-8") as handle:
            scenario = json.load(handle)
    else:
        scenario = path_or_dict
    if not isinstance(scenario, dict) or not isinstance(scenario.get("snippets"), list):
        raise ValidationError("scenario must be an object with a 'snippets' list")
    for snippet in scenario["snippets"]:
        if "id" not in snippet or not isinstance(snippet.get("scenes"), list):
            raise ValidationError(f"snippet {snippet.get('id', '?')!r} needs an id and scenes")
        for scene in snippet["scenes"]:
            if scene["start_frame"] >= scene["end_frame"]:
                raise ValidationError(
                    f"snippet {snippet['id']}: empty scene at {scene['start_frame']}"
                )
            for actor in scene.get("actors", []):
                box = actor.get("box")
                if not box or box.get("w", 0) <= 0 or box.get("h", 0) <= 0:
                    raise ValidationError(
                        f"snippet {snippet['id']}: actor without a positive box"
                    )
    return scenario


def scenario_truth(scenario: dict) -> dict[str, bool]:
    """Ground truth per snippet: target visible and speaking in every scene."""
    truth = {}
    for snippet in scenario["snippets"]:
        truth[snippet["id"]] = all(
            any(a.get("is_target") and a.get("is_speaking") for a in scene.get("actors", []))
            for scene in snippet["scenes"]
        ) and bool(snippet["scenes"])
    return truth


def _derive_rng(seed: int, *key_parts) -> np.random.Generator:
    digest = hashlib.blake2s("/".join(str(p) for p in key_parts).encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng([seed & 0xFFFFFFFF, *words])


def _box_iou(a: dict, b: dict) -> float:
    ix = max(0.0, min(a["x"] + a["w"], b["x"] + b["w"]) - max(a["x"], b["x"]))
    iy = max(0.0, min(a["y"] + a["h"], b["y"] + b["h"]) - max(a["y"], b["y"]))
    inter = ix * iy
    union = a["w"] * a["h"] + b["w"] * b["h"] - inter
    return inter / union if union > 0 else 0.0


class SynthBackend:
    """Answers protocol v1 requests from a scenario script."""

    def __init__(self, scenario: dict, seed: int):
        self.scenario = load_scenario(scenario)
        self.seed = seed
        self.fps = float(self.scenario.get("fps", 25))
        self.face_dim = int(self.scenario.get("face_dim", 128))
        self.speaker_dim = int(self.scenario.get("speaker_dim", 256))
        self.sigma_box = float(self.scenario.get("sigma_box", 0.0))
        self.sigma_asd = float(self.scenario.get("sigma_asd", 0.0))
        self.sigma_emb = float(self.scenario.get("sigma_emb", 0.0))
        self._snippets = {s["id"]: s for s in self.scenario["snippets"]}

    def handshake(self, media: str = "") -> Handshake:
        return Handshake(
            capabilities=CAPABILITIES,
            face_dim=self.face_dim,
            speaker_dim=self.speaker_dim,
            media=media,
        )

    # -- scripted geometry ----------------------------------------------

    def _scene_at(self, snippet: dict, frame: int) -> dict | None:
        for scene in snippet["scenes"]:
            if scene["start_frame"] <= frame < scene["end_frame"]:
                return scene
        return None

    def _actor_box(self, scene: dict, actor: dict, frame: int) -> dict:
        drift = actor.get("drift", {})
        offset = frame - scene["start_frame"]
        box = actor["box"]
        return {
            "x": box["x"] + drift.get("dx", 0.0) * offset,
            "y": box["y"] + drift.get("dy", 0.0) * offset,
            "w": box["w"],
            "h": box["h"],
        }

    def _match_actor(self, snippet: dict, frame: int, box: dict) -> tuple[int, dict] | None:
        scene = self._scene_at(snippet, frame)
        if scene is None:
            return None
        best = None
        best_iou = 0.0
        for k, actor in enumerate(scene.get("actors", [])):
            overlap = _box_iou(self._actor_box(scene, actor, frame), box)
            if overlap > best_iou:
                best_iou = overlap
                best = (k, actor)
        return best

    # -- capability handlers ----------------------------------------------

    def _snippet(self, payload: dict) -> dict:
        snippet_id = payload.get("snippet_id")
        if snippet_id not in self._snippets:
            raise ValidationError(f"unknown snippet_id {snippet_id!r}")
        return self._snippets[snippet_id]

    def face_detect(self, payload: dict) -> dict:
        snippet = self._snippet(payload)
        start, end = payload["frames"]
        boxes = []
        for frame in range(start, end):
            scene = self._scene_at(snippet, frame)
            if scene is None:
                continue
            for k, actor in enumerate(scene.get("actors", [])):
                base = self._actor_box(scene, actor, frame)
                rng = _derive_rng(self.seed, "box", snippet["id"], frame, k)
                jitter = rng.normal(0.0, self.sigma_box, size=4) if self.sigma_box else np.zeros(4)
                boxes.append(
                    {
                        "frame": frame,
                        "x": round(base["x"] + jitter[0], 3),
                        "y": round(base["y"] + jitter[1], 3),
                        "w": round(max(2.0, base["w"] + jitter[2]), 3),
                        "h": round(max(2.0, base["h"] + jitter[3]), 3),
                        "confidence": 0.99,
                    }
                )
        return {"boxes": boxes}

    def asd_score(self, payload: dict) -> dict:
        snippet = self._snippet(payload)
        scores = []
        for frame, x, y, w, h in payload["track"]["boxes"]:
            match = self._match_actor(snippet, frame, {"x": x, "y": y, "w": w, "h": h})
            base = 0.0
            actor_idx = -1
            if match is not None:
                actor_idx, actor = match
                base = 1.0 if actor.get("is_speaking") else 0.0
            rng = _derive_rng(self.seed, "asd", snippet["id"], frame, actor_idx)
            noise = rng.normal(0.0, self.sigma_asd) if self.sigma_asd else 0.0
            scores.append({"frame": frame, "score": float(np.clip(base + noise, 0.0, 1.0))})
        return {"scores": scores}

    def face_embed(self, payload: dict) -> dict:
        snippet = self._snippet(payload)
        boxes = payload["track"]["boxes"]
        votes: dict[int, int] = {}
        sample_actor = {}
        for frame, x, y, w, h in boxes:
            match = self._match_actor(snippet, frame, {"x": x, "y": y, "w": w, "h": h})
            if match is None:
                continue
            k, actor = match
            votes[k] = votes.get(k, 0) + 1
            sample_actor[k] = actor
        if votes:
            winner = max(votes, key=lambda k: (votes[k], -k))
            is_target = bool(sample_actor[winner].get("is_target"))
        else:
            winner, is_target = -1, False
        base = target_anchor(self.face_dim) if is_target else far_vector(self.face_dim)
        rng = _derive_rng(self.seed, "emb", snippet["id"], boxes[0][0], winner)
        if self.sigma_emb:
            direction = rng.normal(size=self.face_dim)
            direction /= np.linalg.norm(direction)
            base = base + direction * abs(rng.normal(0.0, self.sigma_emb))
        return {"vector": [round(float(v), 6) for v in base]}

    def pose_angles(self, payload: dict) -> dict:
        snippet = self._snippet(payload)
        start, end = payload["frames"]
        angles = []
        for frame in range(start, end):
            scene = self._scene_at(snippet, frame)
            if scene is None:
                continue
            for k, actor in enumerate(scene.get("actors", [])):
                pose = actor.get("pose", {})
                angles.append(
                    {
                        "frame": frame,
                        "actor": k,
                        "is_target": bool(actor.get("is_target")),
                        "yaw": pose.get("yaw", 0.0),
                        "pitch": pose.get("pitch", 0.0),
                        "roll": pose.get("roll", 0.0),
                    }
                )
        return {"angles": angles}

    def speech_segments(self, payload: dict) -> dict:
        snippet = self._snippet(payload)
        if "segments" in snippet:
            return {"segments": snippet["segments"]}
        end_frame = max(scene["end_frame"] for scene in snippet["scenes"])
        span_ms = int(end_frame / self.fps * 1000)
        return {"segments": [{"start_ms": 0, "end_ms": span_ms, "label": "speech"}]}

    def speaker_embed(self, payload: dict) -> dict:
        snippet = self._snippet(payload)
        vector = np.zeros(self.speaker_dim)
        year = snippet.get("year")
        if year is not None:
            vector[int(year) % self.speaker_dim] = 1.0
        rng = _derive_rng(self.seed, "spk", snippet["id"])
        vector = vector + rng.normal(0.0, 0.05, size=self.speaker_dim)
        return {"vector": [round(float(v), 6) for v in vector]}

    def handle(self, request) -> BackendResponse:
        handler = {
            "face_detect": self.face_detect,
            "asd_score": self.asd_score,
            "face_embed": self.face_embed,
            "pose_angles": self.pose_angles,
            "speech_segments": self.speech_segments,
            "speaker_embed": self.speaker_embed,
        }.get(request.capability)
        if handler is None:
            return BackendResponse(request.request_id, "unsupported", {})
        try:
            return BackendResponse(request.request_id, "ok", handler(request.payload))
        except Exception as exc:
            return BackendResponse(request.request_id, "error", {"message": str(exc)})


# --------------------------------------------------------------------------
# ready-made scenarios

def listening_interview_scenario(sigma_asd: float = 0.0, sigma_emb: float = 0.0, sigma_box: float = 0.0) -> dict:
    """Interview snippet whose second scene shows the target listening.

    The interviewer speaks off-camera in that scene, so no face can pass
    both gates and the whole snippet must be discarded.
    """
    target_speaking = {
        "is_target": True, "is_speaking": True,
        "box": {"x": 240, "y": 60, "w": 120, "h": 150},
        "pose": {"yaw": 5.0, "pitch": -2.0, "roll": 1.0},
    }
    target_listening = dict(target_speaking, is_speaking=False)
    return {
        "fps": 25,
        "frame_width": 640,
        "frame_height": 360,
        "sigma_asd": sigma_asd,
        "sigma_emb": sigma_emb,
        "sigma_box": sigma_box,
        "snippets": [
            {
                "id": "interview_listening",
                "scenes": [
                    {"start_frame": 0, "end_frame": 40, "actors": [target_speaking]},
                    {"start_frame": 40, "end_frame": 80, "actors": [target_listening]},
                ],
            }
        ],
    }


def build_validation_scenario(
    n_snippets: int = 100,
    seed: int = 0,
    sigma_asd: float = 0.0,
    sigma_emb: float = 0.0,
    sigma_box: float = 0.0,
    fps: int = 25,
) -> dict:
    """A labeled validation set of scripted snippets, roughly 60/40 pos/neg.

    Positives show the target visibly speaking in every scene (sometimes
    with a silent second face). Negatives violate that in one scene: the
    target listens, only a non-target speaks, or nobody is on screen.
    """
    rng = np.random.default_rng(seed)
    width, height = 640, 360
    snippets = []
    for n in range(n_snippets):
        kind = ["positive", "positive", "positive", "neg_listening", "neg_interviewer",
                "neg_empty"][n % 6]
        n_scenes = int(rng.integers(1, 4))
        bad_scene = int(rng.integers(0, n_scenes))
        scenes = []
        frame = 0
        for s in range(n_scenes):
            length = int(rng.integers(30, 61))
            target = {
                "is_target": True,
                "is_speaking": True,
                "box": {
                    "x": int(rng.integers(40, width - 200)),
                    "y": int(rng.integers(20, height - 200)),
                    "w": int(rng.integers(90, 150)),
                    "h": int(rng.integers(100, 160)),
                },
                "drift": {"dx": float(rng.uniform(-0.4, 0.4)), "dy": float(rng.uniform(-0.2, 0.2))},
                "pose": {
                    "yaw": float(rng.normal(0, 12)),
                    "pitch": float(rng.normal(4, 6)),
                    "roll": float(rng.normal(0, 7)),
                },
            }
            other = {
                "is_target": False,
                "is_speaking": False,
                "box": {"x": 460, "y": 50, "w": 100, "h": 120},
                "pose": {"yaw": float(rng.normal(25, 8)), "pitch": 0.0, "roll": 0.0},
            }
            actors = [target]
            if rng.random() < 0.3:
                actors.append(dict(other))
            if kind != "positive" and s == bad_scene:
                if kind == "neg_listening":
                    actors = [dict(target, is_speaking=False)]
                elif kind == "neg_interviewer":
                    actors = [dict(other, is_speaking=True)]
                else:
                    actors = []
            scenes.append({"start_frame": frame, "end_frame": frame + length, "actors": actors})
            frame += length
        snippets.append({"id": f"val_{n:03d}", "scenes": scenes})
    return {
        "fps": fps,
        "frame_width": width,
        "frame_height": height,
        "sigma_asd": sigma_asd,
        "sigma_emb": sigma_emb,
        "sigma_box": sigma_box,
        "snippets": snippets,
    }


# --------------------------------------------------------------------------
# standalone executable

def serve(scenario_path: str, seed: int, stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    try:
        backend = SynthBackend(load_scenario(scenario_path), seed)
    except (ValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"synth backend: bad scenario: {exc}", file=sys.stderr)
        return 2
    media = str(scenario_path)
    stdout.write(serialize(backend.handshake(media)))
    stdout.flush()
    reorder = int(backend.scenario.get("reply_reorder", 0))
    buffer: list[BackendResponse] = []

    def flush():
        for response in reversed(buffer):
            stdout.write(serialize(response))
        buffer.clear()
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = parse_request(line)
        except Exception as exc:
            stdout.write(serialize(BackendResponse(-1, "error", {"message": str(exc)})))
            stdout.flush()
            continue
        response = backend.handle(request)
        if reorder > 1:
            buffer.append(response)
            if len(buffer) >= reorder:
                flush()
        else:
            stdout.write(serialize(response))
            stdout.flush()
    flush()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="corpusctl-synth-backend",
        description="deterministic scripted model backend (protocol v1)",
    )
    parser.add_argument("--scenario", required=True, help="scenario JSON path")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    return serve(args.scenario, args.seed)


if __name__ == "__main__":
    sys.exit(main())
