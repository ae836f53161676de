"""The full target-speaker selection loop against the synthetic backend.

Runs two stories: the interview case (target on screen but listening, so
the snippet must be discarded) and a 100-snippet validation set with
calibrated noise, scored against its scripted ground truth.
"""

import json
import sys
import tempfile
from pathlib import Path

from corpusctl.backends import BackendSession
from corpusctl.backends.synth import (
    build_validation_scenario,
    listening_interview_scenario,
    scenario_truth,
    target_anchor,
)
from corpusctl.diarize import DiarizeConfig, build_recombination, evaluate_pipeline, run_snippet
from corpusctl.video import Scene

workdir = Path(tempfile.mkdtemp(prefix="corpusctl-demo-"))


def backend_command(scenario, name, seed):
    path = workdir / name
    path.write_text(json.dumps(scenario))
    return [sys.executable, "-m", "corpusctl.backends.synth", "--scenario", str(path), "--seed", str(seed)]


def scenes_of(scenario, snippet_id):
    snippet = next(s for s in scenario["snippets"] if s["id"] == snippet_id)
    return [Scene(s["start_frame"], s["end_frame"]) for s in snippet["scenes"]]


reference = [target_anchor(128)]
config = DiarizeConfig()

# --- story 1: the interviewer speaks, the target just listens ------------
scenario = listening_interview_scenario()
with BackendSession(backend_command(scenario, "interview.json", seed=0)) as session:
    result = run_snippet(session, "interview_listening", scenes_of(scenario, "interview_listening"),
                         reference, config)
decision = result.decision
print(f"interview snippet accepted: {decision.accepted} (reason: {decision.reason})")
for scene_decision in decision.scene_decisions:
    scene = scene_decision.scene
    verdict = scene_decision.chosen_track if scene_decision.chosen_track is not None else "none"
    print(f"  scene [{scene.start_frame:>3}-{scene.end_frame:>3}): chosen track = {verdict}")

# --- story 2: a 100-snippet validation set with calibrated noise ---------
scenario = build_validation_scenario(100, seed=7, sigma_asd=0.15, sigma_emb=0.1, sigma_box=0.5)
truth = scenario_truth(scenario)
decisions = []
accepted_example = None
with BackendSession(backend_command(scenario, "validation.json", seed=11)) as session:
    for snippet in scenario["snippets"]:
        result = run_snippet(session, snippet["id"], scenes_of(scenario, snippet["id"]),
                             reference, config)
        decisions.append(result.decision)
        if result.decision.accepted and accepted_example is None:
            accepted_example = result

metrics = evaluate_pipeline(decisions, truth)
print(
    f"\nvalidation set: accuracy {metrics.accuracy:.2f}, precision {metrics.precision:.2f}, "
    f"recall {metrics.recall:.2f} (tp={metrics.tp} fp={metrics.fp} tn={metrics.tn} fn={metrics.fn})"
)

face_plan, lip_plan = build_recombination(
    accepted_example.decision, accepted_example.tracks, 640, 360,
    config.smoothing_window, config.pad,
)
first = min(face_plan.rects)
rect = face_plan.rects[first]
lip = lip_plan.rects[first]
print(
    f"\nrecombination plan for {accepted_example.decision.snippet_id}: "
    f"{len(face_plan.rects)} frames; frame {first} face=({rect.x},{rect.y},{rect.w},{rect.h}) "
    f"lip=({lip.x},{lip.y},{lip.w},{lip.h})"
)
