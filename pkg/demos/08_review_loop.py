"""The semi-automatic loop: review decisions feed the next pipeline run.

Seeds review items from diarize output, plays a reviewer session (accept,
fix a transcript, promote a reference face, hit a conflict), exports the
grown reference set, and shows that a second diarize run can consume it.
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from corpusctl.backends import BackendSession
from corpusctl.backends.synth import build_validation_scenario, target_anchor
from corpusctl.diarize import DiarizeConfig, run_snippet
from corpusctl.reviewsvc import ConflictError, ReviewDecision, ReviewStore, build_items
from corpusctl.snippeter import Snippet
from corpusctl.video import Scene

workdir = Path(tempfile.mkdtemp(prefix="corpusctl-demo-"))
scenario = build_validation_scenario(8, seed=3)
scenario_path = workdir / "scenario.json"
scenario_path.write_text(json.dumps(scenario))
backend = [sys.executable, "-m", "corpusctl.backends.synth",
           "--scenario", str(scenario_path), "--seed", "5"]

# first pipeline run with a hand-curated single-vector reference set
rows = []
snippets = {}
with BackendSession(backend) as session:
    for snippet in scenario["snippets"]:
        scenes = [Scene(s["start_frame"], s["end_frame"]) for s in snippet["scenes"]]
        result = run_snippet(session, snippet["id"], scenes, [target_anchor(128)], DiarizeConfig())
        rows.append(result.to_json())
        end_ms = int(scenes[-1].end_frame / 25 * 1000)
        snippets[snippet["id"]] = Snippet(snippet["id"], "ep1", 0, end_ms, "text", 1, "subtitle")

items = build_items(rows, snippets)
print(f"diarize accepted {len(items)} of {len(rows)} snippets; queued for review")

store = ReviewStore(workdir / "ledger.ndjson", items)

# the reviewer works through the queue
page, _ = store.list_items(status="pending", page_size=10)
first, second = page[0], page[1]

store.submit_decision(ReviewDecision(
    snippet_id=first.snippet_id, base_revision=0, verdict="accept",
    corrected_text=first.text + " (korrigiert)", reviewer="alex",
))
print(f"accepted {first.snippet_id} with a transcript fix")

promo = {"scene": first.scenes[0]["scene"], "track_id": first.scenes[0]["chosen_track"]}
store.submit_decision(ReviewDecision(
    snippet_id=first.snippet_id, base_revision=1, verdict="accept",
    promote_reference=promo, reviewer="alex",
))
print(f"promoted scene {promo['scene']} track {promo['track_id']} to the reference set")

store.submit_decision(ReviewDecision(
    snippet_id=second.snippet_id, base_revision=0, verdict="reject", reviewer="alex",
))
try:  # second reviewer acting on a stale revision loses cleanly
    store.submit_decision(ReviewDecision(
        snippet_id=second.snippet_id, base_revision=0, verdict="accept", reviewer="kim",
    ))
except ConflictError as conflict:
    print(f"stale decision on {second.snippet_id} rejected; "
          f"current revision is {conflict.item.revision}")

descriptor = store.export_reference_set()
print(f"\nexported reference set: {len(descriptor['promotions'])} promotion(s)")

# the promoted embedding anchors the next run's reference set
reference = [np.asarray(p["embedding"]) for p in descriptor["promotions"]]
with BackendSession(backend) as session:
    snippet = scenario["snippets"][0]
    scenes = [Scene(s["start_frame"], s["end_frame"]) for s in snippet["scenes"]]
    result = run_snippet(session, snippet["id"], scenes, reference, DiarizeConfig())
print(f"re-ran {snippet['id']} against the promoted references: accepted={result.decision.accepted}")

# the ledger replays to the same state: the loop is auditable
rebuilt = ReviewStore(workdir / "ledger.ndjson", build_items(rows, snippets))
assert rebuilt.state_snapshot() == store.state_snapshot()
print("ledger replay reproduces the live state exactly")
