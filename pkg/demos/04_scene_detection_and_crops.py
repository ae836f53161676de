"""Detect hard cuts in a synthetic y4m stream and render face crops.

Builds a three-scene clip (two camera changes) in memory, finds the cuts
from luma differences alone, then renders a drifting crop window back out
as a new y4m stream.
"""

import numpy as np

from corpusctl.video import (
    CropPlan,
    CropRect,
    Frame,
    detect_scenes,
    read_y4m,
    render_crops,
    scene_content_scores,
    write_y4m,
)
from corpusctl.video import FrameStream


def textured_frame(width, height, base, seed):
    rng = np.random.default_rng(seed)
    y = np.clip(base + rng.integers(-12, 13, (height, width)), 0, 255).astype(np.uint8)
    u = np.full((height // 2, width // 2), 128, np.uint8)
    v = np.full((height // 2, width // 2), 128, np.uint8)
    return Frame(y, u, v)


frames = []
for scene_idx, (level, length) in enumerate([(40, 30), (180, 25), (90, 35)]):
    frames += [textured_frame(64, 48, level, seed=scene_idx * 1000 + k) for k in range(length)]

stream = FrameStream(64, 48, 25, 1, frames)
data = write_y4m(stream)
print(f"synthetic clip: {len(frames)} frames, {len(data)} bytes of y4m")

scores = scene_content_scores(read_y4m(data))
print(f"content scores: median {np.median(scores):.1f}, top two {sorted(scores)[-2:]}")

scenes = detect_scenes(read_y4m(data), threshold=27.0, min_scene_frames=15)
print("detected scenes:", [(s.start_frame, s.end_frame) for s in scenes])

# a crop window drifting right across the first scene, as a face would
plan = CropPlan(
    {k: CropRect(8 + k // 3, 6, 32, 32) for k in range(len(frames))}
)
cropped = render_crops(read_y4m(data), plan, out_size=32)
out = write_y4m(cropped)
print(f"rendered {len(frames)} crops at 32x32 -> {len(out)} bytes of y4m")
