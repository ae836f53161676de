import json
from datetime import date
from pathlib import Path

import numpy as np
import pytest

from corpusctl.catalog import CorpusManifest, PodcastRecord
from corpusctl.video import Frame, FrameStream

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def make_record(record_id: str, on: str = "2014-06-01", **kwargs) -> PodcastRecord:
    defaults = dict(
        id=record_id,
        date=date.fromisoformat(on),
        title=f"Podcast {record_id}",
        format="interview",
        media_path=f"media/{record_id}.mp4",
    )
    defaults.update(kwargs)
    return PodcastRecord(**defaults)


def make_manifest(records) -> CorpusManifest:
    return CorpusManifest(records=tuple(records), created_at="2021-06-01T00:00:00+00:00")


def solid_frame(width: int, height: int, y: int, u: int = 128, v: int = 128) -> Frame:
    return Frame(
        y=np.full((height, width), y, dtype=np.uint8),
        u=np.full((height // 2, width // 2), u, dtype=np.uint8),
        v=np.full((height // 2, width // 2), v, dtype=np.uint8),
    )


def make_stream(frames, width: int, height: int, fps=(25, 1)) -> FrameStream:
    return FrameStream(width, height, fps[0], fps[1], list(frames))


def write_ndjson(path: Path, rows) -> Path:
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path
