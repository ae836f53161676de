"""Raw frame streams, hard-cut detection and crop rendering.

All frame I/O is uncompressed YUV4MPEG2 (4:2:0 planar); anything encoded is
someone else's job to pipe in. That keeps this module codec-free and every
operation bit-exactly testable: scene scoring is plain luma arithmetic and
crop rendering is deterministic bilinear resampling.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "Frame",
    "FrameStream",
    "Scene",
    "CropRect",
    "CropPlan",
    "read_y4m",
    "write_y4m",
    "detect_scenes",
    "render_crops",
    "scene_content_scores",
    "DEFAULT_SCENE_THRESHOLD",
    "DEFAULT_MIN_SCENE_FRAMES",
]

DEFAULT_SCENE_THRESHOLD = 27.0
DEFAULT_MIN_SCENE_FRAMES = 15

_C420_FAMILY = {"420", "420jpeg", "420mpeg2", "420paldv"}


@dataclass(frozen=True)
class Frame:
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray


@dataclass
class FrameStream:
    """A lazily-iterable 4:2:0 planar frame stream."""

    width: int
    height: int
    fps_num: int
    fps_den: int
    frames: Iterable[Frame]
    header_tokens: tuple[str, ...] = ()  # non-W/H/F header tokens, original order

    @property
    def fps(self) -> float:
        return self.fps_num / self.fps_den

    def __iter__(self) -> Iterator[Frame]:
        return iter(self.frames)

    def materialize(self) -> "FrameStream":
        return FrameStream(
            self.width, self.height, self.fps_num, self.fps_den,
            list(self.frames), self.header_tokens,
        )


@dataclass(frozen=True)
class Scene:
    start_frame: int  # inclusive
    end_frame: int  # exclusive

    def __post_init__(self):
        if self.start_frame >= self.end_frame:
            raise ValidationError(f"scene [{self.start_frame}, {self.end_frame}) is empty")

    def to_json(self) -> dict:
        return {"start_frame": self.start_frame, "end_frame": self.end_frame}

    @classmethod
    def from_json(cls, data: dict) -> "Scene":
        return cls(data["start_frame"], data["end_frame"])


# --------------------------------------------------------------------------
# YUV4MPEG2 reading/writing

def _read_line(stream: BinaryIO, what: str) -> bytes:
    chunks = bytearray()
    while True:
        byte = stream.read(1)
        if not byte:
            raise ParseError(f"unexpected end of stream in {what}")
        if byte == b"\n":
            return bytes(chunks)
        chunks += byte


def read_y4m(source: bytes | BinaryIO) -> FrameStream:
    """Parse a YUV4MPEG2 byte stream into a lazy FrameStream.

    Only the 4:2:0 chroma family is accepted. Header tokens other than
    W/H/F are preserved verbatim so a read->write round trip is bitwise
    lossless. Frames are yielded as they are read; a truncated payload
    raises naming the frame index.
    """
    stream = io.BytesIO(source) if isinstance(source, bytes) else source
    header = _read_line(stream, "stream header")
    tokens = header.split(b" ")
    if tokens[0] != b"YUV4MPEG2":
        raise ParseError("bad magic: stream does not start with YUV4MPEG2")
    width = height = None
    fps_num, fps_den = 25, 1
    extra: list[str] = []
    for raw in tokens[1:]:
        token = raw.decode("ascii", errors="replace")
        if not token:
            continue
        key, value = token[0], token[1:]
        if key == "W":
            width = int(value)
        elif key == "H":
            height = int(value)
        elif key == "F":
            num, _, den = value.partition(":")
            fps_num, fps_den = int(num), int(den or "1")
        else:
            if key == "C" and value not in _C420_FAMILY:
                raise ParseError(f"unsupported colorspace C{value}; only the 4:2:0 family is handled")
            extra.append(token)
    if not width or not height:
        raise ParseError("header missing W or H")
    if width % 2 or height % 2:
        raise ParseError(f"4:2:0 needs even dimensions, got {width}x{height}")

    y_size = width * height
    c_size = (width // 2) * (height // 2)

    def frame_iter() -> Iterator[Frame]:
        index = 0
        while True:
            marker = stream.read(5)
            if not marker:
                return
            if marker != b"FRAME":
                raise ParseError(f"expected FRAME marker at frame {index}")
            rest = bytearray(b"")
            while True:
                byte = stream.read(1)
                if not byte:
                    raise ParseError(f"truncated frame header at frame {index}")
                if byte == b"\n":
                    break
                rest += byte
            payload = stream.read(y_size + 2 * c_size)
            if len(payload) < y_size + 2 * c_size:
                raise ParseError(f"truncated frame payload at frame {index}")
            y = np.frombuffer(payload, np.uint8, y_size).reshape(height, width)
            u = np.frombuffer(payload, np.uint8, c_size, y_size).reshape(height // 2, width // 2)
            v = np.frombuffer(payload, np.uint8, c_size, y_size + c_size).reshape(
                height // 2, width // 2
            )
            yield Frame(y, u, v)
            index += 1

    return FrameStream(width, height, fps_num, fps_den, frame_iter(), tuple(extra))


def write_y4m(stream: FrameStream, sink: BinaryIO | None = None) -> bytes | None:
    """Serialize a FrameStream; returns bytes when no sink is given."""
    buffer = sink if sink is not None else io.BytesIO()
    header = f"YUV4MPEG2 W{stream.width} H{stream.height} F{stream.fps_num}:{stream.fps_den}"
    for token in stream.header_tokens:
        header += " " + token
    buffer.write(header.encode("ascii") + b"\n")
    for frame in stream:
        buffer.write(b"FRAME\n")
        buffer.write(frame.y.tobytes())
        buffer.write(frame.u.tobytes())
        buffer.write(frame.v.tobytes())
    if sink is None:
        return buffer.getvalue()
    return None


# --------------------------------------------------------------------------
# scene detection

def _downscale_luma(y: np.ndarray, max_width: int = 256) -> np.ndarray:
    h, w = y.shape
    factor = math.ceil(w / max_width)
    if factor <= 1:
        return y.astype(np.float64)
    h2, w2 = (h // factor) * factor, (w // factor) * factor
    trimmed = y[:h2, :w2].astype(np.float64)
    return trimmed.reshape(h2 // factor, factor, w2 // factor, factor).mean(axis=(1, 3))


def scene_content_scores(stream: FrameStream) -> list[float]:
    """Mean absolute luma difference (0..255) per consecutive frame pair."""
    scores: list[float] = []
    prev = None
    for frame in stream:
        small = _downscale_luma(frame.y)
        if prev is not None:
            scores.append(float(np.mean(np.abs(small - prev))))
        prev = small
    return scores


def detect_scenes(
    stream: FrameStream,
    threshold: float = DEFAULT_SCENE_THRESHOLD,
    min_scene_frames: int = DEFAULT_MIN_SCENE_FRAMES,
) -> list[Scene]:
    """Partition the stream at hard cuts.

    A cut lands at frame i when the content score between frames i-1 and i
    exceeds ``threshold`` and the running scene already spans at least
    ``min_scene_frames`` frames (the final scene may be shorter). Every
    frame belongs to exactly one scene.
    """
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    cut_at: list[int] = []
    count = 0
    prev = None
    last_cut = 0
    for index, frame in enumerate(stream):
        small = _downscale_luma(frame.y)
        if prev is not None:
            score = float(np.mean(np.abs(small - prev)))
            if score > threshold and index - last_cut >= min_scene_frames:
                cut_at.append(index)
                last_cut = index
        prev = small
        count = index + 1
    if count == 0:
        return []
    bounds = [0] + cut_at + [count]
    return [Scene(a, b) for a, b in zip(bounds, bounds[1:])]


# --------------------------------------------------------------------------
# crop rendering

@dataclass(frozen=True)
class CropRect:
    x: int
    y: int
    w: int
    h: int

    def clamped(self, width: int, height: int) -> "CropRect":
        x = min(max(self.x, 0), width - 1)
        y = min(max(self.y, 0), height - 1)
        w = max(1, min(self.w, width - x))
        h = max(1, min(self.h, height - y))
        return CropRect(x, y, w, h)


@dataclass
class CropPlan:
    """One crop rectangle per frame index (luma coordinates)."""

    rects: dict[int, CropRect] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "rects": [
                {"frame": i, "x": r.x, "y": r.y, "w": r.w, "h": r.h}
                for i, r in sorted(self.rects.items())
            ]
        }

    @classmethod
    def from_json(cls, data: dict) -> "CropPlan":
        rects = {
            entry["frame"]: CropRect(entry["x"], entry["y"], entry["w"], entry["h"])
            for entry in data["rects"]
        }
        return cls(rects=rects)

    @classmethod
    def load(cls, path) -> "CropPlan":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_json(json.load(handle))


def resize_bilinear(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Center-aligned bilinear resample with clamp-to-edge borders.

    Sample position for output pixel i is (i + 0.5) * in/out - 0.5, so a
    same-size resample is an exact copy. Interpolation order is fixed
    (horizontal lerp, then vertical, round half to even) so outputs are
    reproducible bit for bit.
    """
    in_h, in_w = plane.shape
    if (in_h, in_w) == (out_h, out_w):
        return plane.copy()
    sy = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0, in_h - 1)
    sx = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0, in_w - 1)
    y0 = np.floor(sy).astype(int)
    x0 = np.floor(sx).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (sy - y0)[:, None]
    wx = (sx - x0)[None, :]
    p = plane.astype(np.float64)
    top = p[np.ix_(y0, x0)] * (1 - wx) + p[np.ix_(y0, x1)] * wx
    bottom = p[np.ix_(y1, x0)] * (1 - wx) + p[np.ix_(y1, x1)] * wx
    out = top * (1 - wy[:, :1]) + bottom * wy[:, :1]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _chroma_rect(rect: CropRect) -> tuple[int, int, int, int]:
    # cover the luma region at half resolution
    cx = rect.x // 2
    cy = rect.y // 2
    cw = max(1, math.ceil((rect.x + rect.w) / 2) - cx)
    ch = max(1, math.ceil((rect.y + rect.h) / 2) - cy)
    return cx, cy, cw, ch


def render_crops(stream: FrameStream, plan: CropPlan, out_size: int) -> FrameStream:
    """Crop each frame per the plan and resample to out_size x out_size.

    Rectangles are clamped to the frame; chroma is cropped at half
    resolution over the same region. Frame count and fps are preserved.
    """
    if out_size < 2 or out_size % 2:
        raise ValueError("out_size must be an even number >= 2")

    def frame_iter() -> Iterator[Frame]:
        for index, frame in enumerate(stream):
            rect = plan.rects.get(index)
            if rect is None:
                raise ValidationError(f"crop plan is missing frame index {index}")
            rect = rect.clamped(stream.width, stream.height)
            y = resize_bilinear(
                frame.y[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w], out_size, out_size
            )
            cx, cy, cw, ch = _chroma_rect(rect)
            half = out_size // 2
            u = resize_bilinear(frame.u[cy : cy + ch, cx : cx + cw], half, half)
            v = resize_bilinear(frame.v[cy : cy + ch, cx : cx + cw], half, half)
            yield Frame(y, u, v)

    return FrameStream(
        out_size, out_size, stream.fps_num, stream.fps_den, frame_iter(), stream.header_tokens
    )
