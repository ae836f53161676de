"""Backend wire protocol v1: NDJSON messages over child-process pipes.

Three message shapes travel the wire, one JSON object per line:

- Handshake (backend -> client, first line):
  ``{"proto": 1, "capabilities": [...], "face_dim": 128, "speaker_dim": 256,
  "media": "path/to/frames.y4m"}``
- Request (client -> backend):
  ``{"request_id": 7, "capability": "asd_score", "payload": {...}}``
- Response (backend -> client):
  ``{"request_id": 7, "status": "ok", "payload": {...}}``

Responses may arrive out of order; ``request_id`` is the correlation key.
Frame pixels never travel the wire: payloads reference frames by index into
the media file named in the handshake (plus a ``snippet_id`` routing key
when the backend serves more than one clip).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import ParseError

PROTOCOL_VERSION = 1

CAPABILITIES = (
    "face_detect",
    "asd_score",
    "face_embed",
    "pose_angles",
    "speech_segments",
    "speaker_embed",
)

STATUSES = ("ok", "unsupported", "error")


@dataclass(frozen=True)
class Handshake:
    proto: int = PROTOCOL_VERSION
    capabilities: tuple[str, ...] = CAPABILITIES
    face_dim: int = 128
    speaker_dim: int = 256
    media: str = ""

    def to_json(self) -> dict:
        return {
            "proto": self.proto,
            "capabilities": list(self.capabilities),
            "face_dim": self.face_dim,
            "speaker_dim": self.speaker_dim,
            "media": self.media,
        }


@dataclass(frozen=True)
class BackendRequest:
    request_id: int
    capability: str
    payload: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "capability": self.capability,
            "payload": self.payload,
        }


@dataclass(frozen=True)
class BackendResponse:
    request_id: int
    status: str = "ok"
    payload: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "status": self.status,
            "payload": self.payload,
        }


def serialize(message: Handshake | BackendRequest | BackendResponse) -> str:
    """One NDJSON line, newline included."""
    return json.dumps(message.to_json(), ensure_ascii=False, separators=(",", ":")) + "\n"


def _load(line: str, what: str) -> dict:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed {what} line: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{what} is not a JSON object")
    return data


def parse_handshake(line: str) -> Handshake:
    data = _load(line, "handshake")
    if "proto" not in data:
        raise ParseError("handshake missing 'proto'")
    return Handshake(
        proto=int(data["proto"]),
        capabilities=tuple(data.get("capabilities", ())),
        face_dim=int(data.get("face_dim", 128)),
        speaker_dim=int(data.get("speaker_dim", 256)),
        media=data.get("media", ""),
    )


def parse_request(line: str) -> BackendRequest:
    data = _load(line, "request")
    try:
        return BackendRequest(
            request_id=int(data["request_id"]),
            capability=str(data["capability"]),
            payload=data.get("payload", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad request fields: {exc}") from None


def parse_response(line: str) -> BackendResponse:
    data = _load(line, "response")
    try:
        response = BackendResponse(
            request_id=int(data["request_id"]),
            status=str(data.get("status", "ok")),
            payload=data.get("payload", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad response fields: {exc}") from None
    if response.status not in STATUSES:
        raise ParseError(f"unknown response status {response.status!r}")
    return response
