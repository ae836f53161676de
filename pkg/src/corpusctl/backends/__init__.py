"""Out-of-process model backends.

Neural models (face detection, active-speaker scoring, embeddings, pose,
speech segmentation) never run inside this package: they live in child
processes that speak protocol v1, NDJSON over stdin/stdout. See
``docs/backend-protocol.md`` for the wire format and
:mod:`corpusctl.backends.synth` for the deterministic scripted backend the
test suite and demos run against.
"""

from .protocol import (
    CAPABILITIES,
    PROTOCOL_VERSION,
    BackendRequest,
    BackendResponse,
    Handshake,
    parse_request,
    parse_response,
    serialize,
)
from .session import (
    BackendSession,
    BackendTimeoutError,
    ProtocolError,
    SessionClosedError,
)

__all__ = [
    "CAPABILITIES",
    "PROTOCOL_VERSION",
    "BackendRequest",
    "BackendResponse",
    "Handshake",
    "parse_request",
    "parse_response",
    "serialize",
    "BackendSession",
    "BackendTimeoutError",
    "ProtocolError",
    "SessionClosedError",
]
