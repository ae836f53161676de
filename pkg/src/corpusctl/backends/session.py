"""Client side of a backend child process."""

from __future__ import annotations

import subprocess
import threading
from ..errors import CorpusctlError, ParseError, RetriableError
from .protocol import (
    PROTOCOL_VERSION,
    BackendRequest,
    BackendResponse,
    Handshake,
    parse_handshake,
    parse_response,
    serialize,
)


class ProtocolError(CorpusctlError):
    """The backend spoke something other than protocol v1."""


class SessionClosedError(CorpusctlError):
    """The backend process exited while requests were outstanding."""


class BackendTimeoutError(RetriableError):
    def __init__(self, request_id: int, timeout: float):
        self.request_id = request_id
        super().__init__(f"request {request_id} timed out after {timeout:.1f} s")


class BackendSession:
    """One child process, one requester; requests may be pipelined.

    A reader thread collects response lines and matches them to pending
    request ids, so out-of-order replies are fine. A malformed response
    line is recorded in ``malformed_lines`` and skipped; it never corrupts
    the session. Use as a context manager to make sure the child dies.
    """

    def __init__(
        self,
        command: list[str],
        timeout: float = 30.0,
        pipeline_window: int = 64,
    ):
        self.timeout = timeout
        self.pipeline_window = pipeline_window
        self.malformed_lines: list[str] = []
        self._next_id = 0
        self._pending: set[int] = set()
        self._responses: dict[int, BackendResponse] = {}
        self._closed = False
        self._lock = threading.Condition()
        self._proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self.handshake = self._await_handshake()
        if self.handshake.proto != PROTOCOL_VERSION:
            self.close()
            raise ProtocolError(
                f"backend speaks protocol {self.handshake.proto}, need {PROTOCOL_VERSION}"
            )

    # -- reader thread ------------------------------------------------

    def _read_loop(self):
        handshake_done = False
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            with self._lock:
                if not handshake_done:
                    try:
                        self._handshake_msg = parse_handshake(line)
                    except ParseError:
                        self.malformed_lines.append(line)
                        continue
                    handshake_done = True
                    self._lock.notify_all()
                    continue
                try:
                    response = parse_response(line)
                except ParseError:
                    self.malformed_lines.append(line)
                    continue
                self._responses[response.request_id] = response
                self._pending.discard(response.request_id)
                self._lock.notify_all()
        with self._lock:
            self._closed = True
            self._lock.notify_all()

    def _await_handshake(self) -> Handshake:
        with self._lock:
            deadline_hit = not self._lock.wait_for(
                lambda: hasattr(self, "_handshake_msg") or self._closed, timeout=self.timeout
            )
        if deadline_hit:
            self.close()
            raise ProtocolError("backend did not send a handshake in time")
        if not hasattr(self, "_handshake_msg"):
            raise SessionClosedError("backend exited before sending a handshake")
        return self._handshake_msg

    # -- request/response ---------------------------------------------

    @property
    def capabilities(self) -> tuple[str, ...]:
        return self.handshake.capabilities

    def submit(self, capability: str, payload: dict | None = None) -> int:
        """Send a request without waiting; returns its id."""
        with self._lock:
            if self._closed:
                raise SessionClosedError("backend session is closed")
            if len(self._pending) >= self.pipeline_window:
                raise ProtocolError(
                    f"pipeline window of {self.pipeline_window} outstanding requests exceeded"
                )
            request = BackendRequest(self._next_id, capability, payload or {})
            self._next_id += 1
            self._pending.add(request.request_id)
        try:
            self._proc.stdin.write(serialize(request))
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise SessionClosedError("backend stdin closed") from exc
        return request.request_id

    def wait(self, request_id: int, timeout: float | None = None) -> BackendResponse:
        timeout = self.timeout if timeout is None else timeout
        with self._lock:
            ok = self._lock.wait_for(
                lambda: request_id in self._responses or self._closed, timeout=timeout
            )
            if request_id in self._responses:
                return self._responses.pop(request_id)
            if self._closed:
                raise SessionClosedError(
                    f"backend exited before answering request {request_id}"
                )
            if not ok:
                raise BackendTimeoutError(request_id, timeout)
        raise BackendTimeoutError(request_id, timeout)

    def call(self, capability: str, payload: dict | None = None,
             timeout: float | None = None) -> BackendResponse:
        return self.wait(self.submit(capability, payload), timeout)

    # -- lifecycle ------------------------------------------------------

    def close(self):
        with self._lock:
            self._closed = True
        if self._proc.stdin and not self._proc.stdin.closed:
            try:
                self._proc.stdin.close()
            except BrokenPipeError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
