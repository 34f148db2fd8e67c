"""Line-delimited wire protocol for attaching an external planner process.

The harness is the server: it binds an endpoint, accepts exactly one client,
and then exchanges newline-delimited UTF-8 JSON records. Each episode starts
with a handshake record carrying the protocol version and the episode config
(route, lights, planning parameters), to which the client must reply with a
matching hello. Requests and responses alternate strictly; responses must echo
the request's episode id and tick. Stale responses (an earlier tick arriving
after its deadline expired) are discarded.

Record types, in order of appearance:
  server -> {"type": "handshake", "protocol_version", "episode_id", "config"}
  client -> {"type": "hello", "protocol_version", "episode_id"}
  server -> {"type": "request", "episode_id", "tick", "prompt", "scene",
             "deadline_ms"}
  client -> {"type": "response", "episode_id", "tick", "text"}
  server -> {"type": "episode_end", "episode_id"}   (then next handshake)
  server -> {"type": "session_end"}                 (then the socket closes)
"""

from __future__ import annotations

import json
import socket
import time

from .planners import PlannerRequest, PlannerResponse

PROTOCOL_VERSION = 1


class WireError(RuntimeError):
    pass


class HandshakeVersionMismatch(WireError):
    pass


class PlannerTimeout(WireError):
    pass


class PlannerDisconnected(WireError):
    pass


def encode_record(record: dict) -> bytes:
    return json.dumps(record, separators=(",", ":")).encode("utf-8") + b"\n"


def decode_record(line: bytes) -> dict:
    record = json.loads(line.decode("utf-8"))
    if not isinstance(record, dict) or "type" not in record:
        raise WireError(f"malformed wire record: {line[:200]!r}")
    return record


class LineChannel:
    """Buffered line reader over a socket that survives read timeouts.

    A timeout mid-line keeps the partial bytes buffered, so a later read picks
    up where the stream left off instead of corrupting the framing.
    """

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._buf = bytearray()

    def read_line(self, deadline: float | None) -> bytes:
        """One complete line (without newline); raises PlannerTimeout past the
        deadline (monotonic seconds) and PlannerDisconnected on EOF."""
        while True:
            idx = self._buf.find(b"\n")
            if idx >= 0:
                line = bytes(self._buf[:idx])
                del self._buf[:idx + 1]
                return line
            if deadline is None:
                self._sock.settimeout(None)
            else:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise PlannerTimeout("deadline expired waiting for a record")
                self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout:
                raise PlannerTimeout("deadline expired waiting for a record") from None
            except OSError as exc:
                raise PlannerDisconnected(f"socket error: {exc}") from exc
            if not chunk:
                raise PlannerDisconnected("peer closed the connection")
            self._buf.extend(chunk)


class WireEpisodePlanner:
    """Planner facade for one episode over an established wire session."""

    name = "external"

    def __init__(self, server: "WirePlannerServer", episode_id: str):
        self._server = server
        self._episode_id = episode_id

    def plan(self, request: PlannerRequest) -> PlannerResponse:
        return self._server.exchange(request)


class WirePlannerServer:
    """Accepts one external planner client and runs episodes against it."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 accept_timeout_s: float = 30.0):
        self.host = host
        self.port = port
        self.accept_timeout_s = accept_timeout_s
        self._listener: socket.socket | None = None
        self._conn: socket.socket | None = None
        self._channel: LineChannel | None = None

    def listen(self) -> int:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(1)
        self._listener = listener
        self.port = listener.getsockname()[1]
        return self.port

    def accept(self) -> None:
        if self._listener is None:
            self.listen()
        assert self._listener is not None
        self._listener.settimeout(self.accept_timeout_s)
        try:
            conn, _addr = self._listener.accept()
        except socket.timeout:
            raise PlannerDisconnected(
                f"no planner client connected within {self.accept_timeout_s} s"
            ) from None
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._conn = conn
        self._channel = LineChannel(conn)

    def _send(self, record: dict) -> None:
        if self._conn is None:
            raise PlannerDisconnected("no client connection")
        try:
            self._conn.sendall(encode_record(record))
        except OSError as exc:
            raise PlannerDisconnected(f"send failed: {exc}") from exc

    def start_episode(self, episode_id: str, config: dict,
                      handshake_timeout_s: float = 30.0) -> WireEpisodePlanner:
        """Send the episode handshake and verify the client's hello."""
        if self._conn is None:
            self.accept()
        assert self._channel is not None
        self._send({"type": "handshake", "protocol_version": PROTOCOL_VERSION,
                    "episode_id": episode_id, "config": config})
        deadline = time.monotonic() + handshake_timeout_s
        record = decode_record(self._channel.read_line(deadline))
        if record.get("type") != "hello":
            raise WireError(f"expected hello, got {record.get('type')!r}")
        if record.get("protocol_version") != PROTOCOL_VERSION:
            self._send({"type": "error", "error": "HandshakeVersionMismatch"})
            raise HandshakeVersionMismatch(
                f"client speaks protocol {record.get('protocol_version')}, "
                f"server speaks {PROTOCOL_VERSION}")
        return WireEpisodePlanner(self, episode_id)

    def exchange(self, request: PlannerRequest) -> PlannerResponse:
        assert self._channel is not None
        start = time.monotonic()
        self._send({"type": "request", "episode_id": request.episode_id,
                    "tick": request.tick, "prompt": request.prompt,
                    "scene": request.scene, "deadline_ms": request.deadline_ms})
        deadline = start + request.deadline_ms / 1000.0
        while True:
            record = decode_record(self._channel.read_line(deadline))
            if record.get("type") != "response":
                continue
            if (record.get("episode_id") == request.episode_id
                    and record.get("tick") == request.tick):
                latency = (time.monotonic() - start) * 1000.0
                return PlannerResponse(episode_id=request.episode_id,
                                       tick=request.tick,
                                       text=str(record.get("text", "")),
                                       latency_ms=latency)
            # Stale response from a timed-out earlier request; drop it.

    def end_episode(self, episode_id: str) -> None:
        self._send({"type": "episode_end", "episode_id": episode_id})

    def close(self) -> None:
        if self._conn is not None:
            try:
                self._send({"type": "session_end"})
            except PlannerDisconnected:
                pass
            try:
                self._conn.close()
            except OSError:
                pass
            self._conn = None
            self._channel = None
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
            self._listener = None
