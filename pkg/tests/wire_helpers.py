"""Test-only wire clients: a socket peer that answers planner requests with a
pluggable callback, plus an echo-of-reference-planner callback built from the
handshake config."""

from __future__ import annotations

import json
import socket
import threading
import time

from driveloop.oracle import OracleConfig, plan_trajectory, stop_line_arc
from driveloop.protocol import format_answer
from driveloop.scenario import route_from_dict
from driveloop.world import LightPhase, TrafficLight


class LoopbackClient(threading.Thread):
    """Connects to a harness endpoint and serves until the session ends.

    callback(request_record, episode_config) -> answer text. A delay_s > 0
    sleeps before every response to exercise deadline handling.
    """

    def __init__(self, host: str, port: int, callback, protocol_version: int = 1,
                 delay_s: float = 0.0, delay_first_only: bool = False):
        super().__init__(daemon=True)
        self.host = host
        self.port = port
        self.callback = callback
        self.protocol_version = protocol_version
        self.delay_s = delay_s
        self.delay_first_only = delay_first_only
        self.served = 0
        self.error: str | None = None

    def run(self) -> None:
        try:
            self._serve()
        except Exception as exc:  # surfaced via .error in the test
            self.error = f"{type(exc).__name__}: {exc}"

    def _serve(self) -> None:
        sock = socket.create_connection((self.host, self.port), timeout=10.0)
        sock.settimeout(20.0)
        buf = b""
        config = None
        delayed_once = False
        with sock:
            while True:
                while b"\n" not in buf:
                    chunk = sock.recv(65536)
                    if not chunk:
                        return
                    buf += chunk
                line, buf = buf.split(b"\n", 1)
                record = json.loads(line.decode("utf-8"))
                kind = record["type"]
                if kind == "handshake":
                    config = record["config"]
                    sock.sendall(json.dumps(
                        {"type": "hello",
                         "protocol_version": self.protocol_version,
                         "episode_id": record["episode_id"]},
                        separators=(",", ":")).encode() + b"\n")
                elif kind == "request":
                    if self.delay_s > 0.0 and not (self.delay_first_only
                                                   and delayed_once):
                        delayed_once = True
                        time.sleep(self.delay_s)
                    text = self.callback(record, config)
                    sock.sendall(json.dumps(
                        {"type": "response", "episode_id": record["episode_id"],
                         "tick": record["tick"], "text": text},
                        separators=(",", ":")).encode() + b"\n")
                    self.served += 1
                elif kind == "episode_end":
                    continue
                elif kind in ("session_end", "error"):
                    return


def echo_oracle_callback(request: dict, config: dict) -> str:
    """Recompute the reference planner's answer from wire-visible data only."""
    route = route_from_dict(config["route"])
    oracle_cfg = OracleConfig.from_dict(config["oracle"])
    arcs = {}
    for light in config["lights"]:
        fake = TrafficLight(id=light["id"],
                            stop_line=((light["stop_line"][0][0],
                                        light["stop_line"][0][1]),
                                       (light["stop_line"][1][0],
                                        light["stop_line"][1][1])),
                            schedule=((LightPhase.RED, 1.0),))
        arc = stop_line_arc(route, fake)
        if arc is not None:
            arcs[light["id"]] = arc
    frame = request["scene"]["frames"][-1]
    return format_answer(plan_trajectory(oracle_cfg, route, frame, arcs))


def gibberish_callback(request: dict, config: dict) -> str:
    return "sorry, no waypoints today"
