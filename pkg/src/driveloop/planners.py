"""Planner contract and built-in planners: the rule-based reference planner,
scripted fault planners for infraction testing, and a transcript replayer."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Protocol

from .oracle import OracleConfig, light_arcs, plan_trajectory
from .protocol import format_answer
from .route import RouteSpec


@dataclass(frozen=True)
class PlannerRequest:
    episode_id: str
    tick: int
    prompt: str
    scene: dict          # {"frames": [five scene frames, oldest first]}
    deadline_ms: int = 10000


@dataclass(frozen=True)
class PlannerResponse:
    episode_id: str
    tick: int
    text: str
    latency_ms: float = 0.0


class Planner(Protocol):
    name: str

    def plan(self, request: PlannerRequest) -> PlannerResponse: ...


# A factory builds one planner per episode from the episode's route and lights.
PlannerFactory = Callable[[RouteSpec, tuple], "Planner"]


class OraclePlanner:
    """Deterministic reference planner; answers in the canonical grammar."""

    def __init__(self, route: RouteSpec, lights, cfg: OracleConfig = OracleConfig(),
                 name: str = "oracle"):
        self.name = name
        self._route = route
        self._cfg = cfg
        self._arcs = light_arcs(route, lights)

    def plan(self, request: PlannerRequest) -> PlannerResponse:
        frame = request.scene["frames"][-1]
        traj = plan_trajectory(self._cfg, self._route, frame, self._arcs)
        return PlannerResponse(episode_id=request.episode_id, tick=request.tick,
                               text=format_answer(traj))


class StopPlanner:
    """Always answers five (0.00, 0.00) waypoints, i.e. a full stop."""

    name = "stopper"

    def plan(self, request: PlannerRequest) -> PlannerResponse:
        text = ("The next five passing waypoints are (0.00, 0.00), (0.00, 0.00), "
                "(0.00, 0.00), (0.00, 0.00), (0.00, 0.00).")
        return PlannerResponse(episode_id=request.episode_id, tick=request.tick,
                               text=text)


class MutePlanner:
    """Returns empty text every query; exercises the parse-failure fallback."""

    name = "mute"

    def plan(self, request: PlannerRequest) -> PlannerResponse:
        return PlannerResponse(episode_id=request.episode_id, tick=request.tick,
                               text="")


class TranscriptExhausted(RuntimeError):
    pass


class TranscriptPlanner:
    """Replays a recorded sequence of answer texts, one per query in order.

    Entries may also be the sentinel outcome strings "timeout" or
    "disconnected" paired with text None, in which case the original transport
    error is re-raised so a replayed episode follows the same fallback path.
    """

    name = "transcript"

    def __init__(self, entries):
        # entries: list of (outcome, text-or-None)
        self._entries = list(entries)
        self._next = 0

    def plan(self, request: PlannerRequest) -> PlannerResponse:
        from .wire import PlannerDisconnected, PlannerTimeout

        if self._next >= len(self._entries):
            raise TranscriptExhausted(
                f"transcript has {len(self._entries)} responses, "
                f"query #{self._next + 1} requested")
        outcome, text = self._entries[self._next]
        self._next += 1
        if outcome == "timeout":
            raise PlannerTimeout("recorded timeout")
        if outcome == "disconnected":
            raise PlannerDisconnected("recorded disconnect")
        return PlannerResponse(episode_id=request.episode_id, tick=request.tick,
                               text=text)


def oracle_factory(cfg: OracleConfig = OracleConfig()) -> PlannerFactory:
    def make(route: RouteSpec, lights) -> OraclePlanner:
        return OraclePlanner(route, lights, cfg)
    return make


def fault_factory(name: str, cfg: OracleConfig = OracleConfig()) -> PlannerFactory:
    """Scripted fault planners, each designed to trigger one infraction kind."""
    if name == "red-light-runner":
        runner_cfg = replace(cfg, obey_lights=False)

        def make(route: RouteSpec, lights) -> OraclePlanner:
            return OraclePlanner(route, lights, runner_cfg, name="red-light-runner")
        return make
    if name == "collider":
        collider_cfg = replace(cfg, obey_npcs=False)

        def make(route: RouteSpec, lights) -> OraclePlanner:
            return OraclePlanner(route, lights, collider_cfg, name="collider")
        return make
    if name == "stopper":
        return lambda route, lights: StopPlanner()
    if name == "mute":
        return lambda route, lights: MutePlanner()
    raise KeyError(f"unknown fault planner {name!r}; "
                   f"known: red-light-runner, collider, stopper, mute")


FAULT_PLANNER_NAMES = ("red-light-runner", "collider", "stopper", "mute")
