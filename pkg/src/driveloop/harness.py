"""The closed loop: step the world at 10 Hz, query the planner on a cadence,
parse answers with a fallback policy, drive the PID stage, detect infractions,
terminate and score. Also: benchmark orchestration and trace replay."""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field

from .config import HarnessConfig, config_fingerprint, config_from_dict, config_to_dict
from .control import waypoints_to_control
from .geometry import normalize_angle, to_ego_frame, to_frame
from .infractions import InfractionKind, InfractionMonitor, infraction_score
from .planners import (Planner, PlannerFactory, PlannerRequest,
                       TranscriptExhausted, TranscriptPlanner)
from .protocol import (ATTENTION_PREFIX, ATTENTION_PREFIX_ALT, AnswerParseError,
                       PROMPT_BODY_CANONICAL, PROMPT_BODY_TABLE, format_prompt,
                       parse_answer)
from .route import RouteTracker, TargetWaypoint, point_at_arc, route_completion
from .scenario import (Scenario, materialize_npcs, route_to_dict,
                       scenario_from_dict, scenario_to_dict)
from .scoring import EpisodeResult, Termination, aggregate
from .wire import (HandshakeVersionMismatch, PlannerDisconnected, PlannerTimeout,
                   WirePlannerServer)
from .world import (BRAKE_COMMAND, EgoState, WorldState, light_phase, step_world)

TRACE_SCHEMA_VERSION = 1


class PlannerUnavailable(RuntimeError):
    pass


class FingerprintMismatch(RuntimeError):
    pass


class ReplayDivergence(RuntimeError):
    pass


def scene_frame(world: WorldState) -> dict:
    """Structured per-tick observation standing in for a camera frame.

    NPC poses are expressed in the ego frame (x right-positive, y forward) and
    the ego heading ships as an explicit cosine/sine pair so wire peers can do
    frame math without transcendental functions.
    """
    ego = world.ego
    cos_yaw = math.cos(ego.pose.yaw)
    sin_yaw = math.sin(ego.pose.yaw)
    npcs = []
    for npc in world.npcs:
        x_lat, y_lon = to_frame(ego.pose.x, ego.pose.y, cos_yaw, sin_yaw,
                                npc.pose.x, npc.pose.y)
        npcs.append({"id": npc.id, "kind": npc.kind.value, "x": x_lat,
                     "y": y_lon,
                     "yaw": normalize_angle(npc.pose.yaw - ego.pose.yaw)})
    lights = [{"id": light.id,
               "phase": light_phase(light, world.tick, world.dt).value}
              for light in world.lights]
    return {
        "tick": world.tick,
        "ego": {"x": ego.pose.x, "y": ego.pose.y, "yaw": ego.pose.yaw,
                "cos_yaw": cos_yaw, "sin_yaw": sin_yaw, "speed": ego.speed},
        "npcs": npcs,
        "lights": lights,
    }


def world_hash(world: WorldState) -> str:
    """Stable digest of the dynamic world state at one tick."""
    parts = (
        world.tick,
        repr(world.ego.pose.x), repr(world.ego.pose.y),
        repr(world.ego.pose.yaw), repr(world.ego.speed),
        tuple((npc.id, repr(npc.pose.x), repr(npc.pose.y), repr(npc.pose.yaw))
              for npc in world.npcs),
        tuple((light.id, light_phase(light, world.tick, world.dt).value)
              for light in world.lights),
    )
    return hashlib.sha256(repr(parts).encode("utf-8")).hexdigest()[:16]


def _prefix_text(cfg: HarnessConfig) -> str:
    return ATTENTION_PREFIX_ALT if cfg.attention_prefix_variant == "alt" \
        else ATTENTION_PREFIX


def _body_text(cfg: HarnessConfig) -> str:
    return PROMPT_BODY_TABLE if cfg.prompt_body_variant == "table" \
        else PROMPT_BODY_CANONICAL


def build_handshake_config(scenario: Scenario, cfg: HarnessConfig) -> dict:
    """Episode config sent to a wire-attached planner: everything it needs to
    reproduce the reference planner's geometry."""
    return {
        "dt": cfg.dt,
        "waypoint_spacing": cfg.oracle.wp_dt,
        "attention_prefix": cfg.attention_prefix,
        "planner_cadence": cfg.planner_cadence,
        "deadline_ms": cfg.planner_deadline_ms,
        "route": route_to_dict(scenario.route),
        "lights": [
            {"id": light.id,
             "stop_line": [[light.stop_line[0][0], light.stop_line[0][1]],
                           [light.stop_line[1][0], light.stop_line[1][1]]]}
            for light in scenario.lights
        ],
        "oracle": cfg.oracle.to_dict(),
    }


@dataclass
class EpisodeTrace:
    episode_id: str
    route_id: str
    planner_name: str
    fingerprint: str
    config: dict
    scenario: dict
    ticks: list[dict] = field(default_factory=list)
    queries: list[dict] = field(default_factory=list)
    result: dict = field(default_factory=dict)
    schema_version: int = TRACE_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "episode_id": self.episode_id,
            "route_id": self.route_id,
            "planner_name": self.planner_name,
            "fingerprint": self.fingerprint,
            "config": self.config,
            "scenario": self.scenario,
            "ticks": self.ticks,
            "queries": self.queries,
            "result": self.result,
        }


def trace_to_bytes(trace: EpisodeTrace) -> bytes:
    return (json.dumps(trace.to_dict(), sort_keys=True, separators=(",", ":"))
            + "\n").encode("utf-8")


def save_trace(trace: EpisodeTrace, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(trace_to_bytes(trace))


def load_trace(path: str) -> dict:
    with open(path, "rb") as fh:
        return json.loads(fh.read().decode("utf-8"))


def run_episode(scenario: Scenario, planner: Planner, cfg: HarnessConfig,
                episode_id: str | None = None,
                ) -> tuple[EpisodeResult, EpisodeTrace]:
    """Run one closed-loop episode to termination.

    Per tick: query the planner every planner_cadence ticks (reusing the last
    valid plan for up to reuse_last_plan_max consecutive failures, then holding
    a full emergency brake), convert the active plan to a control command, step
    the world, refresh the 5-frame observation window, run infraction
    detection, and stop on completion, blocked, deviation or timeout.
    """
    route = scenario.route
    episode_id = episode_id or scenario.id
    timeout_s = cfg.episode_timeout_s(route.length)
    max_ticks = int(math.ceil(timeout_s / cfg.dt))

    world = WorldState(
        tick=0, dt=cfg.dt,
        ego=EgoState(pose=scenario.ego_spawn, speed=0.0,
                     wheelbase=cfg.vehicle.wheelbase),
        npcs=materialize_npcs(scenario, max_ticks + 1, cfg.dt),
        lights=scenario.lights,
        rng_seed=cfg.seed,
    )
    window: deque = deque([scene_frame(world)] * 5, maxlen=5)
    tracker = RouteTracker(route)
    s, offset = tracker.project(world.ego.pose.x, world.ego.pose.y)
    monitor = InfractionMonitor(cfg.detector, cfg.vehicle)
    heading_state, speed_state = cfg.controller.initial_states()

    trace = EpisodeTrace(
        episode_id=episode_id, route_id=route.id,
        planner_name=getattr(planner, "name", "unknown"),
        fingerprint=config_fingerprint(cfg),
        config=config_to_dict(cfg), scenario=scenario_to_dict(scenario),
    )

    prefix = _prefix_text(cfg)
    body = _body_text(cfg)
    # Fixed-target mode hands out one far target per route segment, advancing
    # by the route's target spacing once the ego closes to half a lookahead.
    fixed_target_arc = None
    if cfg.fixed_target:
        fixed_target_arc = min(s + cfg.lookahead, route.length)

    current_plan = None
    plan_seq = -1
    failures = 0
    emergency = False
    events_all: list = []
    termination = Termination.TIMEOUT

    for _ in range(max_ticks):
        if world.tick % cfg.planner_cadence == 0:
            if fixed_target_arc is not None:
                while (fixed_target_arc < route.length
                       and fixed_target_arc - tracker.s < cfg.lookahead / 2.0):
                    fixed_target_arc = min(fixed_target_arc + route.target_spacing,
                                           route.length)
                target = TargetWaypoint(*to_ego_frame(
                    world.ego.pose, *point_at_arc(route, fixed_target_arc)))
            else:
                target = TargetWaypoint(*to_ego_frame(
                    world.ego.pose,
                    *point_at_arc(route, min(tracker.s + cfg.lookahead,
                                             route.length))))
            prompt = format_prompt(target, cfg.attention_prefix,
                                   prefix=prefix, body=body)
            scene = {"frames": list(window)}
            request = PlannerRequest(episode_id=episode_id, tick=world.tick,
                                     prompt=prompt, scene=scene,
                                     deadline_ms=cfg.planner_deadline_ms)
            outcome = "ok"
            text = None
            try:
                text = planner.plan(request).text
                current_plan = parse_answer(text)
                plan_seq += 1
                failures = 0
                emergency = False
            except AnswerParseError as exc:
                outcome = f"error:{type(exc).__name__}"
            except PlannerTimeout:
                outcome = "timeout"
            except PlannerDisconnected:
                outcome = "disconnected"
            if outcome != "ok":
                failures += 1
                if current_plan is None or failures > cfg.reuse_last_plan_max:
                    emergency = True
            trace.queries.append({"tick": world.tick, "prompt": prompt,
                                  "scene": scene, "response": text,
                                  "outcome": outcome})

        if emergency or current_plan is None:
            cmd = BRAKE_COMMAND
            fallback = "brake"
        else:
            cmd, heading_state, speed_state = waypoints_to_control(
                current_plan, world.ego.speed, cfg.controller,
                heading_state, speed_state, cfg.dt)
            fallback = "reuse" if failures > 0 else "none"

        world = step_world(world, cmd, cfg.vehicle)
        window.append(scene_frame(world))
        s, offset = tracker.project(world.ego.pose.x, world.ego.pose.y)
        tick_events = monitor.update(world, offset)
        events_all.extend(tick_events)

        trace.ticks.append({
            "tick": world.tick, "hash": world_hash(world),
            "steer": cmd.steer, "throttle": cmd.throttle, "brake": cmd.brake,
            "x": world.ego.pose.x, "y": world.ego.pose.y,
            "yaw": world.ego.pose.yaw, "speed": world.ego.speed,
            "s": s, "offset": offset,
            "plan_seq": plan_seq, "fallback": fallback,
            "events": [{"kind": e.kind.value, "detail": e.detail}
                       for e in tick_events],
        })

        if s >= route.length - cfg.completion_margin:
            termination = Termination.COMPLETED
            break
        if any(e.kind is InfractionKind.AGENT_BLOCKED for e in tick_events):
            termination = Termination.BLOCKED
            break
        if any(e.kind is InfractionKind.ROUTE_DEVIATION for e in tick_events):
            termination = Termination.DEVIATED
            break

    # Reaching the destination counts as the full route, same as stopping a
    # hair short of the final vertex would not; partial runs use the arc ratio.
    rc = 100.0 if termination is Termination.COMPLETED \
        else route_completion(route, s)
    score = infraction_score(events_all, cfg.penalties)
    result = EpisodeResult.build(route_id=route.id, rc=rc, infraction=score,
                                 events=events_all, ticks=world.tick,
                                 termination=termination)
    trace.result = {
        "route_id": result.route_id, "rc": result.rc, "is": result.infraction,
        "ds": result.ds, "ticks": result.ticks,
        "termination": result.termination.value,
        "events": [{"kind": e.kind.value, "tick": e.tick, "detail": e.detail}
                   for e in result.events],
    }
    return result, trace


class InProcessProvider:
    """Runs a planner factory inside the harness process."""

    def __init__(self, factory: PlannerFactory, name: str):
        self._factory = factory
        self.name = name

    def begin_episode(self, episode_id: str, scenario: Scenario,
                      cfg: HarnessConfig) -> Planner:
        return self._factory(scenario.route, scenario.lights)

    def end_episode(self, episode_id: str) -> None:
        pass

    def close(self) -> None:
        pass


class WireProvider:
    """Runs episodes against one external planner client over the wire."""

    name = "external"

    def __init__(self, server: WirePlannerServer):
        self.server = server

    def begin_episode(self, episode_id: str, scenario: Scenario,
                      cfg: HarnessConfig) -> Planner:
        try:
            return self.server.start_episode(
                episode_id, build_handshake_config(scenario, cfg))
        except HandshakeVersionMismatch:
            raise
        except (PlannerDisconnected, PlannerTimeout) as exc:
            raise PlannerUnavailable(str(exc)) from exc

    def end_episode(self, episode_id: str) -> None:
        try:
            self.server.end_episode(episode_id)
        except PlannerDisconnected:
            pass

    def close(self) -> None:
        self.server.close()


@dataclass
class BenchmarkRun:
    report: object                       # BenchmarkReport, or None if nothing ran
    traces: list[EpisodeTrace]
    errors: list[tuple[str, str]]        # (episode_id, message)


def run_benchmark(scenarios, provider, cfg: HarnessConfig) -> BenchmarkRun:
    """Run every scenario through the provider, ordered by route id.

    Per-episode planner availability errors are recorded and skip the episode;
    a handshake version mismatch aborts before any episode runs.
    """
    ordered = sorted(scenarios, key=lambda sc: sc.route.id)
    results = []
    traces: list[EpisodeTrace] = []
    errors: list[tuple[str, str]] = []
    for scenario in ordered:
        episode_id = scenario.id
        try:
            planner = provider.begin_episode(episode_id, scenario, cfg)
        except PlannerUnavailable as exc:
            errors.append((episode_id, str(exc)))
            continue
        try:
            result, trace = run_episode(scenario, planner, cfg,
                                        episode_id=episode_id)
        except TranscriptExhausted as exc:
            errors.append((episode_id, str(exc)))
            continue
        finally:
            provider.end_episode(episode_id)
        results.append(result)
        traces.append(trace)
    report = aggregate(results, normalize_per=cfg.report_normalize_per) \
        if results else None
    return BenchmarkRun(report=report, traces=traces, errors=errors)


def replay(trace_dict: dict) -> EpisodeResult:
    """Re-run an episode from its trace using the recorded planner responses.

    Raises FingerprintMismatch when the trace schema or config fingerprint does
    not match, and ReplayDivergence when any re-simulated tick hash differs
    from the recorded one (e.g. a tampered response record).
    """
    if trace_dict.get("schema_version") != TRACE_SCHEMA_VERSION:
        raise FingerprintMismatch(
            f"trace schema_version {trace_dict.get('schema_version')!r} is not "
            f"{TRACE_SCHEMA_VERSION}")
    cfg = config_from_dict(trace_dict["config"])
    if config_fingerprint(cfg) != trace_dict["fingerprint"]:
        raise FingerprintMismatch("config fingerprint does not match the trace")
    scenario = scenario_from_dict(trace_dict["scenario"])
    entries = [(q["outcome"], q["response"]) for q in trace_dict["queries"]]
    planner = TranscriptPlanner(entries)
    result, new_trace = run_episode(scenario, planner, cfg,
                                    episode_id=trace_dict["episode_id"])
    old_ticks = trace_dict["ticks"]
    if len(old_ticks) != len(new_trace.ticks):
        raise ReplayDivergence(
            f"replay ran {len(new_trace.ticks)} ticks, trace has {len(old_ticks)}")
    for old, new in zip(old_ticks, new_trace.ticks):
        if old["hash"] != new["hash"]:
            raise ReplayDivergence(f"world hash diverged at tick {new['tick']}")
    return result
