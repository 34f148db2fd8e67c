"""Scenario and route files: versioned JSON schemas plus NPC script expansion.

A scenario file bundles the route it is driven on, the ego spawn pose, the NPC
motion specs and the traffic lights. NPC motion is described compactly
("static" or "path") and expanded to one pose per tick when an episode starts,
so the simulator only ever sees fully scripted agents.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .geometry import Pose2D
from .route import RouteSpec
from .world import LightPhase, NpcAgent, NpcKind, TrafficLight

SCENARIO_SCHEMA_VERSION = 1


class ScenarioInvalid(ValueError):
    pass


@dataclass(frozen=True)
class NpcSpec:
    id: str
    kind: NpcKind
    pose: Pose2D
    half_length: float
    half_width: float
    motion: dict = field(default_factory=lambda: {"kind": "static"})


@dataclass(frozen=True)
class Scenario:
    id: str
    route: RouteSpec
    ego_spawn: Pose2D
    npcs: tuple[NpcSpec, ...] = ()
    lights: tuple[TrafficLight, ...] = ()
    # optional world bounds (xmin, ymin, xmax, ymax); informational
    map_extents: tuple[float, float, float, float] | None = None


def _path_script(spec: NpcSpec, n_ticks: int, dt: float) -> tuple[Pose2D, ...]:
    motion = spec.motion
    points = [(float(x), float(y)) for x, y in motion["points"]]
    if len(points) < 2:
        raise ScenarioInvalid(f"npc {spec.id}: path motion needs >= 2 points")
    speed = float(motion["speed"])
    if speed <= 0.0:
        raise ScenarioInvalid(f"npc {spec.id}: path speed must be > 0")
    start_s = float(motion.get("start_s", 0.0))

    seg_lens = []
    for (ax, ay), (bx, by) in zip(points, points[1:]):
        seg_lens.append(math.hypot(bx - ax, by - ay))
    total = sum(seg_lens)

    def pose_at_dist(d: float) -> Pose2D:
        if d <= 0.0:
            ax, ay = points[0]
            bx, by = points[1]
            return Pose2D(ax, ay, math.atan2(by - ay, bx - ax))
        if d >= total:
            ax, ay = points[-2]
            bx, by = points[-1]
            return Pose2D(bx, by, math.atan2(by - ay, bx - ax))
        acc = 0.0
        for (ax, ay), (bx, by), seg in zip(points, points[1:], seg_lens):
            if d <= acc + seg:
                t = (d - acc) / seg
                return Pose2D(ax + t * (bx - ax), ay + t * (by - ay),
                              math.atan2(by - ay, bx - ax))
            acc += seg
        bx, by = points[-1]
        ax, ay = points[-2]
        return Pose2D(bx, by, math.atan2(by - ay, bx - ax))

    script = []
    for tick in range(n_ticks + 1):
        t = tick * dt
        script.append(pose_at_dist((t - start_s) * speed if t >= start_s else 0.0))
    return tuple(script)


def materialize_npcs(scenario: Scenario, n_ticks: int, dt: float,
                     ) -> tuple[NpcAgent, ...]:
    """Expand every NPC motion spec into a per-tick pose schedule."""
    agents = []
    for spec in scenario.npcs:
        kind = spec.motion.get("kind", "static")
        if kind == "static":
            script: tuple[Pose2D, ...] = (spec.pose,)
        elif kind == "path":
            script = _path_script(spec, n_ticks, dt)
        else:
            raise ScenarioInvalid(f"npc {spec.id}: unknown motion kind {kind!r}")
        agents.append(NpcAgent(id=spec.id, kind=spec.kind, pose=script[0],
                               half_length=spec.half_length,
                               half_width=spec.half_width, script=script))
    return tuple(agents)


def route_to_dict(route: RouteSpec) -> dict:
    return {
        "id": route.id,
        "vertices": [[x, y] for x, y in route.vertices],
        "speed_limit": route.speed_limit,
        "target_spacing": route.target_spacing,
    }


def route_from_dict(raw: dict) -> RouteSpec:
    try:
        return RouteSpec(
            id=str(raw["id"]),
            vertices=tuple((float(x), float(y)) for x, y in raw["vertices"]),
            speed_limit=float(raw.get("speed_limit", 6.0)),
            target_spacing=float(raw.get("target_spacing", 20.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioInvalid(f"bad route record: {exc}") from exc


def scenario_to_dict(scenario: Scenario) -> dict:
    out = {
        "schema_version": SCENARIO_SCHEMA_VERSION,
        "id": scenario.id,
        "route": route_to_dict(scenario.route),
        "ego_spawn": {"x": scenario.ego_spawn.x, "y": scenario.ego_spawn.y,
                      "yaw": scenario.ego_spawn.yaw},
        "npcs": [
            {
                "id": n.id, "kind": n.kind.value,
                "pose": {"x": n.pose.x, "y": n.pose.y, "yaw": n.pose.yaw},
                "half_length": n.half_length, "half_width": n.half_width,
                "motion": n.motion,
            }
            for n in scenario.npcs
        ],
        "lights": [
            {
                "id": l.id,
                "stop_line": [[l.stop_line[0][0], l.stop_line[0][1]],
                              [l.stop_line[1][0], l.stop_line[1][1]]],
                "schedule": [[phase.value, duration] for phase, duration in l.schedule],
            }
            for l in scenario.lights
        ],
    }
    if scenario.map_extents is not None:
        out["map_extents"] = list(scenario.map_extents)
    return out


def scenario_from_dict(raw: dict, source: str = "<dict>") -> Scenario:
    version = raw.get("schema_version")
    if version != SCENARIO_SCHEMA_VERSION:
        raise ScenarioInvalid(
            f"{source}: schema_version {version!r} is not {SCENARIO_SCHEMA_VERSION}")
    try:
        spawn = raw["ego_spawn"]
        npcs = tuple(
            NpcSpec(
                id=str(n["id"]), kind=NpcKind(n["kind"]),
                pose=Pose2D(float(n["pose"]["x"]), float(n["pose"]["y"]),
                            float(n["pose"].get("yaw", 0.0))),
                half_length=float(n["half_length"]),
                half_width=float(n["half_width"]),
                motion=dict(n.get("motion", {"kind": "static"})),
            )
            for n in raw.get("npcs", [])
        )
        lights = tuple(
            TrafficLight(
                id=str(l["id"]),
                stop_line=((float(l["stop_line"][0][0]), float(l["stop_line"][0][1])),
                           (float(l["stop_line"][1][0]), float(l["stop_line"][1][1]))),
                schedule=tuple((LightPhase(p), float(d)) for p, d in l["schedule"]),
            )
            for l in raw.get("lights", [])
        )
        extents = raw.get("map_extents")
        return Scenario(
            id=str(raw["id"]),
            route=route_from_dict(raw["route"]),
            ego_spawn=Pose2D(float(spawn["x"]), float(spawn["y"]),
                             float(spawn.get("yaw", 0.0))),
            npcs=npcs,
            lights=lights,
            map_extents=tuple(float(v) for v in extents) if extents else None,
        )
    except ScenarioInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioInvalid(f"{source}: {exc}") from exc


def save_route(route: RouteSpec, path: str) -> None:
    """Standalone route file; same schema family as the scenario's route block."""
    raw = route_to_dict(route)
    raw["schema_version"] = SCENARIO_SCHEMA_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(raw, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_route(path: str) -> RouteSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ScenarioInvalid(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioInvalid(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    version = raw.pop("schema_version", None)
    if version != SCENARIO_SCHEMA_VERSION:
        raise ScenarioInvalid(
            f"{path}: schema_version {version!r} is not {SCENARIO_SCHEMA_VERSION}")
    return route_from_dict(raw)


def save_scenario(scenario: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ScenarioInvalid(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioInvalid(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    return scenario_from_dict(raw, source=path)


def load_scenario_dir(path: str) -> list[Scenario]:
    """All *.json scenarios in a directory, sorted by filename."""
    if not os.path.isdir(path):
        raise ScenarioInvalid(f"{path}: not a directory")
    names = sorted(n for n in os.listdir(path) if n.endswith(".json"))
    if not names:
        raise ScenarioInvalid(f"{path}: contains no scenario *.json files")
    return [load_scenario(os.path.join(path, name)) for name in names]
