"""Built-in scenario suites: the clean smoke benchmark and the fault-matrix
companions. All geometry is synthetic and small enough to run at desk scale."""

from __future__ import annotations

import math
import os

from .geometry import Pose2D
from .route import RouteSpec
from .scenario import NpcSpec, Scenario, save_scenario
from .world import LightPhase, NpcKind, TrafficLight


def _straight(route_id: str, length: float, speed_limit: float) -> RouteSpec:
    return RouteSpec(id=route_id, vertices=((0.0, 0.0), (length, 0.0)),
                     speed_limit=speed_limit)


def _arc_route(route_id: str, radius: float, angle: float, speed_limit: float,
               lead_in: float = 30.0, points: int = 120) -> RouteSpec:
    """Straight lead-in along +x, then a left arc of the given angle."""
    verts = [(0.0, 0.0), (lead_in, 0.0)]
    cx, cy = lead_in, radius
    for i in range(1, points + 1):
        a = angle * i / points
        verts.append((cx + radius * math.sin(a), cy - radius * math.cos(a)))
    return RouteSpec(id=route_id, vertices=tuple(verts), speed_limit=speed_limit)


def _s_curve(route_id: str, speed_limit: float) -> RouteSpec:
    verts = [(0.0, 0.0), (30.0, 0.0)]
    r = 40.0
    # left arc then right arc, 45 degrees each
    cx, cy = 30.0, r
    for i in range(1, 61):
        a = (math.pi / 4) * i / 60
        verts.append((cx + r * math.sin(a), cy - r * math.cos(a)))
    jx, jy = verts[-1]
    heading = math.pi / 4
    cx2 = jx + r * math.sin(heading)
    cy2 = jy - r * math.cos(heading)
    for i in range(1, 61):
        a = heading - (math.pi / 4) * i / 60
        verts.append((cx2 - r * math.sin(a), cy2 + r * math.cos(a)))
    jx, jy = verts[-1]
    verts.append((jx + 40.0, jy))
    return RouteSpec(id=route_id, vertices=tuple(verts), speed_limit=speed_limit)


def _plain(scenario_id: str, route: RouteSpec) -> Scenario:
    return Scenario(id=scenario_id, route=route,
                    ego_spawn=Pose2D(*route.vertices[0], yaw=_initial_yaw(route)))


def _initial_yaw(route: RouteSpec) -> float:
    (ax, ay), (bx, by) = route.vertices[0], route.vertices[1]
    return math.atan2(by - ay, bx - ax)


def _light_scenario(scenario_id: str, length: float, line_x: float,
                    red_s: float, speed_limit: float) -> Scenario:
    route = _straight(scenario_id, length, speed_limit)
    light = TrafficLight(
        id="L1", stop_line=((line_x, -6.0), (line_x, 6.0)),
        schedule=((LightPhase.RED, red_s), (LightPhase.GREEN, 300.0),
                  (LightPhase.YELLOW, 3.0)),
    )
    return Scenario(id=scenario_id, route=route, ego_spawn=Pose2D(0.0, 0.0, 0.0),
                    lights=(light,))


def _crossing_scenario(scenario_id: str, kind: NpcKind, length: float,
                       cross_x: float, npc_speed: float, start_s: float,
                       start_y: float, speed_limit: float) -> Scenario:
    route = _straight(scenario_id, length, speed_limit)
    half_length = 0.4 if kind is NpcKind.PEDESTRIAN else 2.2
    half_width = 0.4 if kind is NpcKind.PEDESTRIAN else 1.0
    npc = NpcSpec(
        id="crosser", kind=kind, pose=Pose2D(cross_x, start_y, math.pi / 2),
        half_length=half_length, half_width=half_width,
        motion={"kind": "path", "points": [[cross_x, start_y], [cross_x, 30.0]],
                "speed": npc_speed, "start_s": start_s},
    )
    return Scenario(id=scenario_id, route=route, ego_spawn=Pose2D(0.0, 0.0, 0.0),
                    npcs=(npc,))


def smoke_suite() -> list[Scenario]:
    """Ten clean scenarios a law-abiding planner completes without infractions."""
    scenarios = [
        _plain("smoke-01-straight", _straight("smoke-01-straight", 100.0, 5.0)),
        _plain("smoke-02-straight", _straight("smoke-02-straight", 150.0, 6.0)),
        _plain("smoke-03-straight", _straight("smoke-03-straight", 200.0, 6.0)),
        _plain("smoke-04-curve",
               _arc_route("smoke-04-curve", 30.0, math.pi / 2, 4.0)),
        _plain("smoke-05-curve",
               _arc_route("smoke-05-curve", 40.0, math.pi / 3, 5.0)),
        _plain("smoke-06-scurve", _s_curve("smoke-06-scurve", 5.0)),
        _light_scenario("smoke-07-light", 120.0, 60.0, red_s=20.0,
                        speed_limit=5.0),
        _light_scenario("smoke-08-light", 150.0, 80.0, red_s=12.0,
                        speed_limit=6.0),
        _crossing_scenario("smoke-09-crossing", NpcKind.PEDESTRIAN, 120.0,
                           cross_x=60.0, npc_speed=0.8, start_s=4.5,
                           start_y=-6.0, speed_limit=5.0),
        _crossing_scenario("smoke-10-crossing", NpcKind.VEHICLE, 150.0,
                           cross_x=80.0, npc_speed=4.0, start_s=8.0,
                           start_y=-12.0, speed_limit=5.0),
    ]
    return scenarios


def fault_companions() -> dict[str, Scenario]:
    """One purpose-built scenario per scripted fault planner.

    Each pairs with exactly one infraction kind: the red-light companion has a
    long red and no agents, the collision companion a parked vehicle on the
    route and no lights, and the blocked companion an empty route long enough
    that the stationary timeout fires before the episode timeout.
    """
    red = _light_scenario("fault-red-light", 120.0, 60.0, red_s=600.0,
                          speed_limit=5.0)
    collider_route = _straight("fault-collision-route", 150.0, 5.0)
    parked = NpcSpec(id="parked", kind=NpcKind.VEHICLE,
                     pose=Pose2D(80.0, 0.0, 0.0), half_length=2.2,
                     half_width=1.0, motion={"kind": "static"})
    collision = Scenario(id="fault-collision", route=collider_route,
                         ego_spawn=Pose2D(0.0, 0.0, 0.0), npcs=(parked,))
    blocked = _plain("fault-blocked", _straight("fault-blocked-route", 150.0, 5.0))
    return {
        "red-light-runner": red,
        "collider": collision,
        "stopper": blocked,
        "mute": blocked,
    }


BUILTIN_SUITES = {
    "smoke": smoke_suite,
}


def write_suite(scenarios, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for scenario in scenarios:
        path = os.path.join(out_dir, f"{scenario.id}.json")
        save_scenario(scenario, path)
        paths.append(path)
    return paths


def resolve_scenarios(spec: str) -> list[Scenario]:
    """Resolve a --routes argument: either 'builtin:<name>' or a directory."""
    from .scenario import load_scenario_dir

    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        try:
            return BUILTIN_SUITES[name]()
        except KeyError:
            raise ValueError(f"unknown builtin suite {name!r}; "
                             f"known: {sorted(BUILTIN_SUITES)}") from None
    return load_scenario_dir(spec)
