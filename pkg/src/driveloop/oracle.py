"""Rule-based reference planner ("autopilot") over wire-visible observations.

The planner consumes exactly what a wire-attached client sees: the route and
light geometry from the session handshake plus the latest scene frame. Frames
already carry the ego heading as a cosine/sine pair, so the whole computation
uses only +,-,*,/ , sqrt and comparisons. A client that repeats this
arithmetic from the serialized values produces bit-identical plans, which is
what makes wire-attached and in-process runs byte-comparable.

Rule set (all thresholds in OracleConfig):
  * cruise at min(route speed limit, cruise_cap), accelerating at most `accel`
    and braking at most `decel` per planning interval;
  * if a light that is not green has its stop line on the route within
    light_lookahead ahead, plan to stop light_margin before the line;
  * if any agent sits in the forward corridor (|lateral| <= corridor_half_width,
    0 < ahead <= hazard_range), plan to stop hazard_margin before it;
  * planned speeds below stop_floor snap to zero so stops are clean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geometry import to_frame
from .route import RouteSpec, Trajectory, point_at_arc, project_to_route
from .world import LightPhase, TrafficLight


@dataclass(frozen=True)
class OracleConfig:
    wp_dt: float = 0.5
    cruise_cap: float = 8.0        # m/s
    accel: float = 2.0             # m/s^2
    decel: float = 3.0             # m/s^2
    light_lookahead: float = 25.0  # m
    light_margin: float = 4.0      # m short of the stop line
    hazard_range: float = 15.0     # m
    hazard_margin: float = 5.0     # m short of the blocking agent
    corridor_half_width: float = 1.6  # m
    stop_floor: float = 0.1        # m/s
    obey_lights: bool = True
    obey_npcs: bool = True

    def to_dict(self) -> dict:
        return {
            "wp_dt": self.wp_dt, "cruise_cap": self.cruise_cap,
            "accel": self.accel, "decel": self.decel,
            "light_lookahead": self.light_lookahead,
            "light_margin": self.light_margin,
            "hazard_range": self.hazard_range,
            "hazard_margin": self.hazard_margin,
            "corridor_half_width": self.corridor_half_width,
            "stop_floor": self.stop_floor,
            "obey_lights": self.obey_lights, "obey_npcs": self.obey_npcs,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "OracleConfig":
        return replace(cls(), **raw)


def stop_line_arc(route: RouteSpec, light: TrafficLight) -> float | None:
    """Arc length where the stop line crosses the route, or None if it doesn't.

    Scans segments front to back and keeps the first crossing, using the same
    parametric intersection a wire peer would compute from the handshake data.
    """
    (l1x, l1y), (l2x, l2y) = light.stop_line
    sx = l2x - l1x
    sy = l2y - l1y
    for i, seg_len in enumerate(route.seg_lengths):
        ax, ay = route.vertices[i]
        bx, by = route.vertices[i + 1]
        rx = bx - ax
        ry = by - ay
        denom = rx * sy - ry * sx
        if denom == 0.0:
            continue
        wx = l1x - ax
        wy = l1y - ay
        t = (wx * sy - wy * sx) / denom
        u = (wx * ry - wy * rx) / denom
        if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
            return route.cum_lengths[i] + t * seg_len
    return None


def light_arcs(route: RouteSpec, lights) -> dict[str, float]:
    """Stop-line arc per light id, omitting lights that never cross the route."""
    arcs = {}
    for light in lights:
        arc = stop_line_arc(route, light)
        if arc is not None:
            arcs[light.id] = arc
    return arcs


def plan_stop_arc(cfg: OracleConfig, s0: float, frame: dict,
                  arcs: dict[str, float]) -> float:
    """Nearest arc where the plan must come to rest; +inf when unobstructed."""
    stop = math.inf
    if cfg.obey_lights:
        for light in frame["lights"]:
            if light["phase"] == LightPhase.GREEN.value:
                continue
            arc = arcs.get(light["id"])
            if arc is None or arc < s0:
                continue
            if arc - s0 <= cfg.light_lookahead:
                cand = arc - cfg.light_margin
                if cand < stop:
                    stop = cand
    if cfg.obey_npcs:
        for npc in frame["npcs"]:
            x = npc["x"]
            y = npc["y"]
            if 0.0 < y <= cfg.hazard_range and abs(x) <= cfg.corridor_half_width:
                cand = s0 + y - cfg.hazard_margin
                if cand < stop:
                    stop = cand
    return stop


def plan_speeds(cfg: OracleConfig, cruise: float, s0: float, speed: float,
                stop_arc: float) -> list[float]:
    """Five per-interval speeds, acceleration-limited and stop-aware."""
    speeds = []
    s = s0
    v = speed
    for _ in range(5):
        target = cruise
        if stop_arc != math.inf:
            rem = stop_arc - s
            if rem <= 0.0:
                allowed = 0.0
            else:
                allowed = math.sqrt(2.0 * cfg.decel * rem)
            if allowed < target:
                target = allowed
        if v < target:
            v = v + cfg.accel * cfg.wp_dt
            if v > target:
                v = target
        else:
            v = v - cfg.decel * cfg.wp_dt
            if v < target:
                v = target
        if v < cfg.stop_floor:
            v = 0.0
        s = s + v * cfg.wp_dt
        speeds.append(v)
    return speeds


def plan_trajectory(cfg: OracleConfig, route: RouteSpec, frame: dict,
                    arcs: dict[str, float]) -> Trajectory:
    """Plan five ego-frame waypoints from the latest scene frame."""
    ego = frame["ego"]
    s0, _ = project_to_route(route, ego["x"], ego["y"])
    cruise = min(route.speed_limit, cfg.cruise_cap)
    stop = plan_stop_arc(cfg, s0, frame, arcs)
    speeds = plan_speeds(cfg, cruise, s0, ego["speed"], stop)
    pairs = []
    s = s0
    for v in speeds:
        s = s + v * cfg.wp_dt
        px, py = point_at_arc(route, s, extrapolate=True)
        pairs.append(to_frame(ego["x"], ego["y"], ego["cos_yaw"], ego["sin_yaw"],
                              px, py))
    return Trajectory.from_pairs(pairs)
