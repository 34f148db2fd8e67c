"""Deterministic 2D kinematic world: ego bicycle model, scripted agents, lights."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .geometry import Obb, Pose2D, clamp, normalize_angle, obb_overlap


class NpcKind(str, Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"
    STATIC = "static"


class LightPhase(str, Enum):
    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"


@dataclass(frozen=True)
class VehicleParams:
    """Ego dynamics and footprint. All values are configuration, not physics dogma."""

    wheelbase: float = 2.9          # m
    a_max: float = 3.0              # full-throttle acceleration, m/s^2
    b_max: float = 8.0              # full-brake deceleration, m/s^2
    delta_max: float = 0.6          # max front wheel angle, rad
    c_drag: float = 0.1             # linear drag coefficient, 1/s
    half_length: float = 2.4        # m
    half_width: float = 1.0         # m


@dataclass(frozen=True)
class EgoState:
    pose: Pose2D
    speed: float = 0.0
    wheelbase: float = 2.9

    def __post_init__(self) -> None:
        if self.speed < 0.0:
            raise ValueError(f"ego speed must be >= 0, got {self.speed}")
        if self.wheelbase <= 0.0:
            raise ValueError(f"wheelbase must be > 0, got {self.wheelbase}")


@dataclass(frozen=True)
class NpcAgent:
    """Scripted agent. The script holds one pose per tick; ticks past either end
    of the script clamp to the nearest defined pose."""

    id: str
    kind: NpcKind
    pose: Pose2D
    half_length: float
    half_width: float
    script: tuple[Pose2D, ...] = ()

    def __post_init__(self) -> None:
        if self.half_length <= 0.0 or self.half_width <= 0.0:
            raise ValueError(f"npc {self.id}: extents must be > 0")

    def pose_at(self, tick: int) -> Pose2D:
        if not self.script:
            return self.pose
        if tick <= 0:
            return self.script[0]
        if tick >= len(self.script):
            return self.script[-1]
        return self.script[tick]


@dataclass(frozen=True)
class TrafficLight:
    id: str
    stop_line: tuple[tuple[float, float], tuple[float, float]]
    schedule: tuple[tuple[LightPhase, float], ...]

    def __post_init__(self) -> None:
        if not self.schedule:
            raise ValueError(f"light {self.id}: schedule must not be empty")
        for phase, duration in self.schedule:
            if duration <= 0.0:
                raise ValueError(f"light {self.id}: phase durations must be > 0")

    @property
    def cycle_length(self) -> float:
        return sum(d for _, d in self.schedule)


@dataclass(frozen=True)
class ControlCommand:
    """Actuation triple. Fields are clamped to their ranges on construction and
    throttle/brake are mutually exclusive (brake wins if both were set)."""

    steer: float = 0.0
    throttle: float = 0.0
    brake: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "steer", clamp(self.steer, -1.0, 1.0))
        object.__setattr__(self, "throttle", clamp(self.throttle, 0.0, 1.0))
        object.__setattr__(self, "brake", clamp(self.brake, 0.0, 1.0))
        if self.throttle > 0.0 and self.brake > 0.0:
            object.__setattr__(self, "throttle", 0.0)


BRAKE_COMMAND = ControlCommand(steer=0.0, throttle=0.0, brake=1.0)


@dataclass(frozen=True)
class WorldState:
    tick: int
    dt: float
    ego: EgoState
    npcs: tuple[NpcAgent, ...] = ()
    lights: tuple[TrafficLight, ...] = ()
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.tick < 0:
            raise ValueError(f"tick must be >= 0, got {self.tick}")


def step_world(world: WorldState, cmd: ControlCommand,
               params: VehicleParams = VehicleParams()) -> WorldState:
    """Advance the world by one tick under the kinematic bicycle model.

    Acceleration is a_max*throttle - b_max*brake - c_drag*speed, speed never
    goes negative, and the front wheel angle is delta_max*steer with steer
    positive to the right (positive steer decreases yaw in this CCW frame).
    Purely functional and bit-deterministic for identical inputs.
    """
    ego = world.ego
    dt = world.dt
    accel = (params.a_max * cmd.throttle
             - params.b_max * cmd.brake
             - params.c_drag * ego.speed)
    speed = max(0.0, ego.speed + accel * dt)
    delta = params.delta_max * cmd.steer
    yaw = normalize_angle(ego.pose.yaw - (speed / ego.wheelbase) * math.tan(delta) * dt)
    x = ego.pose.x + speed * math.cos(yaw) * dt
    y = ego.pose.y + speed * math.sin(yaw) * dt
    tick = world.tick + 1
    npcs = tuple(replace(npc, pose=npc.pose_at(tick)) for npc in world.npcs)
    return replace(world, tick=tick,
                   ego=EgoState(pose=Pose2D(x, y, yaw), speed=speed,
                                wheelbase=ego.wheelbase),
                   npcs=npcs)


def light_phase(light: TrafficLight, tick: int, dt: float) -> LightPhase:
    """Phase at simulated time tick*dt under the cyclic schedule."""
    if tick < 0:
        raise ValueError(f"tick must be >= 0, got {tick}")
    t = math.fmod(tick * dt, light.cycle_length)
    acc = 0.0
    for phase, duration in light.schedule:
        acc += duration
        if t < acc:
            return phase
    return light.schedule[-1][0]


def ego_obb(ego: EgoState, params: VehicleParams) -> Obb:
    return Obb(ego.pose.x, ego.pose.y, ego.pose.yaw,
               params.half_length, params.half_width)


def npc_obb(npc: NpcAgent) -> Obb:
    return Obb(npc.pose.x, npc.pose.y, npc.pose.yaw,
               npc.half_length, npc.half_width)


def check_collisions(world: WorldState,
                     params: VehicleParams = VehicleParams(),
                     ) -> list[tuple[str, NpcKind]]:
    """Every NPC whose oriented box intersects the ego box at the current tick.

    Output order follows the NPC order in the world state.
    """
    ego = ego_obb(world.ego, params)
    hits = []
    for npc in world.npcs:
        if obb_overlap(ego, npc_obb(npc)):
            hits.append((npc.id, npc.kind))
    return hits
