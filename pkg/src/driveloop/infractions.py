"""Infraction detection and the multiplicative infraction score.

Default penalty multipliers follow the public CARLA leaderboard convention
(pedestrian 0.50, vehicle 0.60, static 0.65, red light 0.70); they are
external-standard values and fully config-overridable. Blocked and deviation
events terminate an episode rather than scale the score, so they default to a
multiplier of 1.0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum

from .geometry import segment_intersection
from .world import (LightPhase, NpcKind, VehicleParams, WorldState,
                    check_collisions, light_phase)


class InfractionKind(str, Enum):
    COLLISION_PEDESTRIAN = "collision_pedestrian"
    COLLISION_VEHICLE = "collision_vehicle"
    COLLISION_STATIC = "collision_static"
    RED_LIGHT = "red_light"
    AGENT_BLOCKED = "agent_blocked"
    ROUTE_DEVIATION = "route_deviation"


_COLLISION_BY_NPC_KIND = {
    NpcKind.PEDESTRIAN: InfractionKind.COLLISION_PEDESTRIAN,
    NpcKind.VEHICLE: InfractionKind.COLLISION_VEHICLE,
    NpcKind.STATIC: InfractionKind.COLLISION_STATIC,
}


@dataclass(frozen=True)
class InfractionEvent:
    kind: InfractionKind
    tick: int
    detail: str = ""


class MissingPenalty(KeyError):
    pass


DEFAULT_PENALTIES: dict[InfractionKind, Decimal] = {
    InfractionKind.COLLISION_PEDESTRIAN: Decimal("0.50"),
    InfractionKind.COLLISION_VEHICLE: Decimal("0.60"),
    InfractionKind.COLLISION_STATIC: Decimal("0.65"),
    InfractionKind.RED_LIGHT: Decimal("0.70"),
    InfractionKind.AGENT_BLOCKED: Decimal("1.0"),
    InfractionKind.ROUTE_DEVIATION: Decimal("1.0"),
}


@dataclass(frozen=True)
class PenaltyTable:
    """Multiplier per infraction kind, each in (0, 1].

    Multipliers are exact decimals so that repeated penalties (0.70 * 0.70)
    produce the exact product 0.49 rather than a float rounding artifact.
    """

    multipliers: dict[InfractionKind, Decimal] = field(
        default_factory=lambda: dict(DEFAULT_PENALTIES))

    def __post_init__(self) -> None:
        for kind, mult in self.multipliers.items():
            if not (Decimal(0) < mult <= Decimal(1)):
                raise ValueError(f"penalty for {kind.value} must be in (0, 1], got {mult}")

    @classmethod
    def from_dict(cls, raw: dict) -> "PenaltyTable":
        mult = dict(DEFAULT_PENALTIES)
        for key, value in raw.items():
            mult[InfractionKind(key)] = Decimal(repr(value)) if isinstance(value, float) \
                else Decimal(str(value))
        return cls(mult)

    def to_dict(self) -> dict[str, float]:
        return {k.value: float(v) for k, v in self.multipliers.items()}


def infraction_score(events, table: PenaltyTable = PenaltyTable()) -> float:
    """Product of the penalty multipliers of all events; empty list scores 1.0."""
    score = Decimal(1)
    for event in events:
        try:
            score *= table.multipliers[event.kind]
        except KeyError:
            raise MissingPenalty(f"no penalty multiplier for {event.kind.value}") from None
    return float(score)


@dataclass(frozen=True)
class DetectorConfig:
    block_speed: float = 0.1            # m/s; below this counts as stationary
    t_block_s: float = 90.0             # continuous stationary time before blocked
    deviation_limit_m: float = 8.0      # |lateral offset| that counts as off-route
    collision_debounce_s: float = 1.0   # contact-free time before a re-fire


class InfractionMonitor:
    """Per-episode detector state. Feed it every stepped world in order.

    Each detector emits one event per contiguous violation episode: collisions
    are debounced per NPC, blocked/deviation fire once until the condition
    clears, and red lights fire on the tick whose motion segment crosses the
    stop line while the light shows red.
    """

    def __init__(self, cfg: DetectorConfig = DetectorConfig(),
                 params: VehicleParams = VehicleParams()):
        self.cfg = cfg
        self.params = params
        self._prev_xy: tuple[float, float] | None = None
        self._last_contact_tick: dict[str, int] = {}
        self._low_speed_ticks = 0
        self._blocked_fired = False
        self._deviation_active = False

    def update(self, world: WorldState, lateral_offset: float,
               ) -> list[InfractionEvent]:
        events: list[InfractionEvent] = []
        tick = world.tick
        dt = world.dt
        ego_xy = (world.ego.pose.x, world.ego.pose.y)

        if self._prev_xy is not None and self._prev_xy != ego_xy:
            for light in world.lights:
                if light_phase(light, tick, dt) is not LightPhase.RED:
                    continue
                hit = segment_intersection(self._prev_xy, ego_xy,
                                           light.stop_line[0], light.stop_line[1])
                # t == 0 means the move started on the line; that crossing was
                # already attributed to the previous tick.
                if hit is not None and hit[0] > 0.0:
                    events.append(InfractionEvent(InfractionKind.RED_LIGHT, tick,
                                                  f"light {light.id}"))
        self._prev_xy = ego_xy

        debounce_ticks = int(round(self.cfg.collision_debounce_s / dt))
        for npc_id, npc_kind in check_collisions(world, self.params):
            last = self._last_contact_tick.get(npc_id)
            if last is None or tick - last > debounce_ticks:
                events.append(InfractionEvent(_COLLISION_BY_NPC_KIND[npc_kind],
                                              tick, f"npc {npc_id}"))
            self._last_contact_tick[npc_id] = tick

        if world.ego.speed < self.cfg.block_speed:
            self._low_speed_ticks += 1
            if (not self._blocked_fired
                    and self._low_speed_ticks * dt >= self.cfg.t_block_s):
                self._blocked_fired = True
                events.append(InfractionEvent(
                    InfractionKind.AGENT_BLOCKED, tick,
                    f"stationary for {self._low_speed_ticks * dt:.1f} s"))
        else:
            self._low_speed_ticks = 0
            self._blocked_fired = False

        if abs(lateral_offset) > self.cfg.deviation_limit_m:
            if not self._deviation_active:
                self._deviation_active = True
                events.append(InfractionEvent(
                    InfractionKind.ROUTE_DEVIATION, tick,
                    f"lateral offset {lateral_offset:.2f} m"))
        else:
            self._deviation_active = False

        return events
