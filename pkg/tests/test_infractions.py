import pytest

from driveloop.geometry import Pose2D
from driveloop.infractions import (DEFAULT_PENALTIES, DetectorConfig,
                                   InfractionEvent, InfractionKind,
                                   InfractionMonitor, MissingPenalty,
                                   PenaltyTable, infraction_score)
from driveloop.world import (EgoState, LightPhase, NpcAgent, NpcKind,
                             TrafficLight, WorldState)


def world_at(tick, x, y=0.0, speed=5.0, npcs=(), lights=(), dt=0.1):
    return WorldState(tick=tick, dt=dt,
                      ego=EgoState(pose=Pose2D(x, y, 0.0), speed=speed),
                      npcs=tuple(npcs), lights=tuple(lights))


def red_light_at(x, red_s=100.0, green_first=False):
    schedule = ((LightPhase.GREEN, red_s), (LightPhase.RED, red_s)) \
        if green_first else ((LightPhase.RED, red_s), (LightPhase.GREEN, red_s))
    return TrafficLight(id="L1", stop_line=((x, -4.0), (x, 4.0)),
                        schedule=schedule)


def feed(monitor, worlds, offsets=None):
    events = []
    for i, world in enumerate(worlds):
        off = 0.0 if offsets is None else offsets[i]
        events.extend(monitor.update(world, off))
    return events


class TestRedLight:
    def test_crossing_during_red_fires_once(self):
        light = red_light_at(5.0)
        monitor = InfractionMonitor()
        worlds = [world_at(t, x, lights=[light])
                  for t, x in enumerate([4.0, 4.6, 5.2, 5.8])]
        events = feed(monitor, worlds)
        assert [e.kind for e in events] == [InfractionKind.RED_LIGHT]

    def test_crossing_during_green_is_clean(self):
        light = red_light_at(5.0, green_first=True)
        monitor = InfractionMonitor()
        worlds = [world_at(t, x, lights=[light])
                  for t, x in enumerate([4.0, 4.6, 5.2, 5.8])]
        assert feed(monitor, worlds) == []

    def test_stopping_before_the_line_is_clean(self):
        light = red_light_at(5.0)
        monitor = InfractionMonitor()
        worlds = [world_at(t, x, speed=0.5, lights=[light])
                  for t, x in enumerate([4.0, 4.2, 4.4, 4.5, 4.5])]
        assert feed(monitor, worlds) == []


class TestCollisions:
    def test_grazing_contact_fires_exactly_once(self):
        npc = NpcAgent(id="n1", kind=NpcKind.VEHICLE, pose=Pose2D(10.0, 0.0, 0.0),
                       half_length=2.2, half_width=1.0)
        monitor = InfractionMonitor()
        xs = [5.0, 7.0, 9.0, 10.0, 11.0, 13.0]
        worlds = [world_at(t, x, npcs=[npc]) for t, x in enumerate(xs)]
        events = feed(monitor, worlds)
        assert [e.kind for e in events] == [InfractionKind.COLLISION_VEHICLE]

    def test_refires_after_a_contact_free_second(self):
        npc = NpcAgent(id="n1", kind=NpcKind.STATIC, pose=Pose2D(10.0, 0.0, 0.0),
                       half_length=1.0, half_width=1.0)
        monitor = InfractionMonitor(DetectorConfig(collision_debounce_s=1.0))
        worlds = []
        tick = 0
        for x in (10.0, 10.0):          # contact
            worlds.append(world_at(tick, x, npcs=[npc])); tick += 1
        for _ in range(12):             # > 1 s apart
            worlds.append(world_at(tick, 50.0, npcs=[npc])); tick += 1
        worlds.append(world_at(tick, 10.0, npcs=[npc]))
        events = feed(monitor, worlds)
        assert [e.kind for e in events] == [InfractionKind.COLLISION_STATIC] * 2

    def test_pedestrian_contact_maps_to_pedestrian_kind(self):
        npc = NpcAgent(id="p", kind=NpcKind.PEDESTRIAN, pose=Pose2D(0.0, 0.0, 0.0),
                       half_length=0.4, half_width=0.4)
        monitor = InfractionMonitor()
        events = feed(monitor, [world_at(0, 0.0, npcs=[npc])])
        assert events[0].kind is InfractionKind.COLLISION_PEDESTRIAN


class TestBlockedAndDeviation:
    def test_blocked_fires_once_after_threshold(self):
        cfg = DetectorConfig(t_block_s=9.0)
        monitor = InfractionMonitor(cfg)
        worlds = [world_at(t, 0.0, speed=0.0) for t in range(120)]
        events = feed(monitor, worlds)
        assert [e.kind for e in events] == [InfractionKind.AGENT_BLOCKED]
        # threshold is 9 s = 90 stationary ticks
        assert events[0].tick == 89

    def test_moving_agent_is_never_blocked(self):
        monitor = InfractionMonitor(DetectorConfig(t_block_s=1.0))
        worlds = [world_at(t, float(t), speed=1.0) for t in range(50)]
        assert feed(monitor, worlds) == []

    def test_deviation_fires_once_per_excursion(self):
        monitor = InfractionMonitor(DetectorConfig(deviation_limit_m=8.0))
        offsets = [0.0, 9.0, 9.5, 3.0, 0.0, -8.5, -9.0]
        worlds = [world_at(t, float(t)) for t in range(len(offsets))]
        events = feed(monitor, worlds, offsets)
        assert [e.kind for e in events] == [InfractionKind.ROUTE_DEVIATION] * 2


def events_of(*kinds):
    return [InfractionEvent(kind, tick=i) for i, kind in enumerate(kinds)]


class TestInfractionScore:
    def test_empty_event_list_scores_one(self):
        assert infraction_score([]) == 1.0

    def test_single_vehicle_collision(self):
        events = events_of(InfractionKind.COLLISION_VEHICLE)
        assert infraction_score(events) == 0.60

    def test_two_red_lights_is_exactly_049(self):
        events = events_of(InfractionKind.RED_LIGHT, InfractionKind.RED_LIGHT)
        assert infraction_score(events) == 0.49

    def test_monotone_non_increasing_as_events_append(self):
        kinds = [InfractionKind.RED_LIGHT, InfractionKind.COLLISION_STATIC,
                 InfractionKind.COLLISION_PEDESTRIAN, InfractionKind.AGENT_BLOCKED]
        prev = 1.0
        events = []
        for kind in kinds:
            events.append(InfractionEvent(kind, tick=0))
            score = infraction_score(events)
            assert score <= prev
            prev = score

    def test_concatenation_multiplies(self):
        a = events_of(InfractionKind.RED_LIGHT, InfractionKind.COLLISION_VEHICLE)
        b = events_of(InfractionKind.COLLISION_PEDESTRIAN)
        combined = infraction_score(a + b)
        assert combined == pytest.approx(infraction_score(a) * infraction_score(b),
                                         abs=1e-15)

    def test_missing_penalty_raises(self):
        table = PenaltyTable({InfractionKind.RED_LIGHT: DEFAULT_PENALTIES[
            InfractionKind.RED_LIGHT]})
        with pytest.raises(MissingPenalty):
            infraction_score(events_of(InfractionKind.COLLISION_VEHICLE), table)

    def test_multipliers_must_be_in_unit_interval(self):
        from decimal import Decimal
        with pytest.raises(ValueError):
            PenaltyTable({InfractionKind.RED_LIGHT: Decimal("1.5")})
        with pytest.raises(ValueError):
            PenaltyTable({InfractionKind.RED_LIGHT: Decimal("0")})
