import pytest

from driveloop.config import HarnessConfig
from driveloop.harness import InProcessProvider, run_benchmark, run_episode
from driveloop.infractions import InfractionKind
from driveloop.planners import (MutePlanner, PlannerRequest, StopPlanner,
                                TranscriptExhausted, TranscriptPlanner,
                                fault_factory, oracle_factory)
from driveloop.protocol import parse_answer
from driveloop.scoring import Termination
from driveloop.suites import fault_companions, smoke_suite


def scenario_by_id(sid):
    return next(s for s in smoke_suite() if s.id == sid)


class TestOraclePlanner:
    def test_straight_route_answer_parses_and_points_ahead(self):
        sc = scenario_by_id("smoke-01-straight")
        planner = oracle_factory()(sc.route, sc.lights)
        from driveloop.harness import scene_frame
        from driveloop.world import EgoState, WorldState
        from driveloop.geometry import Pose2D
        world = WorldState(tick=0, dt=0.1,
                           ego=EgoState(pose=Pose2D(0.0, 0.0, 0.0), speed=3.0))
        frame = scene_frame(world)
        request = PlannerRequest(episode_id="e", tick=0, prompt="",
                                 scene={"frames": [frame] * 5})
        response = planner.plan(request)
        traj = parse_answer(response.text)
        ys = [w.y for w in traj.waypoints]
        assert all(b >= a for a, b in zip(ys, ys[1:]))
        assert ys[0] > 0.0
        assert all(abs(w.x) < 1e-9 for w in traj.waypoints)

    def test_identical_episode_yields_identical_answer_sequence(self):
        sc = scenario_by_id("smoke-04-curve")
        cfg = HarnessConfig()
        texts = []
        for _ in range(2):
            planner = oracle_factory(cfg.oracle)(sc.route, sc.lights)
            _, trace = run_episode(sc, planner, cfg)
            texts.append([q["response"] for q in trace.queries])
        assert texts[0] == texts[1]


class TestScriptedPlanners:
    def test_stop_planner_emits_five_zero_pairs(self):
        response = StopPlanner().plan(PlannerRequest("e", 0, "", {"frames": []}))
        traj = parse_answer(response.text)
        assert traj.pairs() == ((0.0, 0.0),) * 5

    def test_mute_planner_returns_empty_text(self):
        response = MutePlanner().plan(PlannerRequest("e", 0, "", {"frames": []}))
        assert response.text == ""

    def test_unknown_fault_name_raises(self):
        with pytest.raises(KeyError):
            fault_factory("wall-hugger")


class TestFaultMatrix:
    """Each scripted fault planner triggers exactly its designated infraction
    on its companion scenario and nothing else."""

    @pytest.mark.parametrize("name,expected_kind,expected_term", [
        ("red-light-runner", InfractionKind.RED_LIGHT, Termination.COMPLETED),
        ("collider", InfractionKind.COLLISION_VEHICLE, Termination.COMPLETED),
        ("stopper", InfractionKind.AGENT_BLOCKED, Termination.BLOCKED),
        ("mute", InfractionKind.AGENT_BLOCKED, Termination.BLOCKED),
    ])
    def test_fault_planner_triggers_only_its_kind(self, name, expected_kind,
                                                  expected_term):
        sc = fault_companions()[name]
        cfg = HarnessConfig()
        provider = InProcessProvider(fault_factory(name, cfg.oracle), name)
        run = run_benchmark([sc], provider, cfg)
        row = run.report.rows[0]
        kinds = [e.kind for e in row.events]
        assert kinds == [expected_kind]
        assert row.termination is expected_term

    def test_compliant_planner_never_collides_on_collider_companion(self):
        # the parked vehicle blocks the route, so a law-abiding agent waits
        # behind it and ends blocked, with no collision
        cfg = HarnessConfig()
        sc = fault_companions()["collider"]
        planner = oracle_factory(cfg.oracle)(sc.route, sc.lights)
        result, _ = run_episode(sc, planner, cfg)
        kinds = {e.kind for e in result.events}
        assert InfractionKind.COLLISION_VEHICLE not in kinds
        assert result.termination is Termination.BLOCKED

    def test_compliant_planner_is_clean_on_blocked_companion(self):
        cfg = HarnessConfig()
        sc = fault_companions()["stopper"]
        planner = oracle_factory(cfg.oracle)(sc.route, sc.lights)
        result, _ = run_episode(sc, planner, cfg)
        assert result.events == ()
        assert result.termination is Termination.COMPLETED


class TestTranscriptPlanner:
    def test_replays_in_order_and_then_exhausts(self):
        planner = TranscriptPlanner([("ok", "first"), ("ok", "second")])
        req = PlannerRequest("e", 0, "", {"frames": []})
        assert planner.plan(req).text == "first"
        assert planner.plan(req).text == "second"
        with pytest.raises(TranscriptExhausted):
            planner.plan(req)

    def test_replays_recorded_transport_errors(self):
        from driveloop.wire import PlannerTimeout
        planner = TranscriptPlanner([("timeout", None)])
        with pytest.raises(PlannerTimeout):
            planner.plan(PlannerRequest("e", 0, "", {"frames": []}))
