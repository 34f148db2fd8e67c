import json

import pytest

from driveloop.config import HarnessConfig, apply_overrides
from driveloop.harness import (FingerprintMismatch, InProcessProvider,
                               ReplayDivergence, replay, run_benchmark,
                               run_episode, scene_frame, trace_to_bytes)
from driveloop.planners import fault_factory, oracle_factory
from driveloop.protocol import ATTENTION_PREFIX
from driveloop.scoring import Termination
from driveloop.suites import fault_companions, smoke_suite
from driveloop.world import EgoState, WorldState


def scenario_by_id(sid):
    return next(s for s in smoke_suite() if s.id == sid)


def run_oracle(scenario, cfg=None):
    cfg = cfg or HarnessConfig()
    planner = oracle_factory(cfg.oracle)(scenario.route, scenario.lights)
    return run_episode(scenario, planner, cfg)


class TestEpisodeLoop:
    def test_unobstructed_straight_route_completes_perfectly(self):
        result, _ = run_oracle(scenario_by_id("smoke-01-straight"))
        assert result.termination is Termination.COMPLETED
        assert result.rc == 100.0
        assert result.infraction == 1.0
        assert result.ds == 100.0

    def test_red_light_runner_scores_seventy_percent(self):
        cfg = HarnessConfig()
        sc = fault_companions()["red-light-runner"]
        planner = fault_factory("red-light-runner", cfg.oracle)(sc.route,
                                                                sc.lights)
        result, _ = run_episode(sc, planner, cfg)
        assert [e.kind.value for e in result.events] == ["red_light"]
        assert result.infraction == pytest.approx(0.70, abs=1e-9)
        assert result.ds == pytest.approx(result.rc * 0.70, abs=1e-9)

    def test_mute_planner_brakes_then_terminates_blocked(self):
        cfg = apply_overrides(HarnessConfig(), ["detector.t_block_s=5"])
        sc = fault_companions()["mute"]
        planner = fault_factory("mute", cfg.oracle)(sc.route, sc.lights)
        result, trace = run_episode(sc, planner, cfg)
        assert result.termination is Termination.BLOCKED
        assert all(q["outcome"] == "error:FewerThanFivePairs"
                   for q in trace.queries)
        assert all(t["fallback"] == "brake" for t in trace.ticks)
        assert result.ticks == pytest.approx(5.0 / cfg.dt, abs=1)

    def test_frame_window_always_has_five_frames(self):
        _, trace = run_oracle(scenario_by_id("smoke-09-crossing"))
        for query in trace.queries:
            assert len(query["scene"]["frames"]) == 5

    def test_window_pads_by_repetition_at_start(self):
        _, trace = run_oracle(scenario_by_id("smoke-01-straight"))
        first = trace.queries[0]["scene"]["frames"]
        assert all(frame == first[0] for frame in first)

    def test_fallback_reuses_last_plan_up_to_limit(self):
        class FlakyPlanner:
            name = "flaky"

            def __init__(self, good):
                self._good = good
                self._calls = 0

            def plan(self, request):
                self._calls += 1
                if self._calls > 1:
                    from driveloop.planners import PlannerResponse
                    return PlannerResponse(request.episode_id, request.tick,
                                           "no waypoints here")
                return self._good.plan(request)

        cfg = apply_overrides(HarnessConfig(), ["detector.t_block_s=5"])
        sc = scenario_by_id("smoke-01-straight")
        planner = FlakyPlanner(oracle_factory(cfg.oracle)(sc.route, sc.lights))
        result, trace = run_episode(sc, planner, cfg)
        fallbacks = [t["fallback"] for t in trace.ticks]
        assert "reuse" in fallbacks     # plans reused after the failures start
        assert "brake" in fallbacks     # then the emergency brake engages
        first_brake = fallbacks.index("brake")
        # 3 reuse windows of planner_cadence ticks follow the first failure
        assert fallbacks[first_brake - 1] == "reuse"
        assert result.termination is Termination.BLOCKED


class TestTerminationModes:
    def test_driving_off_route_terminates_deviated(self):
        import math
        from driveloop.geometry import Pose2D
        from driveloop.route import RouteSpec
        from driveloop.scenario import Scenario

        class StraightAheadPlanner:
            name = "straight-ahead"

            def plan(self, request):
                from driveloop.planners import PlannerResponse
                text = ("The next five passing waypoints are (0.00, 2.00), "
                        "(0.00, 4.00), (0.00, 6.00), (0.00, 8.00), "
                        "(0.00, 10.00).")
                return PlannerResponse(request.episode_id, request.tick, text)

        # ego spawns pointing 45 degrees away from a straight route; driving
        # dead ahead walks the lateral offset past the deviation limit
        route = RouteSpec(id="dev", vertices=((0.0, 0.0), (200.0, 0.0)))
        sc = Scenario(id="dev", route=route,
                      ego_spawn=Pose2D(0.0, 0.0, math.pi / 4))
        result, _ = run_episode(sc, StraightAheadPlanner(), HarnessConfig())
        assert result.termination is Termination.DEVIATED
        assert any(e.kind.value == "route_deviation" for e in result.events)
        assert result.rc < 100.0

    def test_timeout_when_blocked_threshold_never_fires(self):
        cfg = apply_overrides(HarnessConfig(),
                              ["timeout_s=2", "detector.t_block_s=900"])
        sc = fault_companions()["mute"]
        planner = fault_factory("mute", cfg.oracle)(sc.route, sc.lights)
        result, _ = run_episode(sc, planner, cfg)
        assert result.termination is Termination.TIMEOUT
        assert result.ticks == 20
        assert result.rc == 0.0


class TestDeterminismAndReplay:
    def test_repeated_runs_are_byte_identical(self):
        sc = scenario_by_id("smoke-07-light")
        cfg = HarnessConfig()
        blobs = []
        for _ in range(2):
            planner = oracle_factory(cfg.oracle)(sc.route, sc.lights)
            _, trace = run_episode(sc, planner, cfg)
            blobs.append(trace_to_bytes(trace))
        assert blobs[0] == blobs[1]

    def test_replay_reproduces_the_original_result(self):
        result, trace = run_oracle(scenario_by_id("smoke-04-curve"))
        replayed = replay(json.loads(trace_to_bytes(trace)))
        assert replayed.ds == result.ds
        assert replayed.rc == result.rc
        assert replayed.termination is result.termination
        assert replayed.ticks == result.ticks

    def test_replay_rejects_tampered_response(self):
        _, trace = run_oracle(scenario_by_id("smoke-01-straight"))
        tampered = json.loads(trace_to_bytes(trace))
        text = tampered["queries"][3]["response"]
        tampered["queries"][3]["response"] = text.replace("0.00, ", "0.90, ", 1)
        with pytest.raises(ReplayDivergence):
            replay(tampered)

    def test_replay_rejects_tampered_config(self):
        _, trace = run_oracle(scenario_by_id("smoke-01-straight"))
        tampered = json.loads(trace_to_bytes(trace))
        tampered["config"]["lookahead"] = 12.5
        with pytest.raises(FingerprintMismatch):
            replay(tampered)

    def test_report_normalization_divisor_comes_from_config(self):
        from driveloop.infractions import InfractionKind
        from driveloop.planners import fault_factory
        cfg = apply_overrides(HarnessConfig(), ["report_normalize_per=100"])
        sc = fault_companions()["red-light-runner"]
        provider = InProcessProvider(
            fault_factory("red-light-runner", cfg.oracle), "red-light-runner")
        run = run_benchmark([sc], provider, cfg)
        assert run.report.normalize_per == 100.0
        assert run.report.normalized_counts[InfractionKind.RED_LIGHT] == 100.0
        assert run.report.route_counts[InfractionKind.RED_LIGHT] == 1

    def test_benchmark_is_ordered_by_route_id_and_deterministic(self):
        cfg = HarnessConfig()
        scenarios = list(reversed(smoke_suite()[:4]))
        runs = []
        for _ in range(2):
            provider = InProcessProvider(oracle_factory(cfg.oracle), "oracle")
            run = run_benchmark(scenarios, provider, cfg)
            runs.append(run)
        ids = [t.route_id for t in runs[0].traces]
        assert ids == sorted(ids)
        blobs_a = [trace_to_bytes(t) for t in runs[0].traces]
        blobs_b = [trace_to_bytes(t) for t in runs[1].traces]
        assert blobs_a == blobs_b


class TestAttentionAblation:
    def test_prefix_toggles_only_the_prompt_channel(self):
        sc = scenario_by_id("smoke-09-crossing")
        base = HarnessConfig()
        on_cfg = apply_overrides(base, ["attention_prefix=on"])
        off_cfg = apply_overrides(base, ["attention_prefix=off"])
        on_result, on_trace = run_oracle(sc, on_cfg)
        off_result, off_trace = run_oracle(sc, off_cfg)

        assert all(q["prompt"].startswith(ATTENTION_PREFIX + " ")
                   for q in on_trace.queries)
        assert not any(q["prompt"].startswith("Pay attention")
                       for q in off_trace.queries)

        on_scenes = json.dumps([q["scene"] for q in on_trace.queries])
        off_scenes = json.dumps([q["scene"] for q in off_trace.queries])
        assert on_scenes == off_scenes
        assert on_result.ds == off_result.ds

    def test_wording_variant_flags_change_the_prompts(self):
        sc = scenario_by_id("smoke-01-straight")
        cfg = apply_overrides(HarnessConfig(), [
            "attention_prefix_variant=alt", "prompt_body_variant=table"])
        _, trace = run_oracle(sc, cfg)
        for q in trace.queries:
            assert q["prompt"].startswith(
                "Pay attention to your surroundings and do not break traffic "
                "rules. Your target point is (")
            assert "). What are the next five passing waypoints?" in q["prompt"]

    def test_fixed_target_mode_steps_targets_by_route_spacing(self):
        sc = scenario_by_id("smoke-03-straight")
        cfg = apply_overrides(HarnessConfig(), ["fixed_target=true"])
        _, trace = run_oracle(sc, cfg)
        # on a straight route driven on the centerline, the target's world arc
        # is the ego position plus the prompt's forward offset (quantized to
        # 0.01 by the prompt rendering, so cluster at one decimal)
        import re
        target_arcs = []
        for q in trace.queries:
            match = re.search(r"\(([-\d.]+), ([-\d.]+)\)", q["prompt"])
            ego_x = 0.0 if q["tick"] == 0 else \
                next(t["x"] for t in trace.ticks if t["tick"] == q["tick"])
            target_arcs.append(round(ego_x + float(match.group(2)), 1))
        distinct = sorted(set(target_arcs))
        # a handful of fixed targets, not one per query
        assert len(distinct) < len(target_arcs) / 3
        # consecutive fixed targets step by the route's target spacing
        steps = {round(b - a, 6) for a, b in zip(distinct, distinct[1:])}
        assert steps == {sc.route.target_spacing}


class TestSceneFrame:
    def test_scene_frame_is_json_serializable_and_complete(self):
        sc = scenario_by_id("smoke-10-crossing")
        cfg = HarnessConfig()
        from driveloop.scenario import materialize_npcs
        world = WorldState(tick=0, dt=cfg.dt,
                           ego=EgoState(pose=sc.ego_spawn, speed=0.0),
                           npcs=materialize_npcs(sc, 100, cfg.dt),
                           lights=sc.lights)
        frame = scene_frame(world)
        blob = json.dumps(frame)
        parsed = json.loads(blob)
        assert parsed["ego"]["cos_yaw"] == frame["ego"]["cos_yaw"]
        assert parsed["npcs"][0]["kind"] == "vehicle"
