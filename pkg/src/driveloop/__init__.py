"""driveloop: a deterministic closed-loop driving evaluation harness.

Planners exchange text with the harness: a prompt naming an ego-frame target
waypoint goes out, five planned waypoints come back as text, a two-loop PID
stage turns them into steer/throttle/brake, and an infraction-aware scorer
produces route completion, infraction score and driving score per route.
"""

from .config import HarnessConfig, apply_overrides, config_fingerprint, load_config
from .control import ControllerConfig, PidState, pid_step, waypoints_to_control
from .geometry import Pose2D
from .harness import (BenchmarkRun, EpisodeTrace, run_benchmark, run_episode,
                      replay, scene_frame)
from .infractions import (InfractionEvent, InfractionKind, InfractionMonitor,
                          PenaltyTable, infraction_score)
from .oracle import OracleConfig
from .planners import (MutePlanner, OraclePlanner, PlannerRequest,
                       PlannerResponse, StopPlanner, fault_factory,
                       oracle_factory)
from .protocol import (AnswerParseError, format_answer, format_prompt,
                       parse_answer)
from .route import (RouteSpec, RouteTracker, TargetWaypoint, Trajectory,
                    next_target, oracle_waypoints, project_to_route,
                    route_completion)
from .scenario import (Scenario, load_route, load_scenario, save_route,
                       save_scenario)
from .scoring import (BenchmarkReport, EpisodeResult, Termination, aggregate,
                      episode_score)
from .suites import fault_companions, smoke_suite
from .textmetrics import ScoredPair, bleu, cider_d, tokenize
from .world import (ControlCommand, EgoState, LightPhase, NpcAgent, NpcKind,
                    TrafficLight, VehicleParams, WorldState, check_collisions,
                    light_phase, step_world)

__version__ = "0.1.0"
