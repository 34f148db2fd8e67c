"""Two-loop PID stage: a parsed five-waypoint plan in, steer/throttle/brake out."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geometry import clamp
from .route import DEFAULT_WAYPOINT_DT, Trajectory
from .world import ControlCommand


@dataclass(frozen=True)
class PidState:
    """Gains plus the running integral and previous error of one controller."""

    kp: float
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = 10.0
    integral: float = 0.0
    prev_error: float = 0.0

    def reset(self) -> "PidState":
        return replace(self, integral=0.0, prev_error=0.0)


def pid_step(state: PidState, error: float, dt: float) -> tuple[float, PidState]:
    """One PID update. The integral accumulates before use and is clamped."""
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    integral = clamp(state.integral + error * dt,
                     -state.integral_limit, state.integral_limit)
    derivative = (error - state.prev_error) / dt
    output = state.kp * error + state.ki * integral + state.kd * derivative
    return output, replace(state, integral=integral, prev_error=error)


@dataclass(frozen=True)
class ControllerConfig:
    heading: PidState = PidState(kp=0.9, ki=0.0, kd=0.1)
    speed: PidState = PidState(kp=0.5, ki=0.05, kd=0.0)
    aim_indices: tuple[int, int] = (2, 3)
    brake_speed_threshold: float = 0.4  # m/s; below this, hold a full stop
    max_target_speed: float = 8.0       # m/s
    wp_dt: float = DEFAULT_WAYPOINT_DT

    def __post_init__(self) -> None:
        if self.brake_speed_threshold < 0.0 or self.max_target_speed < 0.0:
            raise ValueError("controller thresholds must be >= 0")

    def initial_states(self) -> tuple[PidState, PidState]:
        return self.heading.reset(), self.speed.reset()


def waypoints_to_control(traj: Trajectory, ego_speed: float,
                         cfg: ControllerConfig,
                         heading_state: PidState, speed_state: PidState,
                         dt: float = 0.1,
                         ) -> tuple[ControlCommand, PidState, PidState]:
    """Track a five-waypoint plan with a heading PID and a speed PID.

    The aim direction is the mean of the configured aim waypoints; its bearing
    from the forward axis (right-positive) feeds the heading PID. The desired
    speed is the mean gap between consecutive waypoints divided by the waypoint
    time spacing, capped at max_target_speed. A desired speed below
    brake_speed_threshold forces a full stop (throttle 0, brake 1) and leaves
    the speed PID state untouched.
    """
    wps = traj.waypoints
    i, j = cfg.aim_indices
    aim_x = (wps[i].x + wps[j].x) / 2.0
    aim_y = (wps[i].y + wps[j].y) / 2.0
    heading_error = math.atan2(aim_x, aim_y)
    steer_raw, heading_state = pid_step(heading_state, heading_error, dt)
    steer = clamp(steer_raw, -1.0, 1.0)

    gap_sum = 0.0
    for a, b in zip(wps, wps[1:]):
        dx = b.x - a.x
        dy = b.y - a.y
        gap_sum += math.sqrt(dx * dx + dy * dy)
    desired = min(gap_sum / (len(wps) - 1) / cfg.wp_dt, cfg.max_target_speed)

    if desired < cfg.brake_speed_threshold:
        return (ControlCommand(steer=steer, throttle=0.0, brake=1.0),
                heading_state, speed_state)

    accel_raw, speed_state = pid_step(speed_state, desired - ego_speed, dt)
    if accel_raw >= 0.0:
        cmd = ControlCommand(steer=steer, throttle=clamp(accel_raw, 0.0, 1.0),
                             brake=0.0)
    else:
        cmd = ControlCommand(steer=steer, throttle=0.0,
                             brake=clamp(-accel_raw, 0.0, 1.0))
    return cmd, heading_state, speed_state
