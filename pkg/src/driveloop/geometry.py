"""2D geometry primitives shared by the simulator, route engine, and detectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def clamp(v: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, v))


@dataclass(frozen=True)
class Pose2D:
    """World-frame pose: x east, y north, yaw counterclockwise from +x."""

    x: float
    y: float
    yaw: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", normalize_angle(self.yaw))


def to_frame(cx: float, cy: float, cos_yaw: float, sin_yaw: float,
             px: float, py: float) -> tuple[float, float]:
    """World point -> (lateral, longitudinal) in a frame at (cx, cy) with the
    given heading cosine/sine. Lateral is positive to the right of the heading,
    longitudinal is positive ahead. Uses only +,-,*,/ so peers that receive the
    heading components over the wire reproduce it bit-exactly."""
    rx = px - cx
    ry = py - cy
    return rx * sin_yaw - ry * cos_yaw, rx * cos_yaw + ry * sin_yaw


def to_ego_frame(ego: Pose2D, px: float, py: float) -> tuple[float, float]:
    """World point -> ego frame (x right-positive, y forward)."""
    return to_frame(ego.x, ego.y, math.cos(ego.yaw), math.sin(ego.yaw), px, py)


def from_ego_frame(ego: Pose2D, x_lat: float, y_lon: float) -> tuple[float, float]:
    """Ego-frame point (x right-positive, y forward) -> world coordinates."""
    c = math.cos(ego.yaw)
    s = math.sin(ego.yaw)
    return ego.x + x_lat * s + y_lon * c, ego.y - x_lat * c + y_lon * s


@dataclass(frozen=True)
class Obb:
    """Oriented bounding box: half_length along the heading, half_width across it."""

    cx: float
    cy: float
    yaw: float
    half_length: float
    half_width: float

    def corners(self) -> list[tuple[float, float]]:
        c = math.cos(self.yaw)
        s = math.sin(self.yaw)
        hl = self.half_length
        hw = self.half_width
        out = []
        for dl, dw in ((hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)):
            out.append((self.cx + dl * c - dw * s, self.cy + dl * s + dw * c))
        return out

    def axes(self) -> list[tuple[float, float]]:
        c = math.cos(self.yaw)
        s = math.sin(self.yaw)
        return [(c, s), (-s, c)]


def _project_interval(corners: list[tuple[float, float]],
                      ax: float, ay: float) -> tuple[float, float]:
    dots = [cx * ax + cy * ay for cx, cy in corners]
    return min(dots), max(dots)


def obb_overlap(a: Obb, b: Obb) -> bool:
    """Separating-axis intersection test for two rectangles.

    Boundary contact (touching corners or edges) counts as overlap.
    """
    ca = a.corners()
    cb = b.corners()
    for ax, ay in a.axes() + b.axes():
        lo_a, hi_a = _project_interval(ca, ax, ay)
        lo_b, hi_b = _project_interval(cb, ax, ay)
        if hi_a < lo_b or hi_b < lo_a:
            return False
    return True


def segment_intersection(p1: tuple[float, float], p2: tuple[float, float],
                         q1: tuple[float, float], q2: tuple[float, float],
                         ) -> tuple[float, float] | None:
    """Parameters (t, u) where segment p crosses segment q, or None.

    t is the fraction along p1->p2 and u along q1->q2; both in [0, 1] when the
    segments intersect. Parallel segments report no intersection.
    """
    rx = p2[0] - p1[0]
    ry = p2[1] - p1[1]
    sx = q2[0] - q1[0]
    sy = q2[1] - q1[1]
    denom = rx * sy - ry * sx
    if denom == 0.0:
        return None
    wx = q1[0] - p1[0]
    wy = q1[1] - p1[1]
    t = (wx * sy - wy * sx) / denom
    u = (wx * ry - wy * rx) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return t, u
    return None
