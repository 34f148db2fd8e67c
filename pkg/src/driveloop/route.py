"""Route representation, arc-length projection, and ego-frame waypoint generation.

Ego-frame convention used throughout: x is lateral and positive to the RIGHT of
the heading, y is longitudinal and positive AHEAD. The lateral offset returned
by projection uses the opposite (left-positive) sign, which is the usual
signed-distance convention for path tracking.

The projection and arc-walk helpers deliberately stick to +,-,*,/ and sqrt so
that a peer implementing the same arithmetic from serialized route data arrives
at bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import to_ego_frame
from .world import EgoState

DEFAULT_WAYPOINT_DT = 0.5  # seconds between consecutive planned waypoints
WAYPOINT_COUNT = 5


@dataclass(frozen=True)
class TargetWaypoint:
    """Ego-frame waypoint: x lateral (right-positive), y longitudinal (ahead)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"waypoint coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class Trajectory:
    """Exactly five ego-frame waypoints ordered by increasing time."""

    waypoints: tuple[TargetWaypoint, ...]

    def __post_init__(self) -> None:
        if len(self.waypoints) != WAYPOINT_COUNT:
            raise ValueError(f"trajectory needs {WAYPOINT_COUNT} waypoints, got {len(self.waypoints)}")

    @classmethod
    def from_pairs(cls, pairs) -> "Trajectory":
        return cls(tuple(TargetWaypoint(float(x), float(y)) for x, y in pairs))

    def pairs(self) -> tuple[tuple[float, float], ...]:
        return tuple((w.x, w.y) for w in self.waypoints)


@dataclass(frozen=True)
class RouteSpec:
    """Polyline route with cached cumulative arc lengths."""

    id: str
    vertices: tuple[tuple[float, float], ...]
    speed_limit: float = 6.0
    target_spacing: float = 20.0
    seg_lengths: tuple[float, ...] = field(init=False, repr=False)
    cum_lengths: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.vertices) < 2:
            raise ValueError(f"route {self.id}: needs at least 2 vertices")
        if self.speed_limit <= 0.0:
            raise ValueError(f"route {self.id}: speed_limit must be > 0")
        segs = []
        cums = [0.0]
        for (ax, ay), (bx, by) in zip(self.vertices, self.vertices[1:]):
            dx = bx - ax
            dy = by - ay
            length = math.sqrt(dx * dx + dy * dy)
            if length == 0.0:
                raise ValueError(f"route {self.id}: consecutive vertices must be distinct")
            segs.append(length)
            cums.append(cums[-1] + length)
        object.__setattr__(self, "seg_lengths", tuple(segs))
        object.__setattr__(self, "cum_lengths", tuple(cums))

    @property
    def length(self) -> float:
        return self.cum_lengths[-1]


def project_to_route(route: RouteSpec, x: float, y: float) -> tuple[float, float]:
    """Arc length and left-positive lateral offset of the nearest route point.

    Ties between equidistant segments resolve to the smaller arc length.
    """
    best_d2 = math.inf
    best_s = 0.0
    best_off = 0.0
    for i, seg_len in enumerate(route.seg_lengths):
        ax, ay = route.vertices[i]
        bx, by = route.vertices[i + 1]
        dx = bx - ax
        dy = by - ay
        t = ((x - ax) * dx + (y - ay) * dy) / (seg_len * seg_len)
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        qx = ax + t * dx
        qy = ay + t * dy
        ex = x - qx
        ey = y - qy
        d2 = ex * ex + ey * ey
        if d2 < best_d2:
            best_d2 = d2
            best_s = route.cum_lengths[i] + t * seg_len
            best_off = (dx * ey - dy * ex) / seg_len
    return best_s, best_off


class RouteTracker:
    """Monotone projection onto a route over the course of one episode.

    Plain nearest-point projection is ambiguous on self-approaching routes, so
    the tracker only considers candidates at or ahead of the last arc position
    (minus a small slack) and never lets the arc length decrease.
    """

    def __init__(self, route: RouteSpec, back_tolerance: float = 0.5):
        self.route = route
        self.back_tolerance = back_tolerance
        self._s = 0.0

    @property
    def s(self) -> float:
        return self._s

    def project(self, x: float, y: float) -> tuple[float, float]:
        route = self.route
        floor = self._s - self.back_tolerance
        best_d2 = math.inf
        best_s = self._s
        best_off = 0.0
        for i, seg_len in enumerate(route.seg_lengths):
            if route.cum_lengths[i + 1] < floor:
                continue
            ax, ay = route.vertices[i]
            bx, by = route.vertices[i + 1]
            dx = bx - ax
            dy = by - ay
            t = ((x - ax) * dx + (y - ay) * dy) / (seg_len * seg_len)
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            s_cand = route.cum_lengths[i] + t * seg_len
            if s_cand < floor:
                continue
            qx = ax + t * dx
            qy = ay + t * dy
            ex = x - qx
            ey = y - qy
            d2 = ex * ex + ey * ey
            if d2 < best_d2:
                best_d2 = d2
                best_s = s_cand
                best_off = (dx * ey - dy * ex) / seg_len
        self._s = max(self._s, best_s)
        return self._s, best_off


def route_completion(route: RouteSpec, s: float) -> float:
    """Percentage of the route arc length covered, clamped to [0, 100]."""
    pct = 100.0 * s / route.length
    if pct < 0.0:
        return 0.0
    if pct > 100.0:
        return 100.0
    return pct


def point_at_arc(route: RouteSpec, s: float, extrapolate: bool = False,
                 ) -> tuple[float, float]:
    """World point at arc length s along the polyline.

    With extrapolate=True, arcs beyond the route end continue straight along
    the final segment's heading instead of clamping to the last vertex.
    """
    if s <= 0.0:
        return route.vertices[0]
    total = route.length
    if s >= total:
        lx, ly = route.vertices[-1]
        if not extrapolate:
            return lx, ly
        ax, ay = route.vertices[-2]
        seg_len = route.seg_lengths[-1]
        ux = (lx - ax) / seg_len
        uy = (ly - ay) / seg_len
        extra = s - total
        return lx + extra * ux, ly + extra * uy
    i = 0
    while route.cum_lengths[i + 1] < s:
        i += 1
    ax, ay = route.vertices[i]
    bx, by = route.vertices[i + 1]
    t = (s - route.cum_lengths[i]) / route.seg_lengths[i]
    return ax + t * (bx - ax), ay + t * (by - ay)


def next_target(route: RouteSpec, ego: EgoState, lookahead: float,
                s: float | None = None) -> TargetWaypoint:
    """Navigation target at a fixed arc ahead of the ego, in the ego frame.

    The arc is clamped to the route end. Pass s to reuse an already tracked
    arc position instead of re-projecting.
    """
    if s is None:
        s, _ = project_to_route(route, ego.pose.x, ego.pose.y)
    s_target = min(s + lookahead, route.length)
    px, py = point_at_arc(route, s_target)
    x_lat, y_lon = to_ego_frame(ego.pose, px, py)
    return TargetWaypoint(x_lat, y_lon)


def oracle_waypoints(route: RouteSpec, ego: EgoState, speeds,
                     wp_dt: float = DEFAULT_WAYPOINT_DT,
                     extrapolate: bool = True) -> Trajectory:
    """Five ego-frame centerline points reached by driving the given speeds.

    speeds[k] is the planned speed over interval k, so the arc advances by
    speeds[k]*wp_dt per waypoint.
    """
    if len(speeds) != WAYPOINT_COUNT:
        raise ValueError(f"need {WAYPOINT_COUNT} speeds, got {len(speeds)}")
    s, _ = project_to_route(route, ego.pose.x, ego.pose.y)
    out = []
    for v in speeds:
        s = s + v * wp_dt
        px, py = point_at_arc(route, s, extrapolate=extrapolate)
        x_lat, y_lon = to_ego_frame(ego.pose, px, py)
        out.append(TargetWaypoint(x_lat, y_lon))
    return Trajectory(tuple(out))
