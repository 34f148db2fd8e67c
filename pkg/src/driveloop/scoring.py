"""Per-route and aggregate driving metrics: RC, IS, DS and the report table."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .infractions import InfractionEvent, InfractionKind


class Termination(str, Enum):
    COMPLETED = "completed"
    TIMEOUT = "timeout"
    BLOCKED = "blocked"
    DEVIATED = "deviated"


class EmptyBenchmark(ValueError):
    pass


def episode_score(rc: float, infraction: float) -> float:
    """Driving score: route completion weighted by the infraction score."""
    if not 0.0 <= rc <= 100.0:
        raise ValueError(f"route completion must be in [0, 100], got {rc}")
    if not 0.0 < infraction <= 1.0:
        raise ValueError(f"infraction score must be in (0, 1], got {infraction}")
    return rc * infraction


@dataclass(frozen=True)
class EpisodeResult:
    route_id: str
    rc: float
    infraction: float
    ds: float
    events: tuple[InfractionEvent, ...]
    ticks: int
    termination: Termination

    def __post_init__(self) -> None:
        if abs(self.ds - self.rc * self.infraction) > 1e-9:
            raise ValueError(f"ds {self.ds} inconsistent with rc*is "
                             f"{self.rc * self.infraction}")

    @classmethod
    def build(cls, route_id: str, rc: float, infraction: float, events,
              ticks: int, termination: Termination) -> "EpisodeResult":
        return cls(route_id=route_id, rc=rc, infraction=infraction,
                   ds=episode_score(rc, infraction), events=tuple(events),
                   ticks=ticks, termination=termination)


# Column order of the plain-text report.
REPORT_KINDS = (InfractionKind.RED_LIGHT, InfractionKind.COLLISION_VEHICLE,
                InfractionKind.AGENT_BLOCKED)


@dataclass(frozen=True)
class BenchmarkReport:
    mean_ds: float
    mean_rc: float
    mean_is: float
    route_counts: dict[InfractionKind, int]
    normalized_counts: dict[InfractionKind, float]
    normalize_per: float
    rows: tuple[EpisodeResult, ...] = field(repr=False)


def aggregate(results, normalize_per: float = 10.0) -> BenchmarkReport:
    """Unweighted means over routes plus route-level accident counters.

    A counter counts routes containing at least one event of its kind, never
    raw event totals. normalized_counts rescales those counts per
    normalize_per routes.
    """
    rows = tuple(results)
    if not rows:
        raise EmptyBenchmark("cannot aggregate an empty result list")
    n = len(rows)
    counts = {kind: 0 for kind in InfractionKind}
    for row in rows:
        kinds_seen = {event.kind for event in row.events}
        for kind in kinds_seen:
            counts[kind] += 1
    normalized = {kind: counts[kind] / n * normalize_per for kind in InfractionKind}
    return BenchmarkReport(
        mean_ds=sum(r.ds for r in rows) / n,
        mean_rc=sum(r.rc for r in rows) / n,
        mean_is=sum(r.infraction for r in rows) / n,
        route_counts=counts,
        normalized_counts=normalized,
        normalize_per=normalize_per,
        rows=rows,
    )


_COLUMNS = ("Driving score", "Route compl", "Infrac. score",
            "Red light", "Collision vehicle", "Agent blocked")


def render_metrics_row(ds: float, rc: float, infraction: float,
                       red: float, collision: float, blocked: float) -> str:
    return " / ".join(f"{v:.2f}" for v in (ds, rc, infraction, red, collision, blocked))


def render_table(report: BenchmarkReport) -> str:
    """Aligned plain-text summary table plus one row per route."""
    header = " | ".join(f"{c:>17}" for c in _COLUMNS)
    summary = (report.mean_ds, report.mean_rc, report.mean_is,
               report.normalized_counts[InfractionKind.RED_LIGHT],
               report.normalized_counts[InfractionKind.COLLISION_VEHICLE],
               report.normalized_counts[InfractionKind.AGENT_BLOCKED])
    lines = [header,
             "-" * len(header),
             " | ".join(f"{v:>17.2f}" for v in summary),
             "",
             f"(accident columns are routes with >=1 event, per "
             f"{report.normalize_per:g} routes; raw route counts: "
             + ", ".join(f"{k.value}={report.route_counts[k]}" for k in REPORT_KINDS)
             + ")",
             "",
             f"{'route':>24} | {'DS':>8} | {'RC':>8} | {'IS':>6} | "
             f"{'ticks':>7} | termination"]
    for row in report.rows:
        lines.append(f"{row.route_id:>24} | {row.ds:>8.2f} | {row.rc:>8.2f} | "
                     f"{row.infraction:>6.2f} | {row.ticks:>7} | "
                     f"{row.termination.value}")
    return "\n".join(lines) + "\n"


def report_to_dict(report: BenchmarkReport) -> dict:
    return {
        "mean_ds": report.mean_ds,
        "mean_rc": report.mean_rc,
        "mean_is": report.mean_is,
        "normalize_per": report.normalize_per,
        "route_counts": {k.value: report.route_counts[k] for k in InfractionKind},
        "normalized_counts": {k.value: report.normalized_counts[k]
                              for k in InfractionKind},
        "routes": [
            {
                "route_id": r.route_id,
                "rc": r.rc,
                "is": r.infraction,
                "ds": r.ds,
                "ticks": r.ticks,
                "termination": r.termination.value,
                "events": [
                    {"kind": e.kind.value, "tick": e.tick, "detail": e.detail}
                    for e in r.events
                ],
            }
            for r in report.rows
        ],
    }
