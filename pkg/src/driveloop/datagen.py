"""Training-data construction: trajectory QA pairs from autopilot traces,
fixed-template question reformulation, evenly spaced frame sampling, and
seeded dataset mixture streams."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

from .geometry import Pose2D, to_ego_frame
from .protocol import format_answer, format_prompt
from .route import RouteSpec, TargetWaypoint, Trajectory, point_at_arc

TASKS = ("trajectory", "risk", "suggestion", "action", "object",
         "attention", "reasoning", "description")


class InsufficientFuture(ValueError):
    pass


class UnknownSourceKind(KeyError):
    pass


class UnknownTag(KeyError):
    pass


@dataclass(frozen=True)
class QAPair:
    frames: tuple[str, ...]
    question: str
    answer: str
    task: str
    source: str

    def __post_init__(self) -> None:
        if len(self.frames) != 5:
            raise ValueError(f"QA pair needs 5 frame refs, got {len(self.frames)}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")

    def to_dict(self) -> dict:
        return {"frames": list(self.frames), "question": self.question,
                "answer": self.answer, "task": self.task, "source": self.source}

    @classmethod
    def from_dict(cls, raw: dict) -> "QAPair":
        return cls(frames=tuple(raw["frames"]), question=raw["question"],
                   answer=raw["answer"], task=raw["task"], source=raw["source"])


def sample_frames(sequence_length: int, k: int = 5) -> list[int]:
    """k frame indices with even spacing over a sequence.

    Indices are floor(j*(L-1)/(k-1) + 0.5) for j = 0..k-1 (ties round up);
    sequences shorter than k repeat the last index.
    """
    if sequence_length < 1:
        raise ValueError(f"sequence_length must be >= 1, got {sequence_length}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if sequence_length < k:
        indices = list(range(sequence_length))
        indices.extend([sequence_length - 1] * (k - sequence_length))
        return indices
    if k == 1:
        return [0]
    step = (sequence_length - 1) / (k - 1)
    return [math.floor(j * step + 0.5) for j in range(k)]


# Fixed question templates per source kind. Canonical wording; the "table"
# variants reflect the shorter phrasings some dataset cards use.
TEMPLATES = {
    "drama_risk": "What is the potential risk in the current scenario?",
    "drama_suggestion": "What is the suggested next action?",
    "bddx_action": "What is the action of the ego car?",
    "had_attention": "What the driver should pay attention?",
}
TEMPLATES_TABLE = dict(TEMPLATES)
TEMPLATES_TABLE["drama_risk"] = "What is the potential risk?"
TEMPLATES_TABLE["bddx_action"] = "What is the action of ego car?"

_TASK_BY_KIND = {
    "drama_risk": "risk",
    "drama_suggestion": "suggestion",
    "bddx_action": "action",
    "had_attention": "attention",
}
_SOURCE_BY_KIND = {
    "drama_risk": "drama",
    "drama_suggestion": "drama",
    "bddx_action": "bddx",
    "had_attention": "had",
}


def reformulate(source_kind: str, record: dict, variant: str = "canonical",
                ) -> QAPair:
    """Rewrite a source record into its fixed-template question.

    The record needs a "description" (kept verbatim as the answer) and a
    "frames" sequence, which is resampled to five evenly spaced entries.
    """
    templates = TEMPLATES_TABLE if variant == "table" else TEMPLATES
    if source_kind not in templates:
        raise UnknownSourceKind(
            f"no fixed template for source kind {source_kind!r}; "
            f"known: {sorted(templates)}")
    frames = list(record["frames"])
    if not frames:
        raise ValueError("record has no frames")
    picked = [str(frames[i]) for i in sample_frames(len(frames))]
    return QAPair(frames=tuple(picked), question=templates[source_kind],
                  answer=str(record["description"]),
                  task=_TASK_BY_KIND[source_kind],
                  source=_SOURCE_BY_KIND[source_kind])


def make_trajectory_pair(route: RouteSpec, trace_ticks: list[dict], tick: int,
                         lookahead: float = 20.0, wp_dt: float = 0.5,
                         dt: float = 0.1, source: str = "carla",
                         ) -> QAPair:
    """One planning QA pair at a tick of a recorded autopilot trace.

    The question carries the navigation target at that tick (no attention
    prefix; that is an inference-time addition) and the answer encodes the
    trace's true future positions at the waypoint spacing, expressed in the
    ego frame of the query tick.
    """
    stride = int(round(wp_dt / dt))
    if tick < 0 or tick >= len(trace_ticks):
        raise ValueError(f"tick {tick} outside trace of {len(trace_ticks)} ticks")
    if tick + 5 * stride > len(trace_ticks) - 1:
        raise InsufficientFuture(
            f"tick {tick} needs {5 * stride} future ticks, trace has "
            f"{len(trace_ticks) - 1 - tick}")
    rec = trace_ticks[tick]
    pose = Pose2D(rec["x"], rec["y"], rec["yaw"])
    s_target = min(rec["s"] + lookahead, route.length)
    target = TargetWaypoint(*to_ego_frame(pose, *point_at_arc(route, s_target)))
    question = format_prompt(target, attention=False)

    future = []
    for j in range(1, 6):
        frec = trace_ticks[tick + j * stride]
        future.append(to_ego_frame(pose, frec["x"], frec["y"]))
    answer = format_answer(Trajectory.from_pairs(future))

    frames = tuple(f"{route.id}:{max(0, tick - 4 + i)}" for i in range(5))
    return QAPair(frames=frames, question=question, answer=answer,
                  task="trajectory", source=source)


@dataclass(frozen=True)
class MixtureSpec:
    """Per-epoch dataset repetition factors plus the shuffle seed."""

    streams: tuple[tuple[str, int], ...]
    seed: int = 0

    def __post_init__(self) -> None:
        for tag, repeat in self.streams:
            if repeat < 1:
                raise ValueError(f"stream {tag!r}: repeat factor must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "MixtureSpec":
        return cls(streams=tuple((str(s["source"]), int(s["repeat"]))
                                 for s in raw["streams"]),
                   seed=int(raw.get("seed", 0)))


def build_mixture(spec: MixtureSpec, datasets: dict[str, list[QAPair]],
                  ) -> list[QAPair]:
    """Concatenate every dataset by its repeat factor, then shuffle with the
    spec seed. Emitted counts per source are exactly size * factor."""
    stream: list[QAPair] = []
    for tag, repeat in spec.streams:
        if tag not in datasets:
            raise UnknownTag(f"mixture references unknown dataset tag {tag!r}")
        stream.extend(datasets[tag] * repeat)
    random.Random(spec.seed).shuffle(stream)
    return stream


def write_qa_jsonl(pairs, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_dict(), sort_keys=True,
                                separators=(",", ":")) + "\n")


def read_qa_jsonl(path: str) -> list[QAPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                pairs.append(QAPair.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad QA record: {exc}") from exc
    return pairs
