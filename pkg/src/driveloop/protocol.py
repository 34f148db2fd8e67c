"""Textual planning codec: prompt rendering, answer rendering, tolerant parsing.

The two canonical strings are the wire-visible grammar (see docs/grammar.ebnf).
Coordinates are rendered with exactly two decimals, half-even rounding, a bare
'-' for negatives and never a '+'. Parsing accepts arbitrary text and extracts
the first five parenthesized signed-decimal pairs.
"""

from __future__ import annotations

import math
import re

from .route import Trajectory

ATTENTION_PREFIX = (
    "Pay attention to your surroundings and do not violate traffic rules."
)
# Alternate phrasing seen in the wild; selectable via config.
ATTENTION_PREFIX_ALT = (
    "Pay attention to your surroundings and do not break traffic rules."
)

PROMPT_BODY_CANONICAL = "Your target waypoint is ({pair}), what are the next five passing waypoints?"
PROMPT_BODY_TABLE = "Your target point is ({pair}). What are the next five passing waypoints?"
ANSWER_LEAD = "The next five passing waypoints are "

COORDINATE_BOUND = 200.0  # meters; anything beyond is treated as hallucinated

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PAIR_RE = re.compile(r"\(\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*\)")


class AnswerParseError(ValueError):
    """Base class for malformed planner output."""


class FewerThanFivePairs(AnswerParseError):
    pass


class NonFiniteNumber(AnswerParseError):
    pass


class CoordinateOutOfBounds(AnswerParseError):
    pass


def fmt2(value: float) -> str:
    """Render a coordinate with exactly two decimals; negative zero is '0.00'."""
    s = f"{value:.2f}"
    if s == "-0.00":
        return "0.00"
    return s


def format_pair(x: float, y: float) -> str:
    return f"({fmt2(x)}, {fmt2(y)})"


def format_prompt(target, attention: bool,
                  prefix: str = ATTENTION_PREFIX,
                  body: str = PROMPT_BODY_CANONICAL) -> str:
    """Render the planning question for a target waypoint.

    With attention=True the cautionary prefix is prepended, separated by a
    single space; the body is otherwise identical.
    """
    text = body.format(pair=f"{fmt2(target.x)}, {fmt2(target.y)}")
    if attention:
        return prefix + " " + text
    return text


def format_answer(traj: Trajectory) -> str:
    pairs = ", ".join(format_pair(w.x, w.y) for w in traj.waypoints)
    return ANSWER_LEAD + pairs + "."


def parse_answer(text: str, bound: float = COORDINATE_BOUND) -> Trajectory:
    """Extract the first five coordinate pairs from arbitrary model output.

    Tolerates surrounding prose, variable whitespace, missing separators and a
    trailing period. Raises FewerThanFivePairs, NonFiniteNumber or
    CoordinateOutOfBounds, and nothing else, for any input string.
    """
    matches = _PAIR_RE.findall(text)
    if len(matches) < 5:
        raise FewerThanFivePairs(
            f"found {len(matches)} coordinate pairs, need 5")
    pairs = []
    for xs, ys in matches[:5]:
        x = float(xs)
        y = float(ys)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise NonFiniteNumber(f"non-finite coordinate in pair ({xs}, {ys})")
        if abs(x) > bound or abs(y) > bound:
            raise CoordinateOutOfBounds(
                f"coordinate beyond {bound} m in pair ({xs}, {ys})")
        pairs.append((x, y))
    return Trajectory.from_pairs(pairs)
